#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqtag/corpus.hpp"
#include "seqtag/recurrent.hpp"
#include "seqtag/rng.hpp"
#include "seqtag/tape.hpp"
#include "seqtag/tensor.hpp"

namespace seqtag {

// Symbol inventories built from the training split only.
//
// Word ids: 0 is UNK, then training forms in first-occurrence order.
// Character ids: 0 unknown character, 1 word start, 2 word end, then code
// points in first-occurrence order. Bytes need no inventory: ids 0..255 are
// the byte values, 256 and 257 the start and end markers.
class Vocab {
 public:
  static constexpr std::size_t kUnkWord = 0;
  static constexpr std::size_t kUnkChar = 0;
  static constexpr std::size_t kCharStart = 1;
  static constexpr std::size_t kCharEnd = 2;
  static constexpr std::size_t kByteStart = 256;
  static constexpr std::size_t kByteEnd = 257;
  static constexpr std::size_t kByteSymbols = 258;

  Vocab();

  // Throws DataError on an empty corpus.
  static Vocab build(const Corpus& train);
  // Reassembles a vocabulary from serialized parts: `words` and `counts`
  // exclude the UNK slot, `chars` excludes the three reserved slots.
  static Vocab from_parts(std::vector<std::string> words, std::vector<std::size_t> counts,
                          std::vector<char32_t> chars);

  std::size_t word_id(std::string_view form) const;
  std::size_t char_id(char32_t cp) const;
  std::size_t word_count() const { return words_.size(); }
  std::size_t char_count() const { return chars_.size(); }

  // Raw training count of the exact form; 0 for anything unseen.
  std::size_t frequency(std::string_view form) const;
  bool is_oov(std::string_view form) const { return frequency(form) == 0; }
  std::size_t frequency_of_id(std::size_t id) const { return counts_[id]; }

  // Indexed by id; slot 0 (UNK) is an empty string.
  const std::vector<std::string>& words() const { return words_; }
  // Indexed by id; the reserved slots hold 0.
  const std::vector<char32_t>& chars() const { return chars_; }
  const std::vector<std::size_t>& counts() const { return counts_; }

 private:
  std::vector<std::string> words_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, std::size_t> word_index_;
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, std::size_t> char_index_;
};

enum class ReprMode { w, c, b, cb, wc };

std::string to_string(ReprMode mode);
// Accepts "w", "c", "b", "cb", "c+b", "wc", "w+c".
ReprMode repr_mode_from_string(std::string_view s);

inline bool uses_words(ReprMode m) { return m == ReprMode::w || m == ReprMode::wc; }
inline bool uses_chars(ReprMode m) {
  return m == ReprMode::c || m == ReprMode::cb || m == ReprMode::wc;
}
inline bool uses_bytes(ReprMode m) { return m == ReprMode::b || m == ReprMode::cb; }

struct ReprConfig {
  ReprMode mode = ReprMode::wc;
  bool use_pretrained = false;
  std::size_t word_dim = 128;
  std::size_t subtoken_dim = 100;
  std::size_t hidden_dim = 100;
  CellKind cell = CellKind::lstm;

  // word_dim for words, 2 * hidden_dim per subtoken level.
  std::size_t output_dim() const;
};

enum class SubtokenLevel { character, byte };

// [start, s_1 .. s_k, end] where s are code points or UTF-8 bytes.
std::vector<std::size_t> subtoken_ids(std::string_view word, SubtokenLevel level,
                                      const Vocab& vocab);

// Embedding-table initialization: uniform in +-sqrt(3 / dim) per row.
void init_embedding(Tensor& table, Rng& rng);

// Embedding tables and subtoken bi-LSTMs producing one vector per token.
// Concatenation order is word, char, byte (whichever are present).
class ReprLayer {
 public:
  static ReprLayer create(ParameterStore& store, const Vocab& vocab, const ReprConfig& config,
                          Rng& rng);
  static ReprLayer bind(ParameterStore& store, const Vocab& vocab, const ReprConfig& config);

  const ReprConfig& config() const { return config_; }
  std::size_t output_dim() const;

  Parameter* word_table() const { return words_; }
  Parameter* char_table() const { return chars_; }
  Parameter* byte_table() const { return bytes_; }
  const Cell& char_forward() const { return char_f_; }
  const Cell& char_reverse() const { return char_r_; }
  const Cell& byte_forward() const { return byte_f_; }
  const Cell& byte_reverse() const { return byte_r_; }

 private:
  ReprConfig config_;
  Parameter* words_ = nullptr;
  Parameter* chars_ = nullptr;
  Parameter* bytes_ = nullptr;
  Cell char_f_, char_r_, byte_f_, byte_r_;
};

// Sequence bi-LSTM over the word's subtoken embeddings (2 * hidden_dim).
Var compose_subtoken(Tape& tape, std::string_view word, SubtokenLevel level, const Vocab& vocab,
                     const Cell& forward, const Cell& reverse, Parameter& table);

// Token vector for `word`. `word_id` overrides the vocabulary lookup for the
// word-embedding part (training uses it to substitute UNK); subtoken parts
// always follow the spelling.
Var token_repr(Tape& tape, std::string_view word, const ReprLayer& layer, const Vocab& vocab,
               std::optional<std::size_t> word_id = std::nullopt);

struct PretrainedStats {
  std::size_t loaded = 0;      // distinct file tokens found in the vocabulary
  std::size_t missed = 0;      // distinct file tokens not in the vocabulary
  std::size_t duplicates = 0;  // rows repeating an earlier token (last one wins)
  std::size_t dim = 0;         // 0 for an empty file
};

// Plain-text embeddings: one "token v1 v2 ... vd" row per line. A leading
// "count dim" header line (word2vec style) is skipped. Rows of known words
// overwrite the matching word_table row. When the file dimension differs
// from the table's, the table is re-initialized at the file dimension if
// `table_trained` is false; otherwise DataError.
PretrainedStats load_pretrained(const std::filesystem::path& path, const Vocab& vocab,
                                Parameter& word_table, bool table_trained, Rng& rng);

// Dimension of the first data row, 0 for an empty file.
std::size_t pretrained_dim(const std::filesystem::path& path);

}  // namespace seqtag
