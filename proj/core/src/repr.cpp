#include "seqtag/repr.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "seqtag/error.hpp"
#include "seqtag/log.hpp"
#include "seqtag/utf8.hpp"

namespace seqtag {

Vocab::Vocab() : words_{std::string()}, counts_{0}, chars_{0, 0, 0} {}

Vocab Vocab::build(const Corpus& train) {
  if (train.empty() || train.token_count() == 0) {
    throw DataError("cannot build a vocabulary from an empty corpus");
  }
  Vocab v;
  for (const auto& s : train.sentences) {
    for (const auto& form : s.forms) {
      auto [it, inserted] = v.word_index_.try_emplace(form, v.words_.size());
      if (inserted) {
        v.words_.push_back(form);
        v.counts_.push_back(0);
      }
      ++v.counts_[it->second];
      for (char32_t cp : utf8::decode(form)) {
        if (v.char_index_.try_emplace(cp, v.chars_.size()).second) v.chars_.push_back(cp);
      }
    }
  }
  return v;
}

Vocab Vocab::from_parts(std::vector<std::string> words, std::vector<std::size_t> counts,
                        std::vector<char32_t> chars) {
  if (words.size() != counts.size()) throw FormatError("vocabulary words/counts size mismatch");
  Vocab v;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!v.word_index_.try_emplace(words[i], v.words_.size()).second) {
      throw FormatError("duplicate vocabulary word: " + words[i]);
    }
    v.words_.push_back(std::move(words[i]));
    v.counts_.push_back(counts[i]);
  }
  for (char32_t cp : chars) {
    if (!v.char_index_.try_emplace(cp, v.chars_.size()).second) {
      throw FormatError("duplicate vocabulary character");
    }
    v.chars_.push_back(cp);
  }
  return v;
}

std::size_t Vocab::word_id(std::string_view form) const {
  auto it = word_index_.find(std::string(form));
  return it == word_index_.end() ? kUnkWord : it->second;
}

std::size_t Vocab::char_id(char32_t cp) const {
  auto it = char_index_.find(cp);
  return it == char_index_.end() ? kUnkChar : it->second;
}

std::size_t Vocab::frequency(std::string_view form) const {
  auto it = word_index_.find(std::string(form));
  return it == word_index_.end() ? 0 : counts_[it->second];
}

std::string to_string(ReprMode mode) {
  switch (mode) {
    case ReprMode::w: return "w";
    case ReprMode::c: return "c";
    case ReprMode::b: return "b";
    case ReprMode::cb: return "cb";
    case ReprMode::wc: return "wc";
  }
  return "?";
}

ReprMode repr_mode_from_string(std::string_view s) {
  if (s == "w") return ReprMode::w;
  if (s == "c") return ReprMode::c;
  if (s == "b") return ReprMode::b;
  if (s == "cb" || s == "c+b") return ReprMode::cb;
  if (s == "wc" || s == "w+c") return ReprMode::wc;
  throw Error("unknown representation mode: " + std::string(s));
}

std::size_t ReprConfig::output_dim() const {
  std::size_t dim = 0;
  if (uses_words(mode)) dim += word_dim;
  if (uses_chars(mode)) dim += 2 * hidden_dim;
  if (uses_bytes(mode)) dim += 2 * hidden_dim;
  return dim;
}

std::vector<std::size_t> subtoken_ids(std::string_view word, SubtokenLevel level,
                                      const Vocab& vocab) {
  std::vector<std::size_t> ids;
  if (level == SubtokenLevel::character) {
    const auto cps = utf8::decode(word);
    ids.reserve(cps.size() + 2);
    ids.push_back(Vocab::kCharStart);
    for (char32_t cp : cps) ids.push_back(vocab.char_id(cp));
    ids.push_back(Vocab::kCharEnd);
  } else {
    ids.reserve(word.size() + 2);
    ids.push_back(Vocab::kByteStart);
    for (char ch : word) ids.push_back(static_cast<unsigned char>(ch));
    ids.push_back(Vocab::kByteEnd);
  }
  return ids;
}

void init_embedding(Tensor& table, Rng& rng) {
  const double bound = std::sqrt(3.0 / static_cast<double>(table.cols()));
  for (double& v : table.values()) v = rng.uniform(-bound, bound);
}

namespace {

Parameter& add_embedding(ParameterStore& store, const std::string& name, std::size_t rows,
                         std::size_t dim, Rng& rng) {
  Tensor t({rows, dim});
  init_embedding(t, rng);
  return store.add(name, std::move(t));
}

Parameter& bind_embedding(ParameterStore& store, const std::string& name, std::size_t rows) {
  Parameter& p = store.at(name);
  if (p.value().rows() != rows) {
    throw FormatError("embedding table " + name + " has " + std::to_string(p.value().rows()) +
                      " rows, vocabulary needs " + std::to_string(rows));
  }
  return p;
}

}  // namespace

ReprLayer ReprLayer::create(ParameterStore& store, const Vocab& vocab, const ReprConfig& config,
                            Rng& rng) {
  ReprLayer layer;
  layer.config_ = config;
  const auto mode = config.mode;
  if (uses_words(mode)) {
    layer.words_ = &add_embedding(store, "embed.word", vocab.word_count(), config.word_dim, rng);
  }
  if (uses_chars(mode)) {
    layer.chars_ = &add_embedding(store, "embed.char", vocab.char_count(), config.subtoken_dim, rng);
    layer.char_f_ = Cell::create(store, "char.fwd", config.cell, config.subtoken_dim,
                                 config.hidden_dim, rng);
    layer.char_r_ = Cell::create(store, "char.rev", config.cell, config.subtoken_dim,
                                 config.hidden_dim, rng);
  }
  if (uses_bytes(mode)) {
    layer.bytes_ = &add_embedding(store, "embed.byte", Vocab::kByteSymbols, config.subtoken_dim, rng);
    layer.byte_f_ = Cell::create(store, "byte.fwd", config.cell, config.subtoken_dim,
                                 config.hidden_dim, rng);
    layer.byte_r_ = Cell::create(store, "byte.rev", config.cell, config.subtoken_dim,
                                 config.hidden_dim, rng);
  }
  return layer;
}

ReprLayer ReprLayer::bind(ParameterStore& store, const Vocab& vocab, const ReprConfig& config) {
  ReprLayer layer;
  layer.config_ = config;
  const auto mode = config.mode;
  if (uses_words(mode)) {
    layer.words_ = &bind_embedding(store, "embed.word", vocab.word_count());
    layer.config_.word_dim = layer.words_->value().cols();
  }
  if (uses_chars(mode)) {
    layer.chars_ = &bind_embedding(store, "embed.char", vocab.char_count());
    layer.char_f_ = Cell::bind(store, "char.fwd", config.cell, config.subtoken_dim, config.hidden_dim);
    layer.char_r_ = Cell::bind(store, "char.rev", config.cell, config.subtoken_dim, config.hidden_dim);
  }
  if (uses_bytes(mode)) {
    layer.bytes_ = &bind_embedding(store, "embed.byte", Vocab::kByteSymbols);
    layer.byte_f_ = Cell::bind(store, "byte.fwd", config.cell, config.subtoken_dim, config.hidden_dim);
    layer.byte_r_ = Cell::bind(store, "byte.rev", config.cell, config.subtoken_dim, config.hidden_dim);
  }
  return layer;
}

std::size_t ReprLayer::output_dim() const {
  ReprConfig c = config_;
  if (words_) c.word_dim = words_->value().cols();
  return c.output_dim();
}

Var compose_subtoken(Tape& tape, std::string_view word, SubtokenLevel level, const Vocab& vocab,
                     const Cell& forward, const Cell& reverse, Parameter& table) {
  if (word.empty()) throw DataError("cannot compose an empty word");
  const auto ids = subtoken_ids(word, level, vocab);
  std::vector<Var> xs;
  xs.reserve(ids.size());
  for (std::size_t id : ids) xs.push_back(tape.lookup_row(table, id));
  return birnn_seq(tape, forward, reverse, xs);
}

Var token_repr(Tape& tape, std::string_view word, const ReprLayer& layer, const Vocab& vocab,
               std::optional<std::size_t> word_id) {
  std::vector<Var> parts;
  parts.reserve(3);
  if (layer.word_table()) {
    parts.push_back(tape.lookup_row(*layer.word_table(), word_id ? *word_id : vocab.word_id(word)));
  }
  if (layer.char_table()) {
    parts.push_back(compose_subtoken(tape, word, SubtokenLevel::character, vocab,
                                     layer.char_forward(), layer.char_reverse(),
                                     *layer.char_table()));
  }
  if (layer.byte_table()) {
    parts.push_back(compose_subtoken(tape, word, SubtokenLevel::byte, vocab, layer.byte_forward(),
                                     layer.byte_reverse(), *layer.byte_table()));
  }
  if (parts.size() == 1) return parts.front();
  return tape.concat(parts);
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool is_count(std::string_view s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string_view::npos;
}

struct EmbeddingRow {
  std::string token;
  std::vector<double> values;
};

// Calls `on_row` for every data row; returns the dimension (0 if no rows).
template <typename OnRow>
std::size_t scan_embeddings(const std::filesystem::path& path, OnRow on_row) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings file", path.string());
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && is_count(fields[0]) && is_count(fields[1])) continue;
    if (fields.size() < 2) throw DataError("embedding row has no values", path.string(), line_no);
    EmbeddingRow row;
    row.token = std::string(fields[0]);
    row.values.resize(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      if (!parse_double(fields[k], row.values[k - 1])) {
        throw DataError("malformed embedding value '" + std::string(fields[k]) + "'",
                        path.string(), line_no);
      }
    }
    if (dim == 0) {
      dim = row.values.size();
    } else if (row.values.size() != dim) {
      throw DataError("embedding row has " + std::to_string(row.values.size()) +
                          " values, expected " + std::to_string(dim),
                      path.string(), line_no);
    }
    if (!on_row(std::move(row))) break;
  }
  return dim;
}

}  // namespace

std::size_t pretrained_dim(const std::filesystem::path& path) {
  return scan_embeddings(path, [](EmbeddingRow&&) { return false; });
}

PretrainedStats load_pretrained(const std::filesystem::path& path, const Vocab& vocab,
                                Parameter& word_table, bool table_trained, Rng& rng) {
  PretrainedStats st;
  std::unordered_set<std::string> seen;
  std::vector<std::pair<std::size_t, std::vector<double>>> updates;
  st.dim = scan_embeddings(path, [&](EmbeddingRow&& row) {
    if (!seen.insert(row.token).second) {
      ++st.duplicates;
      log::warn("embeddings file " + path.string() + ": duplicate token '" + row.token +
                "', last occurrence wins");
    }
    const std::size_t id = vocab.word_id(row.token);
    if (id != Vocab::kUnkWord) updates.emplace_back(id, std::move(row.values));
    return true;
  });
  if (st.dim == 0) return st;

  Tensor& table = word_table.value();
  if (st.dim != table.cols()) {
    if (table_trained) {
      throw DataError("embedding dimension " + std::to_string(st.dim) +
                          " conflicts with trained word table of dimension " +
                          std::to_string(table.cols()),
                      path.string());
    }
    Tensor resized({table.rows(), st.dim});
    init_embedding(resized, rng);
    word_table.reset(std::move(resized));
  }
  std::unordered_set<std::size_t> loaded_ids;
  for (auto& [id, values] : updates) {
    auto row = word_table.value().row(id);
    std::copy(values.begin(), values.end(), row.begin());
    loaded_ids.insert(id);
  }
  st.loaded = loaded_ids.size();
  st.missed = seen.size() - st.loaded;
  return st;
}

}  // namespace seqtag
