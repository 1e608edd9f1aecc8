#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqtag/rng.hpp"

namespace seqtag {

struct SourceSpan {
  std::string file;
  std::size_t first_line = 0;
  std::size_t last_line = 0;
};

// One tagged sentence. |forms| == |tags| > 0 and no form is empty.
struct Sentence {
  std::vector<std::string> forms;
  std::vector<std::string> tags;
  SourceSpan source;

  std::size_t size() const { return forms.size(); }

  // Content equality: provenance is ignored.
  friend bool operator==(const Sentence& a, const Sentence& b) {
    return a.forms == b.forms && a.tags == b.tags;
  }
};

enum class Split { train, dev, test, unspecified };

std::string_view to_string(Split split);

struct Corpus {
  std::vector<Sentence> sentences;
  Split split = Split::unspecified;
  std::string language;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
  std::size_t token_count() const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.sentences == b.sentences;
  }
};

enum class CorpusFormat { conllu, twocol };

CorpusFormat corpus_format_from_string(std::string_view s);

// The 17 Universal Dependencies UPOS tags, sorted.
const std::array<std::string_view, 17>& upos_tags();

// CoNLL-U: ten tab-separated columns per token, blank line between
// sentences, '#' comments. Multiword range lines ("3-4") and empty nodes
// ("5.1") are skipped so syntactic words are kept. FORM is column 2 and
// UPOS column 4. Errors carry file and line number.
Corpus read_conllu(const std::filesystem::path& path, Split split = Split::unspecified);
Corpus parse_conllu(std::istream& in, const std::string& source_name,
                    Split split = Split::unspecified);
// Writes forms and tags; every other column is '_'.
void write_conllu(const Corpus& corpus, std::ostream& out);

// "form<TAB>tag" per line, blank line between sentences.
Corpus read_twocol(const std::filesystem::path& path, Split split = Split::unspecified);
Corpus parse_twocol(std::istream& in, const std::string& source_name,
                    Split split = Split::unspecified);
void write_twocol(const Corpus& corpus, std::ostream& out);

Corpus read_corpus(const std::filesystem::path& path, CorpusFormat format,
                   Split split = Split::unspecified);
void write_corpus(const Corpus& corpus, std::ostream& out, CorpusFormat format);

using WordCounts = std::unordered_map<std::string, std::size_t>;

WordCounts count_forms(const Corpus& corpus);

// Sorted distinct tags.
std::vector<std::string> tagset(const Corpus& corpus);

struct CorruptionResult {
  Corpus corpus;
  std::size_t corrupted = 0;
  std::size_t tokens = 0;
};

// Each token independently, with probability `rate`, gets a tag drawn
// uniformly from the other tags of the corpus tagset.
CorruptionResult corrupt_labels(const Corpus& corpus, double rate, Rng& rng);

// n sentences drawn uniformly without replacement, kept in corpus order.
Corpus subsample(const Corpus& corpus, std::size_t n_sentences, Rng& rng);

struct CorpusStats {
  std::size_t tokens = 0;
  std::size_t types = 0;
  std::vector<std::string> tagset;
  std::vector<std::string> non_upos_tags;
  // Over word types: mean, min and max of ln(count).
  double mean_log_freq = 0.0;
  double min_log_freq = 0.0;
  double max_log_freq = 0.0;
};

CorpusStats stats(const Corpus& corpus);

double mean_log_frequency(const WordCounts& counts);

}  // namespace seqtag
