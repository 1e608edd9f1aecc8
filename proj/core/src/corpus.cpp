#include "seqtag/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "seqtag/error.hpp"
#include "seqtag/log.hpp"

namespace seqtag {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file", path.string());
  return in;
}

// Accumulates token rows into sentences for both line formats.
class SentenceBuilder {
 public:
  SentenceBuilder(Corpus& corpus, const std::string& source) : corpus_(corpus), source_(source) {}

  void add(std::string form, std::string tag, std::size_t line) {
    if (current_.forms.empty()) current_.source = {source_, line, line};
    current_.source.last_line = line;
    current_.forms.push_back(std::move(form));
    current_.tags.push_back(std::move(tag));
  }

  void finish() {
    if (!current_.forms.empty()) corpus_.sentences.push_back(std::move(current_));
    current_ = Sentence{};
  }

 private:
  Corpus& corpus_;
  const std::string& source_;
  Sentence current_;
};

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
    case Split::unspecified: return "unspecified";
  }
  return "unspecified";
}

std::size_t Corpus::token_count() const {
  return std::accumulate(sentences.begin(), sentences.end(), std::size_t{0},
                         [](std::size_t n, const Sentence& s) { return n + s.size(); });
}

CorpusFormat corpus_format_from_string(std::string_view s) {
  if (s == "conllu") return CorpusFormat::conllu;
  if (s == "twocol") return CorpusFormat::twocol;
  throw Error("unknown corpus format: " + std::string(s));
}

const std::array<std::string_view, 17>& upos_tags() {
  static const std::array<std::string_view, 17> tags = {
      "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
      "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};
  return tags;
}

Corpus parse_conllu(std::istream& in, const std::string& source_name, Split split) {
  Corpus corpus;
  corpus.split = split;
  SentenceBuilder builder(corpus, source_name);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (is_blank(line)) {
      builder.finish();
      continue;
    }
    if (line.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 10) {
      throw DataError("expected 10 tab-separated columns, found " + std::to_string(fields.size()),
                      source_name, line_no);
    }
    const std::string_view id = fields[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) {
      continue;
    }
    if (fields[1].empty()) throw DataError("empty FORM column", source_name, line_no);
    if (fields[3].empty()) throw DataError("empty UPOS column", source_name, line_no);
    builder.add(std::string(fields[1]), std::string(fields[3]), line_no);
  }
  if (in.bad()) throw DataError("read error", source_name, line_no);
  builder.finish();
  return corpus;
}

Corpus read_conllu(const std::filesystem::path& path, Split split) {
  auto in = open_input(path);
  return parse_conllu(in, path.string(), split);
}

void write_conllu(const Corpus& corpus, std::ostream& out) {
  for (const auto& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << (i + 1) << '\t' << s.forms[i] << "\t_\t" << s.tags[i] << "\t_\t_\t_\t_\t_\t_\n";
    }
    out << '\n';
  }
}

Corpus parse_twocol(std::istream& in, const std::string& source_name, Split split) {
  Corpus corpus;
  corpus.split = split;
  SentenceBuilder builder(corpus, source_name);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (is_blank(line)) {
      builder.finish();
      continue;
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw DataError("expected 2 tab-separated columns, found " + std::to_string(fields.size()),
                      source_name, line_no);
    }
    if (fields[0].empty()) throw DataError("empty form", source_name, line_no);
    if (fields[1].empty()) throw DataError("empty tag", source_name, line_no);
    builder.add(std::string(fields[0]), std::string(fields[1]), line_no);
  }
  if (in.bad()) throw DataError("read error", source_name, line_no);
  builder.finish();
  return corpus;
}

Corpus read_twocol(const std::filesystem::path& path, Split split) {
  auto in = open_input(path);
  return parse_twocol(in, path.string(), split);
}

void write_twocol(const Corpus& corpus, std::ostream& out) {
  for (const auto& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) out << s.forms[i] << '\t' << s.tags[i] << '\n';
    out << '\n';
  }
}

Corpus read_corpus(const std::filesystem::path& path, CorpusFormat format, Split split) {
  return format == CorpusFormat::conllu ? read_conllu(path, split) : read_twocol(path, split);
}

void write_corpus(const Corpus& corpus, std::ostream& out, CorpusFormat format) {
  if (format == CorpusFormat::conllu) {
    write_conllu(corpus, out);
  } else {
    write_twocol(corpus, out);
  }
}

WordCounts count_forms(const Corpus& corpus) {
  WordCounts counts;
  for (const auto& s : corpus.sentences) {
    for (const auto& f : s.forms) ++counts[f];
  }
  return counts;
}

std::vector<std::string> tagset(const Corpus& corpus) {
  std::set<std::string> tags;
  for (const auto& s : corpus.sentences) tags.insert(s.tags.begin(), s.tags.end());
  return {tags.begin(), tags.end()};
}

CorruptionResult corrupt_labels(const Corpus& corpus, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw Error("corruption rate must be in [0, 1], got " + std::to_string(rate));
  }
  const auto tags = tagset(corpus);
  CorruptionResult result{corpus, 0, corpus.token_count()};
  if (rate == 0.0) return result;
  if (tags.size() < 2) throw DataError("cannot corrupt labels of a corpus with fewer than 2 tags");
  for (auto& s : result.corpus.sentences) {
    for (auto& tag : s.tags) {
      if (!rng.bernoulli(rate)) continue;
      const auto original = std::lower_bound(tags.begin(), tags.end(), tag) - tags.begin();
      auto pick = static_cast<std::ptrdiff_t>(rng.below(tags.size() - 1));
      if (pick >= original) ++pick;
      tag = tags[static_cast<std::size_t>(pick)];
      ++result.corrupted;
    }
  }
  return result;
}

Corpus subsample(const Corpus& corpus, std::size_t n_sentences, Rng& rng) {
  if (n_sentences < 1 || n_sentences > corpus.size()) {
    throw Error("subsample size " + std::to_string(n_sentences) + " out of range [1, " +
                std::to_string(corpus.size()) + "]");
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first n slots become a uniform sample.
  for (std::size_t i = 0; i < n_sentences; ++i) {
    const std::size_t j = i + rng.below(order.size() - i);
    std::swap(order[i], order[j]);
  }
  order.resize(n_sentences);
  std::sort(order.begin(), order.end());
  Corpus out;
  out.split = corpus.split;
  out.language = corpus.language;
  out.sentences.reserve(n_sentences);
  for (std::size_t i : order) out.sentences.push_back(corpus.sentences[i]);
  return out;
}

double mean_log_frequency(const WordCounts& counts) {
  if (counts.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [form, n] : counts) total += std::log(static_cast<double>(n));
  return total / static_cast<double>(counts.size());
}

CorpusStats stats(const Corpus& corpus) {
  if (corpus.empty()) throw DataError("stats of an empty corpus");
  CorpusStats st;
  const auto counts = count_forms(corpus);
  st.tokens = corpus.token_count();
  st.types = counts.size();
  st.tagset = tagset(corpus);
  const auto& upos = upos_tags();
  for (const auto& t : st.tagset) {
    if (!std::binary_search(upos.begin(), upos.end(), std::string_view(t))) {
      st.non_upos_tags.push_back(t);
    }
  }
  if (!st.non_upos_tags.empty()) {
    log::warn("corpus uses " + std::to_string(st.non_upos_tags.size()) +
              " tag(s) outside the 17 UPOS tags");
  }
  st.mean_log_freq = mean_log_frequency(counts);
  bool first = true;
  for (const auto& [form, n] : counts) {
    const double l = std::log(static_cast<double>(n));
    st.min_log_freq = first ? l : std::min(st.min_log_freq, l);
    st.max_log_freq = first ? l : std::max(st.max_log_freq, l);
    first = false;
  }
  return st;
}

}  // namespace seqtag
