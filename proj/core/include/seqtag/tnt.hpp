#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqtag/corpus.hpp"
#include "seqtag/system.hpp"

namespace seqtag {

struct TntConfig {
  std::size_t max_suffix = 10;       // longest suffix kept in the tries
  std::size_t suffix_max_freq = 10;  // only words this rare train the tries
  double beam = 1000.0;              // beam factor; 0 decodes exactly
};

// Tag distributions conditioned on word suffixes, smoothed by successive
// abstraction:
//   P(t | s_i) = (P^(t | s_i) + theta * P(t | s_{i-1})) / (1 + theta)
// where the root holds the ML tag distribution of all tokens added.
class SuffixTrie {
 public:
  explicit SuffixTrie(std::size_t tag_count = 0);

  // Adds `count` tokens of a word (as code points) tagged `tag`.
  void add(std::span<const char32_t> word, std::size_t tag, double count, std::size_t max_suffix);
  // Computes the smoothed distributions; call once after all add()s.
  void finalize(double theta);

  bool empty() const { return nodes_[0].total == 0.0; }
  std::size_t node_count() const { return nodes_.size(); }
  std::span<const double> root() const { return nodes_[0].prob; }
  // Smoothed distribution of the longest stored suffix of `word` (at most
  // max_suffix code points); the root when nothing matches.
  std::span<const double> lookup(std::span<const char32_t> word, std::size_t max_suffix,
                                 std::size_t* matched_length = nullptr) const;
  // Every node's smoothed distribution, for invariant checks.
  std::vector<std::span<const double>> distributions() const;

 private:
  struct Node {
    std::map<char32_t, std::uint32_t> children;
    std::vector<double> counts;
    double total = 0.0;
    std::vector<double> prob;
  };
  std::size_t tag_count_;
  std::vector<Node> nodes_;
};

// Second-order HMM tagger in the style of TnT: deleted-interpolation
// trigram transitions, ML lexical emissions for known words, case-split
// suffix tries for unknown words and beam-pruned Viterbi decoding.
class TrigramModel : public TaggingSystem {
 public:
  static TrigramModel train(const Corpus& corpus, const TntConfig& config = {});

  std::string name() const override { return "tnt"; }
  std::vector<std::string> tag(std::span<const std::string> forms) const override;
  std::size_t train_frequency(std::string_view form) const override;

  const TntConfig& config() const { return config_; }
  void set_beam(double beam);

  const std::vector<std::string>& tagset() const { return tagset_; }
  std::size_t tag_count() const { return tagset_.size(); }
  // Pseudo-tag filling history positions -1 and 0.
  std::size_t boundary() const { return tagset_.size(); }

  // Interpolation weights (unigram, bigram, trigram).
  const std::array<double, 3>& lambdas() const { return lambdas_; }
  double theta() const { return theta_; }

  // Smoothed P(t3 | t1, t2); t1 and t2 may be boundary(). When a history was
  // never observed its weight falls through to the next lower order.
  double transition(std::size_t t1, std::size_t t2, std::size_t t3) const;
  double log_transition(std::size_t t1, std::size_t t2, std::size_t t3) const {
    return log_trans_[(t1 * (tag_count() + 1) + t2) * tag_count() + t3];
  }

  // Known word: f(word, tag) / f(tag). Unknown word: P(tag | suffix) /
  // P(tag) with both taken from the capitalization-matched trie (P(tag) is
  // its root); this is P(word | tag) up to a factor constant across tags.
  double emission(std::string_view word, std::size_t tag) const;
  std::vector<double> emissions(std::string_view word) const;
  std::vector<double> log_emissions(std::string_view word) const;
  bool is_known(std::string_view word) const;

  const SuffixTrie& trie(bool capitalized) const { return capitalized ? upper_ : lower_; }

  std::vector<char> serialize() const;
  static TrigramModel deserialize(std::span<const char> bytes);
  void save(const std::filesystem::path& path) const;
  static TrigramModel load(const std::filesystem::path& path);

 private:
  void rebuild();
  const SuffixTrie& unknown_trie(std::string_view word) const;

  TntConfig config_;
  std::vector<std::string> tagset_;
  std::size_t tokens_ = 0;
  std::vector<double> unigram_;  // T
  std::vector<double> bigram_;   // (T+1) x T
  std::vector<double> trigram_;  // (T+1) x (T+1) x T
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> word_index_;
  std::vector<double> lexicon_;  // words x T

  std::array<double, 3> lambdas_{};
  double theta_ = 0.0;
  std::vector<double> log_trans_;
  SuffixTrie upper_, lower_;
};

// Best tag sequence under the model in log space. beam == 0 is exact; a beam
// factor >= 1 drops states scoring below best - ln(beam) at each position.
// Ties prefer the lower tag index, deciding later positions first.
std::vector<std::size_t> viterbi(const TrigramModel& model, std::span<const std::string> tokens,
                                 double beam);

}  // namespace seqtag
