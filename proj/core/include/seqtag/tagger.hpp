#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqtag/corpus.hpp"
#include "seqtag/recurrent.hpp"
#include "seqtag/repr.hpp"
#include "seqtag/rng.hpp"
#include "seqtag/system.hpp"
#include "seqtag/tape.hpp"
#include "seqtag/tensor.hpp"

namespace seqtag {

struct Hyperparams {
  double lr = 0.1;
  int epochs = 20;
  double sigma = 0.2;
  std::size_t word_dim = 128;
  std::size_t subtoken_dim = 100;
  std::size_t hidden_dim = 100;
  std::uint64_t seed = 1;
  ReprMode repr = ReprMode::wc;
  bool freqbin = false;
  std::optional<std::string> pretrained_path;
  CellKind cell = CellKind::lstm;
  // Probability of replacing a singleton training word by UNK in the word
  // embedding lookup, per occurrence.
  double unk_replace_prob = 0.25;
  // Base of the logarithm in the frequency-bin label.
  double freqbin_log_base = std::numbers::e;

  // Throws Error when a value is out of range.
  void validate() const;
  ReprConfig repr_config() const;
};

// int(log(freq)) truncated toward zero; 0 for freq 0 and 1.
std::size_t freqbin_label(std::size_t freq, double log_base = std::numbers::e);

struct TokenOutputs {
  Var tag_logits;
  std::optional<Var> freq_logits;
};

struct EpochReport {
  int epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> dev_accuracy;
};

using EpochCallback = std::function<void(const EpochReport&)>;

// Hierarchical bi-LSTM tagger: token representations (word embedding and/or
// character/byte bi-LSTM compositions) feed a context bi-LSTM whose state at
// each position goes through a tag head and, with freqbin enabled, a second
// head predicting the token's log-frequency bin.
class TaggerModel : public TaggingSystem {
 public:
  // Vocabulary, tagset and freshly initialized parameters; no training.
  static TaggerModel initialize(const Corpus& train, const Hyperparams& hp);
  // One SGD update per sentence for hp.epochs epochs over a seeded
  // shuffle. Throws DivergenceError if the loss stops being finite.
  static TaggerModel train(const Corpus& train, const Hyperparams& hp, const Corpus* dev = nullptr,
                           const EpochCallback& on_epoch = {});

  TaggerModel(TaggerModel&&) noexcept;
  TaggerModel& operator=(TaggerModel&&) noexcept;
  ~TaggerModel() override;

  // Runs one epoch in place; returns the mean sentence loss. `order` is
  // shuffled with `rng` first.
  double train_epoch(const Corpus& train, std::vector<std::size_t>& order, Rng& rng, int epoch);

  // Gaussian noise on token vectors and UNK substitution happen only when
  // `training` is set; `rng` is required then.
  std::vector<TokenOutputs> forward_sentence(Tape& tape, std::span<const std::string> tokens,
                                             bool training, Rng* rng) const;
  // Sum over tokens of tag cross-entropy plus, with freqbin, frequency-bin
  // cross-entropy.
  Var sentence_loss(Tape& tape, const Sentence& sentence, bool training, Rng* rng) const;
  // Tag head only, same parameters.
  Var tag_loss(Tape& tape, const Sentence& sentence) const;

  std::vector<std::size_t> predict_ids(std::span<const std::string> tokens) const;
  std::vector<std::string> predict(std::span<const std::string> tokens) const;

  std::string name() const override;
  std::vector<std::string> tag(std::span<const std::string> forms) const override {
    return predict(forms);
  }
  std::size_t train_frequency(std::string_view form) const override {
    return vocab_.frequency(form);
  }

  std::vector<char> serialize() const;
  static TaggerModel deserialize(std::span<const char> bytes);
  void save(const std::filesystem::path& path) const;
  static TaggerModel load(const std::filesystem::path& path);

  const Hyperparams& hyperparams() const { return hp_; }
  const Vocab& vocab() const { return vocab_; }
  const std::vector<std::string>& tagset() const { return tagset_; }
  std::size_t tag_index(std::string_view tag) const;
  std::size_t n_bins() const { return n_bins_; }
  std::size_t freq_label(std::string_view form) const;
  ParameterStore& params() { return *params_; }
  const ParameterStore& params() const { return *params_; }
  const ReprLayer& repr() const { return repr_; }
  const Cell& context_forward() const { return ctx_f_; }
  const Cell& context_reverse() const { return ctx_r_; }

 private:
  TaggerModel();
  void build_heads(Rng* rng);

  Hyperparams hp_;
  Vocab vocab_;
  std::vector<std::string> tagset_;
  std::unordered_map<std::string, std::size_t> tag_ids_;
  std::size_t n_bins_ = 1;
  std::unique_ptr<ParameterStore> params_;
  ReprLayer repr_;
  Cell ctx_f_, ctx_r_;
  Parameter* tag_w_ = nullptr;
  Parameter* tag_b_ = nullptr;
  Parameter* freq_w_ = nullptr;
  Parameter* freq_b_ = nullptr;
};

}  // namespace seqtag
