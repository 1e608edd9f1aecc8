#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqtag/corpus.hpp"
#include "seqtag/system.hpp"
#include "seqtag/tagger.hpp"
#include "seqtag/tnt.hpp"

namespace seqtag {

// Loads a model file written by TaggerModel::save or TrigramModel::save,
// dispatching on the kind recorded in its header.
std::unique_ptr<TaggingSystem> load_system(const std::filesystem::path& path);

struct EvalReport {
  double accuracy = 0.0;
  double oov_accuracy = 0.0;  // 0 when there are no OOV tokens
  std::size_t tokens = 0;
  std::size_t correct = 0;
  std::size_t oov_tokens = 0;
  std::size_t oov_correct = 0;
  // confusion[gold][predicted]
  std::map<std::string, std::map<std::string, std::size_t>> confusion;
  // Gold tags the system never predicts from; counted as errors.
  std::vector<std::string> unknown_gold_tags;
};

using FrequencyFn = std::function<std::size_t(std::string_view)>;

// Scores predictions against gold tags. A token is OOV iff frequency(form) == 0.
EvalReport score(const Corpus& gold, std::span<const std::vector<std::string>> predicted,
                 const FrequencyFn& frequency, std::span<const std::string> system_tagset = {});

EvalReport evaluate(const TaggingSystem& system, const Corpus& test, const WordCounts& train_counts);
// OOV status from the system's own training counts.
EvalReport evaluate(const TaggingSystem& system, const Corpus& test);

std::string to_json(const EvalReport& report);

struct FreqBinRow {
  std::size_t bin = 0;
  std::size_t tokens = 0;
  std::optional<double> accuracy_a;
  std::optional<double> accuracy_b;
  std::optional<double> delta;  // a - b; empty for an empty bin
};

// Test tokens bucketed by int(ln(1 + train frequency)), OOV tokens in bin 0,
// anything beyond the last bin folded into it.
std::vector<FreqBinRow> freq_bin_report(const TaggingSystem& a, const TaggingSystem& b,
                                        const Corpus& test, const WordCounts& train_counts,
                                        std::size_t n_bins);
std::size_t log_frequency_bin(std::size_t freq);

// '#'-prefixed "key=value" lines that open every CSV.
using CsvMetadata = std::vector<std::pair<std::string, std::string>>;

std::string freq_bin_csv(std::span<const FreqBinRow> rows, const CsvMetadata& metadata);

// A recipe for training one kind of system on a corpus with a given seed.
struct SystemSpec {
  std::string name;
  std::function<std::unique_ptr<TaggingSystem>(const Corpus& train, std::uint64_t seed)> train;
  CsvMetadata params;
};

SystemSpec bilstm_system(const Hyperparams& hp, std::string name = "bilstm");
SystemSpec tnt_system(const TntConfig& config = {}, std::string name = "tnt");

struct CurvePoint {
  double x = 0.0;  // training sentences or corruption rate
  std::string system;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double oov_accuracy = 0.0;
  std::size_t train_sentences = 0;
  std::size_t corrupted = 0;
  double seconds = 0.0;
};

struct CurveOptions {
  std::uint64_t seed = 1;
  std::size_t seeds = 1;  // runs with seed, seed+1, ...
  std::size_t jobs = 1;   // worker threads over grid cells
};

// Grid cell c (ordered run, x value, system) trains with seed base ^ c,
// where base is the run's seed. Results come back in cell order whatever
// the number of jobs.
std::vector<CurvePoint> learning_curve(const Corpus& train, const Corpus& dev,
                                       std::span<const std::size_t> sizes,
                                       std::span<const SystemSpec> systems,
                                       const CurveOptions& options = {});
std::vector<CurvePoint> noise_curve(const Corpus& train, const Corpus& dev,
                                    std::span<const double> rates,
                                    std::span<const SystemSpec> systems,
                                    const CurveOptions& options = {});

// {100, 500, 1000, 2000, 5000} below the corpus size, then the full size.
std::vector<std::size_t> default_curve_sizes(std::size_t full);
std::vector<double> default_noise_rates();

// Header row then one row per point. With several seeds, per-(x, system)
// "mean" and "sd" rows follow. Timing is omitted unless asked for, so
// identical runs give identical bytes.
std::string curve_csv(std::span<const CurvePoint> points, const std::string& x_name,
                      const CsvMetadata& metadata, bool include_timing = false);

}  // namespace seqtag
