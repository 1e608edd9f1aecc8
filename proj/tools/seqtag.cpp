// seqtag: train, apply and compare part-of-speech taggers.
//
// Exit codes: 0 success, 1 usage, 2 data or model-file error, 3 training
// divergence. Diagnostics go to stderr; results go to stdout or --out.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqtag/corpus.hpp"
#include "seqtag/error.hpp"
#include "seqtag/harness.hpp"
#include "seqtag/log.hpp"
#include "seqtag/tagger.hpp"
#include "seqtag/tnt.hpp"

namespace {

using namespace seqtag;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDivergence = 3 };

struct Options {
  std::vector<std::string> models;
  std::string rep = "wc";
  bool freqbin = false;
  std::string embeddings;
  std::uint64_t seed = 1;
  int epochs = 20;
  double lr = 0.1;
  double sigma = 0.2;
  std::size_t hidden = 100;
  std::size_t word_dim = 128;
  std::size_t subtoken_dim = 100;
  double beam = 1000.0;
  std::string format = "conllu";
  std::string out;
  std::string dev;
  std::size_t seeds = 1;
  std::size_t jobs = 1;
  std::vector<std::size_t> sizes;
  std::vector<double> rates;
  std::size_t bins = 0;
  bool timing = false;
  bool quiet = false;

  // positionals
  std::string input1, input2, input3;
};

Hyperparams hyperparams(const Options& o) {
  Hyperparams hp;
  hp.repr = repr_mode_from_string(o.rep);
  hp.freqbin = o.freqbin;
  if (!o.embeddings.empty()) hp.pretrained_path = o.embeddings;
  hp.seed = o.seed;
  hp.epochs = o.epochs;
  hp.lr = o.lr;
  hp.sigma = o.sigma;
  hp.hidden_dim = o.hidden;
  hp.word_dim = o.word_dim;
  hp.subtoken_dim = o.subtoken_dim;
  hp.validate();
  return hp;
}

TntConfig tnt_config(const Options& o) {
  TntConfig c;
  c.beam = o.beam;
  return c;
}

Corpus load(const std::string& path, const Options& o) {
  return read_corpus(path, corpus_format_from_string(o.format));
}

// Writes to --out when given, stdout otherwise.
void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw DataError("cannot open file for writing", o.out);
  f << text;
  if (!f) throw DataError("write failed", o.out);
}

std::vector<SystemSpec> systems(const Options& o) {
  std::vector<SystemSpec> out;
  const std::vector<std::string> names = o.models.empty() ? std::vector<std::string>{"bilstm", "tnt"}
                                                          : o.models;
  for (const auto& m : names) {
    if (m == "bilstm") {
      out.push_back(bilstm_system(hyperparams(o)));
    } else if (m == "tnt") {
      out.push_back(tnt_system(tnt_config(o)));
    } else {
      throw CLI::ValidationError("--model", "unknown model '" + m + "'");
    }
  }
  return out;
}

CsvMetadata curve_metadata(const Options& o, const std::string& command) {
  CsvMetadata md{{"command", command},
                 {"train", o.input1},
                 {"dev", o.input2},
                 {"seed", std::to_string(o.seed)},
                 {"seeds", std::to_string(o.seeds)}};
  return md;
}

int cmd_train(const Options& o) {
  const std::string model_path = !o.input2.empty() ? o.input2 : o.out;
  if (model_path.empty()) throw CLI::ValidationError("train", "missing model output path");
  const std::string kind = o.models.empty() ? "bilstm" : o.models.front();
  const Corpus train = load(o.input1, o);
  if (kind == "tnt") {
    TrigramModel::train(train, tnt_config(o)).save(model_path);
  } else if (kind == "bilstm") {
    std::optional<Corpus> dev;
    if (!o.dev.empty()) dev = load(o.dev, o);
    auto report = [&](const EpochReport& r) {
      std::ostringstream msg;
      msg << "epoch " << r.epoch << " loss " << r.mean_loss;
      if (r.dev_accuracy) msg << " dev_acc " << *r.dev_accuracy;
      log::info(msg.str());
    };
    TaggerModel::train(train, hyperparams(o), dev ? &*dev : nullptr, report).save(model_path);
  } else {
    throw CLI::ValidationError("--model", "unknown model '" + kind + "'");
  }
  log::info("model written to " + model_path);
  return kOk;
}

int cmd_tag(const Options& o) {
  const auto system = load_system(o.input1);
  Corpus corpus = load(o.input2, o);
  for (auto& s : corpus.sentences) s.tags = system->tag(s.forms);
  std::ostringstream text;
  write_corpus(corpus, text, corpus_format_from_string(o.format));
  emit(o, text.str());
  return kOk;
}

int cmd_eval(const Options& o) {
  const auto system = load_system(o.input1);
  const Corpus test = load(o.input2, o);
  const EvalReport report = evaluate(*system, test);
  for (const auto& t : report.unknown_gold_tags) log::warn("gold tag '" + t + "' unknown to the model");
  emit(o, to_json(report) + "\n");
  return kOk;
}

int cmd_curve(const Options& o, bool noise) {
  const Corpus train = load(o.input1, o);
  const Corpus dev = load(o.input2, o);
  const auto specs = systems(o);
  CurveOptions opts;
  opts.seed = o.seed;
  opts.seeds = o.seeds;
  opts.jobs = o.jobs;
  CsvMetadata md = curve_metadata(o, noise ? "noise" : "curve");
  for (const auto& s : specs) {
    for (const auto& [k, v] : s.params) md.emplace_back(s.name + "." + k, v);
  }
  std::vector<CurvePoint> points;
  if (noise) {
    const auto rates = o.rates.empty() ? default_noise_rates() : o.rates;
    points = noise_curve(train, dev, rates, specs, opts);
  } else {
    const auto sizes = o.sizes.empty() ? default_curve_sizes(train.size()) : o.sizes;
    points = learning_curve(train, dev, sizes, specs, opts);
  }
  emit(o, curve_csv(points, noise ? "noise_rate" : "sentences", md, o.timing));
  return kOk;
}

int cmd_freqbins(const Options& o) {
  const auto a = load_system(o.input1);
  const auto b = load_system(o.input2);
  const Corpus test = load(o.input3, o);
  WordCounts counts;
  std::size_t max_bin = 0;
  for (const auto& s : test.sentences) {
    for (const auto& f : s.forms) {
      const std::size_t n = a->train_frequency(f);
      if (n > 0) counts[f] = n;
      max_bin = std::max(max_bin, log_frequency_bin(n));
    }
  }
  const std::size_t n_bins = o.bins > 0 ? o.bins : max_bin + 1;
  const auto rows = freq_bin_report(*a, *b, test, counts, n_bins);
  CsvMetadata md{{"command", "freqbins"},
                 {"system_a", a->name() + " (" + o.input1 + ")"},
                 {"system_b", b->name() + " (" + o.input2 + ")"},
                 {"test", o.input3},
                 {"n_bins", std::to_string(n_bins)}};
  emit(o, freq_bin_csv(rows, md));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Part-of-speech tagging with bi-LSTMs and a trigram HMM baseline", "seqtag"};
  app.require_subcommand(1);
  Options o;

  auto model_flag = [&](CLI::App* sub, bool multi) {
    auto* opt = sub->add_option("--model", o.models, multi ? "Systems to run (repeatable)" : "System to train")
                    ->check(CLI::IsMember({"bilstm", "tnt"}));
    opt->allow_extra_args(false);
    if (!multi) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  };
  auto bilstm_flags = [&](CLI::App* sub) {
    sub->add_option("--rep", o.rep, "Token representation")
        ->check(CLI::IsMember({"w", "c", "b", "cb", "wc", "c+b", "w+c"}));
    sub->add_flag("--freqbin", o.freqbin, "Add the log-frequency auxiliary loss");
    sub->add_option("--embeddings", o.embeddings, "Pretrained word vectors (text format)");
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sub->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
    sub->add_option("--lr", o.lr, "SGD learning rate")->capture_default_str();
    sub->add_option("--sigma", o.sigma, "Std. dev. of Gaussian noise on token vectors")
        ->capture_default_str();
    sub->add_option("--hidden", o.hidden, "LSTM hidden size")->capture_default_str();
    sub->add_option("--word-dim", o.word_dim, "Word embedding size")->capture_default_str();
    sub->add_option("--subtoken-dim", o.subtoken_dim, "Character/byte embedding size")
        ->capture_default_str();
    sub->add_option("--beam", o.beam, "HMM beam factor (0 = exact)")->capture_default_str();
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "Corpus format")
        ->check(CLI::IsMember({"conllu", "twocol"}))
        ->capture_default_str();
    sub->add_option("--out", o.out, "Output path (default: stdout)");
    sub->add_flag("-q,--quiet", o.quiet, "Only print warnings and errors");
  };

  auto* train = app.add_subcommand("train", "Train a model");
  model_flag(train, false);
  bilstm_flags(train);
  common(train);
  train->add_option("--dev", o.dev, "Dev corpus for per-epoch accuracy");
  train->add_option("train_file", o.input1, "Training corpus")->required();
  train->add_option("model_file", o.input2, "Model output path (or --out)");

  auto* tag = app.add_subcommand("tag", "Tag a corpus, writing predicted tags");
  common(tag);
  tag->add_option("model_file", o.input1, "Model file")->required();
  tag->add_option("input_file", o.input2, "Corpus to tag")->required();

  auto* eval = app.add_subcommand("eval", "Accuracy and OOV accuracy as JSON");
  common(eval);
  eval->add_option("model_file", o.input1, "Model file")->required();
  eval->add_option("test_file", o.input2, "Gold corpus")->required();

  auto curve_like = [&](CLI::App* sub) {
    model_flag(sub, true);
    bilstm_flags(sub);
    common(sub);
    sub->add_option("--seeds", o.seeds, "Runs per cell (adds mean/sd rows)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--timing", o.timing, "Add a wall-clock seconds column");
    sub->add_option("train_file", o.input1, "Training corpus")->required();
    sub->add_option("dev_file", o.input2, "Evaluation corpus")->required();
  };
  auto* curve = app.add_subcommand("curve", "Learning curve CSV");
  curve_like(curve);
  curve->add_option("--sizes", o.sizes, "Training sizes in sentences, ascending")
      ->delimiter(',')
      ->allow_extra_args(false);
  auto* noise = app.add_subcommand("noise", "Label-noise curve CSV");
  curve_like(noise);
  noise->add_option("--rates", o.rates, "Corruption rates in [0, 1]")
      ->delimiter(',')
      ->allow_extra_args(false)
      ->check(CLI::Range(0.0, 1.0));

  auto* freqbins = app.add_subcommand("freqbins", "Per log-frequency-bin accuracy delta CSV");
  common(freqbins);
  freqbins->add_option("--bins", o.bins, "Number of bins (default: enough for the test set)");
  freqbins->add_option("model_a", o.input1, "Model A (its training counts define bins)")->required();
  freqbins->add_option("model_b", o.input2, "Model B")->required();
  freqbins->add_option("test_file", o.input3, "Gold corpus")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cerr << '\n' << app.help();
    return kUsage;
  }

  if (o.quiet) log::set_threshold(log::Level::warning);

  try {
    if (train->parsed()) return cmd_train(o);
    if (tag->parsed()) return cmd_tag(o);
    if (eval->parsed()) return cmd_eval(o);
    if (curve->parsed()) return cmd_curve(o, false);
    if (noise->parsed()) return cmd_curve(o, true);
    if (freqbins->parsed()) return cmd_freqbins(o);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "seqtag: " << e.what() << '\n';
    return kUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "seqtag: " << e.what() << '\n';
    return kDivergence;
  } catch (const DataError& e) {
    std::cerr << "seqtag: " << e.what() << '\n';
    return kData;
  } catch (const FormatError& e) {
    std::cerr << "seqtag: " << e.what() << '\n';
    return kData;
  } catch (const Error& e) {
    std::cerr << "seqtag: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
