#include "seqtag/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "container.hpp"
#include "seqtag/error.hpp"

namespace seqtag {

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void write_metadata(std::ostringstream& out, const CsvMetadata& metadata) {
  for (const auto& [k, v] : metadata) out << "# " << k << '=' << v << '\n';
}

}  // namespace

std::unique_ptr<TaggingSystem> load_system(const std::filesystem::path& path) {
  const std::vector<char> bytes = container::read_file(path);
  std::string kind;
  try {
    kind = container::decode(bytes).header.value("kind", "");
  } catch (const nlohmann::json::exception&) {
    throw FormatError("malformed model header in " + path.string());
  }
  if (kind == "bilstm") return std::make_unique<TaggerModel>(TaggerModel::deserialize(bytes));
  if (kind == "tnt") return std::make_unique<TrigramModel>(TrigramModel::deserialize(bytes));
  throw FormatError("unknown model kind '" + kind + "' in " + path.string());
}

EvalReport score(const Corpus& gold, std::span<const std::vector<std::string>> predicted,
                 const FrequencyFn& frequency, std::span<const std::string> system_tagset) {
  if (predicted.size() != gold.size()) throw Error("score: prediction count differs from corpus size");
  EvalReport r;
  std::set<std::string> known(system_tagset.begin(), system_tagset.end());
  std::set<std::string> unknown;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    const Sentence& s = gold.sentences[k];
    if (predicted[k].size() != s.size()) throw Error("score: prediction length differs from sentence");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool ok = predicted[k][i] == s.tags[i];
      const bool oov = frequency(s.forms[i]) == 0;
      ++r.tokens;
      r.correct += ok;
      if (oov) {
        ++r.oov_tokens;
        r.oov_correct += ok;
      }
      ++r.confusion[s.tags[i]][predicted[k][i]];
      if (!known.empty() && !known.contains(s.tags[i])) unknown.insert(s.tags[i]);
    }
  }
  r.accuracy = ratio(r.correct, r.tokens);
  r.oov_accuracy = ratio(r.oov_correct, r.oov_tokens);
  r.unknown_gold_tags.assign(unknown.begin(), unknown.end());
  return r;
}

namespace {

std::vector<std::string> system_tags(const TaggingSystem& system) {
  if (const auto* m = dynamic_cast<const TaggerModel*>(&system)) return m->tagset();
  if (const auto* m = dynamic_cast<const TrigramModel*>(&system)) return m->tagset();
  return {};
}

std::vector<std::vector<std::string>> tag_all(const TaggingSystem& system, const Corpus& test) {
  std::vector<std::vector<std::string>> out;
  out.reserve(test.size());
  for (const auto& s : test.sentences) out.push_back(system.tag(s.forms));
  return out;
}

}  // namespace

EvalReport evaluate(const TaggingSystem& system, const Corpus& test, const WordCounts& train_counts) {
  const auto predicted = tag_all(system, test);
  const auto tags = system_tags(system);
  return score(test, predicted,
               [&](std::string_view f) {
                 auto it = train_counts.find(std::string(f));
                 return it == train_counts.end() ? std::size_t{0} : it->second;
               },
               tags);
}

EvalReport evaluate(const TaggingSystem& system, const Corpus& test) {
  const auto predicted = tag_all(system, test);
  const auto tags = system_tags(system);
  return score(test, predicted, [&](std::string_view f) { return system.train_frequency(f); }, tags);
}

std::string to_json(const EvalReport& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["oov_accuracy"] = r.oov_accuracy;
  j["tokens"] = r.tokens;
  j["correct"] = r.correct;
  j["oov_tokens"] = r.oov_tokens;
  j["oov_correct"] = r.oov_correct;
  j["confusion"] = r.confusion;
  j["unknown_gold_tags"] = r.unknown_gold_tags;
  return j.dump(2);
}

std::size_t log_frequency_bin(std::size_t freq) {
  return static_cast<std::size_t>(std::log(1.0 + static_cast<double>(freq)));
}

std::vector<FreqBinRow> freq_bin_report(const TaggingSystem& a, const TaggingSystem& b,
                                        const Corpus& test, const WordCounts& train_counts,
                                        std::size_t n_bins) {
  if (n_bins == 0) throw Error("freq_bin_report: n_bins must be positive");
  std::vector<std::size_t> total(n_bins, 0), right_a(n_bins, 0), right_b(n_bins, 0);
  for (const auto& s : test.sentences) {
    const auto pa = a.tag(s.forms);
    const auto pb = b.tag(s.forms);
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto it = train_counts.find(s.forms[i]);
      const std::size_t freq = it == train_counts.end() ? 0 : it->second;
      const std::size_t bin = std::min(log_frequency_bin(freq), n_bins - 1);
      ++total[bin];
      right_a[bin] += pa[i] == s.tags[i];
      right_b[bin] += pb[i] == s.tags[i];
    }
  }
  std::vector<FreqBinRow> rows(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    rows[k].bin = k;
    rows[k].tokens = total[k];
    if (total[k] > 0) {
      rows[k].accuracy_a = ratio(right_a[k], total[k]);
      rows[k].accuracy_b = ratio(right_b[k], total[k]);
      rows[k].delta = *rows[k].accuracy_a - *rows[k].accuracy_b;
    }
  }
  return rows;
}

std::string freq_bin_csv(std::span<const FreqBinRow> rows, const CsvMetadata& metadata) {
  std::ostringstream out;
  write_metadata(out, metadata);
  out << "bin,min_freq,tokens,accuracy_a,accuracy_b,delta\n";
  for (const auto& r : rows) {
    // Smallest count landing in this bin: ceil(e^bin - 1).
    const auto min_freq = static_cast<std::size_t>(std::ceil(std::exp(static_cast<double>(r.bin)) - 1.0));
    out << r.bin << ',' << min_freq << ',' << r.tokens << ','
        << (r.accuracy_a ? fmt(*r.accuracy_a) : "") << ',' << (r.accuracy_b ? fmt(*r.accuracy_b) : "")
        << ',' << (r.delta ? fmt(*r.delta) : "") << '\n';
  }
  return out.str();
}

SystemSpec bilstm_system(const Hyperparams& hp, std::string name) {
  SystemSpec spec;
  spec.name = std::move(name);
  spec.train = [hp](const Corpus& train, std::uint64_t seed) -> std::unique_ptr<TaggingSystem> {
    Hyperparams local = hp;
    local.seed = seed;
    return std::make_unique<TaggerModel>(TaggerModel::train(train, local));
  };
  spec.params = {{"lr", fmt(hp.lr, 4)},
                 {"epochs", std::to_string(hp.epochs)},
                 {"sigma", fmt(hp.sigma, 4)},
                 {"word_dim", std::to_string(hp.word_dim)},
                 {"subtoken_dim", std::to_string(hp.subtoken_dim)},
                 {"hidden_dim", std::to_string(hp.hidden_dim)},
                 {"repr", to_string(hp.repr)},
                 {"freqbin", hp.freqbin ? "1" : "0"},
                 {"cell", to_string(hp.cell)},
                 {"unk_replace_prob", fmt(hp.unk_replace_prob, 4)},
                 {"embeddings", hp.pretrained_path.value_or("")}};
  return spec;
}

SystemSpec tnt_system(const TntConfig& config, std::string name) {
  SystemSpec spec;
  spec.name = std::move(name);
  spec.train = [config](const Corpus& train, std::uint64_t) -> std::unique_ptr<TaggingSystem> {
    return std::make_unique<TrigramModel>(TrigramModel::train(train, config));
  };
  spec.params = {{"beam", fmt(config.beam, 1)},
                 {"max_suffix", std::to_string(config.max_suffix)},
                 {"suffix_max_freq", std::to_string(config.suffix_max_freq)}};
  return spec;
}

namespace {

struct Cell {
  std::size_t data_index;  // into the prepared corpora
  std::size_t system;
  std::uint64_t seed;
  CurvePoint point;
};

struct PreparedData {
  Corpus train;
  double x;
  std::size_t corrupted = 0;
};

void run_cells(std::vector<Cell>& cells, const std::vector<PreparedData>& data,
               std::span<const SystemSpec> systems, const Corpus& dev, std::size_t jobs) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cells.size()) return;
      Cell& c = cells[k];
      const auto& d = data[c.data_index];
      const auto start = std::chrono::steady_clock::now();
      const auto system = systems[c.system].train(d.train, c.seed);
      const auto report = evaluate(*system, dev);
      const auto stop = std::chrono::steady_clock::now();
      c.point.x = d.x;
      c.point.system = systems[c.system].name;
      c.point.seed = c.seed;
      c.point.accuracy = report.accuracy;
      c.point.oov_accuracy = report.oov_accuracy;
      c.point.train_sentences = d.train.size();
      c.point.corrupted = d.corrupted;
      c.point.seconds = std::chrono::duration<double>(stop - start).count();
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, cells.size()));
  if (n == 1) {
    worker();
    return;
  }
  std::vector<std::thread> threads;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t t = 0; t < n; ++t) {
    threads.emplace_back([&] {
      try {
        worker();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cells.size());
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

template <typename Prepare>
std::vector<CurvePoint> run_grid(std::size_t x_count, std::span<const SystemSpec> systems,
                                 const Corpus& dev, const CurveOptions& options, Prepare prepare) {
  if (systems.empty()) throw Error("no systems to run");
  if (options.seeds == 0) throw Error("seeds must be positive");
  std::vector<CurvePoint> out;
  for (std::size_t run = 0; run < options.seeds; ++run) {
    const std::uint64_t base = options.seed + run;
    std::vector<PreparedData> data;
    data.reserve(x_count);
    for (std::size_t xi = 0; xi < x_count; ++xi) data.push_back(prepare(xi, base));
    std::vector<Cell> cells;
    for (std::size_t xi = 0; xi < x_count; ++xi) {
      for (std::size_t s = 0; s < systems.size(); ++s) {
        const std::uint64_t index = xi * systems.size() + s;
        cells.push_back(Cell{xi, s, base ^ index, {}});
      }
    }
    run_cells(cells, data, systems, dev, options.jobs);
    for (auto& c : cells) out.push_back(std::move(c.point));
  }
  return out;
}

}  // namespace

std::vector<CurvePoint> learning_curve(const Corpus& train, const Corpus& dev,
                                       std::span<const std::size_t> sizes,
                                       std::span<const SystemSpec> systems,
                                       const CurveOptions& options) {
  if (sizes.empty()) throw Error("learning_curve: no sizes given");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] == 0 || sizes[k] > train.size()) {
      throw Error("learning_curve: size " + std::to_string(sizes[k]) + " exceeds the " +
                  std::to_string(train.size()) + " training sentences");
    }
    if (k > 0 && sizes[k] <= sizes[k - 1]) throw Error("learning_curve: sizes must be ascending");
  }
  return run_grid(sizes.size(), systems, dev, options, [&](std::size_t xi, std::uint64_t base) {
    Rng rng = Rng(base).derive(xi);
    PreparedData d{subsample(train, sizes[xi], rng), static_cast<double>(sizes[xi]), 0};
    return d;
  });
}

std::vector<CurvePoint> noise_curve(const Corpus& train, const Corpus& dev,
                                    std::span<const double> rates,
                                    std::span<const SystemSpec> systems,
                                    const CurveOptions& options) {
  if (rates.empty()) throw Error("noise_curve: no rates given");
  for (double r : rates) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error("noise_curve: rate " + std::to_string(r) + " outside [0, 1]");
  }
  return run_grid(rates.size(), systems, dev, options, [&](std::size_t xi, std::uint64_t base) {
    Rng rng = Rng(base).derive(1000 + xi);
    auto corrupted = corrupt_labels(train, rates[xi], rng);
    return PreparedData{std::move(corrupted.corpus), rates[xi], corrupted.corrupted};
  });
}

std::vector<std::size_t> default_curve_sizes(std::size_t full) {
  std::vector<std::size_t> sizes;
  for (std::size_t s : {100, 500, 1000, 2000, 5000}) {
    if (s < full) sizes.push_back(s);
  }
  if (full > 0) sizes.push_back(full);
  return sizes;
}

std::vector<double> default_noise_rates() { return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}; }

std::string curve_csv(std::span<const CurvePoint> points, const std::string& x_name,
                      const CsvMetadata& metadata, bool include_timing) {
  std::ostringstream out;
  write_metadata(out, metadata);
  out << x_name << ",system,seed,accuracy,oov_accuracy,train_sentences,corrupted";
  if (include_timing) out << ",seconds";
  out << '\n';
  const bool integral_x = std::all_of(points.begin(), points.end(),
                                      [](const CurvePoint& p) { return p.x == std::floor(p.x); });
  auto x_text = [&](double x) { return integral_x ? std::to_string(static_cast<std::size_t>(x)) : fmt(x, 4); };
  for (const auto& p : points) {
    out << x_text(p.x) << ',' << p.system << ',' << p.seed << ',' << fmt(p.accuracy) << ','
        << fmt(p.oov_accuracy) << ',' << p.train_sentences << ',' << p.corrupted;
    if (include_timing) out << ',' << fmt(p.seconds, 3);
    out << '\n';
  }
  // Aggregate rows across seeds for each (x, system) in first-seen order.
  std::vector<std::pair<double, std::string>> keys;
  for (const auto& p : points) {
    std::pair<double, std::string> key{p.x, p.system};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  bool repeated = false;
  for (const auto& key : keys) {
    std::size_t n = 0;
    for (const auto& p : points) n += (p.x == key.first && p.system == key.second);
    repeated = repeated || n > 1;
  }
  if (!repeated) return out.str();
  for (const auto& [x, system] : keys) {
    std::vector<const CurvePoint*> group;
    for (const auto& p : points) {
      if (p.x == x && p.system == system) group.push_back(&p);
    }
    const double n = static_cast<double>(group.size());
    double ma = 0, mo = 0;
    for (const auto* p : group) {
      ma += p->accuracy;
      mo += p->oov_accuracy;
    }
    ma /= n;
    mo /= n;
    double va = 0, vo = 0;
    for (const auto* p : group) {
      va += (p->accuracy - ma) * (p->accuracy - ma);
      vo += (p->oov_accuracy - mo) * (p->oov_accuracy - mo);
    }
    const double denom = group.size() > 1 ? n - 1 : 1;
    out << x_text(x) << ',' << system << ",mean," << fmt(ma) << ',' << fmt(mo) << ','
        << group.front()->train_sentences << ',' << group.front()->corrupted;
    if (include_timing) out << ',';
    out << '\n';
    out << x_text(x) << ',' << system << ",sd," << fmt(std::sqrt(va / denom)) << ','
        << fmt(std::sqrt(vo / denom)) << ',' << group.front()->train_sentences << ','
        << group.front()->corrupted;
    if (include_timing) out << ',';
    out << '\n';
  }
  return out.str();
}

}  // namespace seqtag
