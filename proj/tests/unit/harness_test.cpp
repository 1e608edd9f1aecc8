#include <gtest/gtest.h>

#include <sstream>

#include "seqtag/error.hpp"
#include "seqtag/harness.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

using namespace seqtag;
using seqtag::testing::SyntheticConfig;
using seqtag::testing::SyntheticLanguage;

namespace {

using Table = std::map<std::string, std::string>;

// Tags each token with a fixed lookup; unknown forms get "X".
class TableSystem : public TaggingSystem {
 public:
  explicit TableSystem(std::map<std::string, std::string> table, WordCounts counts = {})
      : table_(std::move(table)), counts_(std::move(counts)) {}
  std::string name() const override { return "table"; }
  std::vector<std::string> tag(std::span<const std::string> forms) const override {
    std::vector<std::string> out;
    for (const auto& f : forms) {
      auto it = table_.find(f);
      out.push_back(it == table_.end() ? "X" : it->second);
    }
    return out;
  }
  std::size_t train_frequency(std::string_view form) const override {
    auto it = counts_.find(std::string(form));
    return it == counts_.end() ? 0 : it->second;
  }

 private:
  std::map<std::string, std::string> table_;
  WordCounts counts_;
};

Corpus four_tokens() {
  Corpus c;
  c.sentences.push_back(Sentence{{"a", "b"}, {"N", "V"}, {}});
  c.sentences.push_back(Sentence{{"c", "d"}, {"N", "V"}, {}});
  return c;
}

struct Data {
  Corpus train, dev;
};

Data synthetic(std::size_t train_n, std::size_t dev_n) {
  SyntheticConfig cfg;
  cfg.tags = 5;
  cfg.types_per_tag = 20;
  SyntheticLanguage lang(cfg);
  Rng rng(1);
  Data d;
  d.train = lang.sample(train_n, 0.0, rng);
  d.dev = lang.sample(dev_n, 0.1, rng);
  return d;
}

Hyperparams small_bilstm() {
  Hyperparams hp;
  hp.word_dim = 8;
  hp.subtoken_dim = 6;
  hp.hidden_dim = 6;
  hp.epochs = 1;
  return hp;
}

std::size_t count_lines(const std::string& s, char prefix) {
  std::istringstream in(s);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty() && line[0] == prefix;
  return n;
}

std::size_t data_lines(const std::string& s) {
  std::istringstream in(s);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty() && line[0] != '#';
  return n - 1;  // header
}

}  // namespace

TEST(Evaluate, PerfectAndAllWrong) {
  const Corpus c = four_tokens();
  EXPECT_EQ(evaluate(TableSystem({{"a", "N"}, {"b", "V"}, {"c", "N"}, {"d", "V"}}), c).accuracy, 1.0);
  EXPECT_EQ(evaluate(TableSystem({{"a", "V"}, {"b", "N"}, {"c", "V"}, {"d", "N"}}), c).accuracy, 0.0);
}

TEST(Evaluate, ThreeOfFourOneOfTwoOov) {
  // c and d are OOV; d is wrong.
  const TableSystem sys({{"a", "N"}, {"b", "V"}, {"c", "N"}, {"d", "N"}}, {{"a", 3}, {"b", 1}});
  const EvalReport r = evaluate(sys, four_tokens());
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.oov_accuracy, 0.5);
  EXPECT_EQ(r.tokens, 4u);
  EXPECT_EQ(r.oov_tokens, 2u);
  EXPECT_EQ(r.confusion.at("V").at("N"), 1u);
  // External counts give the same OOV split.
  const EvalReport r2 = evaluate(sys, four_tokens(), WordCounts{{"a", 3}, {"b", 1}});
  EXPECT_EQ(r2.oov_tokens, 2u);
}

TEST(Evaluate, UnknownGoldTagsReportedNotFatal) {
  const Corpus train = four_tokens();
  const auto m = TrigramModel::train(train);
  Corpus test = four_tokens();
  test.sentences[0].tags[0] = "PROPN";
  const EvalReport r = evaluate(m, test);
  EXPECT_EQ(r.unknown_gold_tags, (std::vector<std::string>{"PROPN"}));
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
}

TEST(Evaluate, JsonHasFields) {
  const std::string j = to_json(evaluate(TableSystem(Table{{"a", "N"}}), four_tokens()));
  for (const char* key : {"\"accuracy\"", "\"oov_accuracy\"", "\"confusion\"", "\"oov_tokens\""})
    EXPECT_NE(j.find(key), std::string::npos) << key;
}

TEST(FreqBins, IdenticalSystemsGiveZeroDeltasAndPartition) {
  const Data d = synthetic(60, 40);
  const auto m = TrigramModel::train(d.train);
  const WordCounts counts = count_forms(d.train);
  const auto rows = freq_bin_report(m, m, d.dev, counts, 6);
  std::size_t total = 0;
  for (const auto& r : rows) {
    total += r.tokens;
    if (r.tokens > 0) {
      EXPECT_EQ(*r.delta, 0.0);
    } else {
      EXPECT_FALSE(r.delta.has_value());
    }
  }
  EXPECT_EQ(total, d.dev.token_count());
}

TEST(FreqBins, BinningRule) {
  EXPECT_EQ(log_frequency_bin(0), 0u);
  EXPECT_EQ(log_frequency_bin(1), 0u);  // ln 2
  EXPECT_EQ(log_frequency_bin(2), 1u);  // ln 3
  EXPECT_EQ(log_frequency_bin(6), 1u);  // ln 7
  EXPECT_EQ(log_frequency_bin(7), 2u);  // ln 8
}

TEST(FreqBins, EmptyBinsAreBlankInCsv) {
  Corpus test = four_tokens();
  const TableSystem a(Table{{"a", "N"}}), b(Table{});
  const auto rows = freq_bin_report(a, b, test, WordCounts{}, 3);
  const std::string csv = freq_bin_csv(rows, {{"seed", "1"}});
  EXPECT_EQ(csv.rfind("# seed=1\n", 0), 0u);
  EXPECT_NE(csv.find("bin,min_freq,tokens,accuracy_a,accuracy_b,delta\n"), std::string::npos);
  EXPECT_NE(csv.find("0,0,4,0.250000,0.000000,0.250000\n"), std::string::npos);
  EXPECT_NE(csv.find("1,2,0,,,\n"), std::string::npos);
}

TEST(Curves, DefaultGrids) {
  EXPECT_EQ(default_curve_sizes(12000), (std::vector<std::size_t>{100, 500, 1000, 2000, 5000, 12000}));
  EXPECT_EQ(default_curve_sizes(700), (std::vector<std::size_t>{100, 500, 700}));
  EXPECT_EQ(default_noise_rates(), (std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5}));
}

TEST(Curves, FullSizeDegeneratesToEvaluate) {
  const Data d = synthetic(80, 30);
  const std::vector<SystemSpec> systems{tnt_system()};
  const std::vector<std::size_t> sizes{d.train.size()};
  const auto pts = learning_curve(d.train, d.dev, sizes, systems);
  ASSERT_EQ(pts.size(), 1u);
  const auto direct = evaluate(TrigramModel::train(d.train), d.dev);
  EXPECT_EQ(pts[0].accuracy, direct.accuracy);
  EXPECT_EQ(pts[0].oov_accuracy, direct.oov_accuracy);
  EXPECT_EQ(pts[0].train_sentences, d.train.size());
}

TEST(Curves, RowCountAndCellSeeds) {
  const Data d = synthetic(120, 20);
  const std::vector<SystemSpec> systems{tnt_system(), bilstm_system(small_bilstm())};
  const std::vector<std::size_t> sizes{10, 40, 120};
  CurveOptions opts;
  opts.seed = 5;
  const auto pts = learning_curve(d.train, d.dev, sizes, systems, opts);
  ASSERT_EQ(pts.size(), 6u);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    EXPECT_EQ(pts[k].seed, 5u ^ k);
    EXPECT_EQ(pts[k].system, k % 2 ? "bilstm" : "tnt");
    EXPECT_EQ(pts[k].x, static_cast<double>(sizes[k / 2]));
  }
  const std::string csv = curve_csv(pts, "sentences", {{"seed", "5"}});
  EXPECT_EQ(data_lines(csv), 6u);
  EXPECT_NE(csv.find("sentences,system,seed,accuracy,oov_accuracy,train_sentences,corrupted\n"),
            std::string::npos);
  EXPECT_NE(csv.find("\n40,tnt,"), std::string::npos);
}

TEST(Curves, NoiseRateZeroEqualsPlainEvaluation) {
  const Data d = synthetic(80, 30);
  const std::vector<SystemSpec> systems{tnt_system()};
  const std::vector<double> rates{0.0, 0.5};
  const auto pts = noise_curve(d.train, d.dev, rates, systems);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].accuracy, evaluate(TrigramModel::train(d.train), d.dev).accuracy);
  EXPECT_EQ(pts[0].corrupted, 0u);
  EXPECT_GT(pts[1].corrupted, 0u);
}

TEST(Curves, Errors) {
  const Data d = synthetic(20, 5);
  const std::vector<SystemSpec> systems{tnt_system()};
  const std::vector<std::size_t> too_big{10, 21};
  const std::vector<std::size_t> descending{10, 5};
  EXPECT_THROW(learning_curve(d.train, d.dev, too_big, systems), Error);
  EXPECT_THROW(learning_curve(d.train, d.dev, descending, systems), Error);
  const std::vector<double> bad_rate{0.2, 1.2};
  EXPECT_THROW(noise_curve(d.train, d.dev, bad_rate, systems), Error);
  const std::vector<double> neg_rate{-0.1};
  EXPECT_THROW(noise_curve(d.train, d.dev, neg_rate, systems), Error);
}

TEST(Curves, ParallelMatchesSerialAndCsvIsDeterministic) {
  const Data d = synthetic(60, 20);
  const std::vector<SystemSpec> systems{tnt_system(), bilstm_system(small_bilstm())};
  const std::vector<double> rates{0.0, 0.2, 0.4};
  CurveOptions serial, parallel;
  parallel.jobs = 3;
  const auto a = curve_csv(noise_curve(d.train, d.dev, rates, systems, serial), "noise_rate", {});
  const auto b = curve_csv(noise_curve(d.train, d.dev, rates, systems, parallel), "noise_rate", {});
  const auto c = curve_csv(noise_curve(d.train, d.dev, rates, systems, serial), "noise_rate", {});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_NE(a.find("\n0.2000,tnt,"), std::string::npos);
}

TEST(Curves, MultipleSeedsAddMeanAndSd) {
  const Data d = synthetic(60, 20);
  const std::vector<SystemSpec> systems{tnt_system()};
  const std::vector<std::size_t> sizes{20, 60};
  CurveOptions opts;
  opts.seeds = 3;
  const auto pts = learning_curve(d.train, d.dev, sizes, systems, opts);
  ASSERT_EQ(pts.size(), 6u);
  const std::string csv = curve_csv(pts, "sentences", {}, true);
  EXPECT_NE(csv.find(",seconds\n"), std::string::npos);
  EXPECT_NE(csv.find("\n20,tnt,mean,"), std::string::npos);
  EXPECT_NE(csv.find("\n60,tnt,sd,"), std::string::npos);
  // The full-size cell sees the same data every run, so its sd is zero.
  EXPECT_NE(csv.find("\n60,tnt,sd,0.000000,0.000000,"), std::string::npos);
  EXPECT_EQ(count_lines(csv, '#'), 0u);
}

TEST(LoadSystem, DispatchesOnKind) {
  seqtag::testing::TempDir dir;
  const Data d = synthetic(10, 1);
  TrigramModel::train(d.train).save(dir / "t.bin");
  TaggerModel::train(d.train, small_bilstm()).save(dir / "b.bin");
  EXPECT_EQ(load_system(dir / "t.bin")->name(), "tnt");
  EXPECT_EQ(load_system(dir / "b.bin")->name(), "bilstm-wc");
  dir.write("junk.bin", "not a model");
  EXPECT_THROW(load_system(dir / "junk.bin"), FormatError);
  EXPECT_THROW(load_system(dir / "missing.bin"), DataError);
}
