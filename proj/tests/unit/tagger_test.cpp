#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "seqtag/error.hpp"
#include "seqtag/harness.hpp"
#include "seqtag/tagger.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

using namespace seqtag;
using seqtag::testing::TempDir;
using seqtag::testing::toy_corpus;

namespace {

Hyperparams tiny(ReprMode mode = ReprMode::wc, bool freqbin = true) {
  Hyperparams hp;
  hp.repr = mode;
  hp.freqbin = freqbin;
  hp.word_dim = 8;
  hp.subtoken_dim = 6;
  hp.hidden_dim = 5;
  hp.epochs = 2;
  return hp;
}

std::vector<double> values(const Tape& t, Var v) {
  auto s = t.value(v);
  return {s.begin(), s.end()};
}

Sentence three_tokens() { return Sentence{{"The", "dog", "runs"}, {"DET", "NOUN", "VERB"}, {}}; }

Corpus small_corpus() {
  Corpus c;
  c.sentences.push_back(three_tokens());
  c.sentences.push_back(Sentence{{"A", "dog", "sleeps"}, {"DET", "NOUN", "VERB"}, {}});
  c.sentences.push_back(Sentence{{"The", "cat", "runs", "fast"}, {"DET", "NOUN", "VERB", "ADV"}, {}});
  for (int i = 0; i < 12; ++i) c.sentences.push_back(Sentence{{"the"}, {"DET"}, {}});
  return c;
}

}  // namespace

TEST(Freqbin, LabelExamples) {
  EXPECT_EQ(freqbin_label(0), 0u);
  EXPECT_EQ(freqbin_label(1), 0u);
  EXPECT_EQ(freqbin_label(2), 0u);
  EXPECT_EQ(freqbin_label(3), 1u);
  EXPECT_EQ(freqbin_label(10), 2u);
  EXPECT_EQ(freqbin_label(100), 4u);
}

TEST(Freqbin, MatchesTruncatedNaturalLog) {
  for (std::size_t f = 1; f < 5000; ++f) {
    ASSERT_EQ(freqbin_label(f), static_cast<std::size_t>(std::trunc(std::log(static_cast<double>(f)))))
        << f;
  }
}

TEST(Freqbin, OtherBasesAtExactPowers) {
  EXPECT_EQ(freqbin_label(1000, 10.0), 3u);
  EXPECT_EQ(freqbin_label(999, 10.0), 2u);
  EXPECT_EQ(freqbin_label(1024, 2.0), 10u);
  EXPECT_EQ(freqbin_label(243, 3.0), 5u);
}

TEST(Freqbin, NBinsIsOnePlusMaxBin) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Corpus c = toy_corpus(10 + 40 * seed, seed + 1);
    std::size_t max_bin = 0;
    for (const auto& [form, n] : count_forms(c))
      max_bin = std::max(max_bin, static_cast<std::size_t>(std::log(static_cast<double>(n))));
    const TaggerModel m = TaggerModel::initialize(c, tiny());
    EXPECT_EQ(m.n_bins(), 1 + max_bin);
  }
}

TEST(HyperparamsTest, DefaultsAndValidation) {
  const Hyperparams hp;
  EXPECT_EQ(hp.lr, 0.1);
  EXPECT_EQ(hp.epochs, 20);
  EXPECT_EQ(hp.sigma, 0.2);
  EXPECT_EQ(hp.word_dim, 128u);
  EXPECT_EQ(hp.subtoken_dim, 100u);
  EXPECT_EQ(hp.hidden_dim, 100u);
  EXPECT_EQ(hp.freqbin_log_base, std::numbers::e);
  EXPECT_NO_THROW(hp.validate());
  Hyperparams bad = hp;
  bad.lr = -1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = hp;
  bad.epochs = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = hp;
  bad.hidden_dim = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Forward, ShapesAndHeads) {
  const Corpus c = small_corpus();
  for (bool fb : {false, true}) {
    const TaggerModel m = TaggerModel::initialize(c, tiny(ReprMode::wc, fb));
    EXPECT_EQ(m.tagset(), (std::vector<std::string>{"ADV", "DET", "NOUN", "VERB"}));
    Tape t(Tape::Mode::inference);
    const std::vector<std::string> toks{"The", "zebra", "runs"};
    const auto outs = m.forward_sentence(t, toks, false, nullptr);
    ASSERT_EQ(outs.size(), 3u);
    for (const auto& o : outs) {
      EXPECT_EQ(t.shape(o.tag_logits).rows, 4u);
      EXPECT_EQ(o.freq_logits.has_value(), fb);
      if (fb) {
        EXPECT_EQ(t.shape(*o.freq_logits).rows, m.n_bins());
      }
    }
    EXPECT_EQ(m.predict(toks).size(), 3u);
    EXPECT_EQ(m.params().find("head.freq.W") != nullptr, fb);
  }
}

TEST(Forward, DeterministicWithoutTraining) {
  const TaggerModel m = TaggerModel::initialize(small_corpus(), tiny());
  const std::vector<std::string> toks{"The", "cat", "sleeps"};
  Tape a(Tape::Mode::inference), b(Tape::Mode::inference);
  const auto oa = m.forward_sentence(a, toks, false, nullptr);
  const auto ob = m.forward_sentence(b, toks, false, nullptr);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(values(a, oa[i].tag_logits), values(b, ob[i].tag_logits));
}

TEST(Forward, EmptySentenceIsAnError) {
  const TaggerModel m = TaggerModel::initialize(small_corpus(), tiny());
  EXPECT_THROW(m.predict({}), DataError);
}

TEST(Forward, OneTokenMatchesBirnnSeq) {
  const TaggerModel m = TaggerModel::initialize(small_corpus(), tiny(ReprMode::wc, false));
  Tape t(Tape::Mode::inference);
  const std::vector<std::string> toks{"dog"};
  const auto outs = m.forward_sentence(t, toks, false, nullptr);
  Var x = token_repr(t, "dog", m.repr(), m.vocab());
  std::vector<Var> xs{x};
  Var v = birnn_seq(t, m.context_forward(), m.context_reverse(), xs);
  Var logits = t.affine(t.param(const_cast<Parameter&>(*m.params().find("head.tag.W"))), v,
                        t.param(const_cast<Parameter&>(*m.params().find("head.tag.b"))));
  EXPECT_EQ(values(t, outs[0].tag_logits), values(t, logits));
}

TEST(Loss, UniformHeadsGiveLogKPlusLogM) {
  TaggerModel m = TaggerModel::initialize(small_corpus(), tiny());
  for (const char* name : {"head.tag.W", "head.tag.b", "head.freq.W", "head.freq.b"})
    for (double& v : m.params().at(name).value().values()) v = 0.0;
  const double k = static_cast<double>(m.tagset().size());
  const double mb = static_cast<double>(m.n_bins());
  ASSERT_GT(mb, 1.0);
  Tape t(Tape::Mode::inference);
  Var loss = m.sentence_loss(t, Sentence{{"dog"}, {"NOUN"}, {}}, false, nullptr);
  EXPECT_NEAR(t.scalar(loss), std::log(k) + std::log(mb), 1e-12);
}

TEST(Loss, FreqbinOffEqualsTagLoss) {
  const TaggerModel m = TaggerModel::initialize(small_corpus(), tiny(ReprMode::wc, false));
  Tape t(Tape::Mode::inference);
  EXPECT_EQ(t.scalar(m.sentence_loss(t, three_tokens(), false, nullptr)),
            t.scalar(m.tag_loss(t, three_tokens())));
}

TEST(Loss, DecompositionAndNonNegativity) {
  const TaggerModel m = TaggerModel::initialize(small_corpus(), tiny());
  for (const auto& s : small_corpus().sentences) {
    Tape t(Tape::Mode::inference);
    const double full = t.scalar(m.sentence_loss(t, s, false, nullptr));
    const double tag = t.scalar(m.tag_loss(t, s));
    EXPECT_GE(full, tag);
    EXPECT_GE(tag, 0.0);
  }
}

TEST(Loss, UnknownGoldTag) {
  const TaggerModel m = TaggerModel::initialize(small_corpus(), tiny());
  Tape t(Tape::Mode::inference);
  EXPECT_THROW(m.sentence_loss(t, Sentence{{"dog"}, {"PROPN"}, {}}, false, nullptr), DataError);
}

TEST(Loss, FullModelGradientCheck) {
  for (ReprMode mode : {ReprMode::wc, ReprMode::cb}) {
    TaggerModel m = TaggerModel::initialize(small_corpus(), tiny(mode, true));
    std::vector<Parameter*> ps;
    for (auto& p : m.params()) ps.push_back(&p);
    const Sentence s = three_tokens();
    const double err = gradient_check(
        [&](Tape& t) { return m.sentence_loss(t, s, false, nullptr); }, ps, 1e-5);
    EXPECT_LT(err, 1e-4) << to_string(mode);
  }
}

TEST(Train, FirstEpochLossesDecrease) {
  Hyperparams hp;
  hp.epochs = 3;
  std::vector<double> losses;
  TaggerModel::train(toy_corpus(50), hp, nullptr,
                     [&](const EpochReport& r) { losses.push_back(r.mean_loss); });
  ASSERT_EQ(losses.size(), 3u);
  EXPECT_GT(losses[0], losses[1]);
  EXPECT_GT(losses[1], losses[2]);
}

TEST(Train, DevAccuracyReported) {
  Hyperparams hp = tiny();
  const Corpus c = toy_corpus(20);
  std::vector<EpochReport> reports;
  TaggerModel::train(c, hp, &c, [&](const EpochReport& r) { reports.push_back(r); });
  ASSERT_EQ(reports.size(), 2u);
  ASSERT_TRUE(reports[1].dev_accuracy.has_value());
  EXPECT_GE(*reports[1].dev_accuracy, 0.0);
  EXPECT_LE(*reports[1].dev_accuracy, 1.0);
}

TEST(Train, SameSeedBitIdenticalModels) {
  const Corpus c = toy_corpus(15);
  const auto a = TaggerModel::train(c, tiny()).serialize();
  const auto b = TaggerModel::train(c, tiny()).serialize();
  EXPECT_EQ(a, b);
  Hyperparams other = tiny();
  other.seed = 2;
  EXPECT_NE(TaggerModel::train(c, other).serialize(), a);
}

TEST(Train, DivergenceIsReported) {
  Hyperparams hp = tiny(ReprMode::w, false);
  hp.lr = 1e300;
  hp.epochs = 3;
  try {
    TaggerModel::train(toy_corpus(10), hp);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.epoch(), 1);
  }
}

TEST(Train, EmptyCorpusRejected) { EXPECT_THROW(TaggerModel::train(Corpus{}, tiny()), DataError); }

TEST(Predict, ArgmaxIgnoresConstantShift) {
  TaggerModel m = TaggerModel::train(toy_corpus(10), tiny());
  const std::vector<std::string> toks = toy_corpus(3, 9).sentences[0].forms;
  const auto before = m.predict(toks);
  for (double& v : m.params().at("head.tag.b").value().values()) v += 3.25;
  EXPECT_EQ(m.predict(toks), before);
}

TEST(Predict, TiesGoToLowestIndex) {
  TaggerModel m = TaggerModel::initialize(small_corpus(), tiny());
  for (const char* name : {"head.tag.W", "head.tag.b"})
    for (double& v : m.params().at(name).value().values()) v = 0.0;
  for (std::size_t id : m.predict_ids(std::vector<std::string>{"a", "b"})) EXPECT_EQ(id, 0u);
}

TEST(Persistence, SaveLoadPredictIdentity) {
  TempDir dir;
  for (bool fb : {false, true}) {
    const TaggerModel m = TaggerModel::train(toy_corpus(12), tiny(ReprMode::wc, fb));
    const auto path = dir / "m.bin";
    m.save(path);
    const TaggerModel back = TaggerModel::load(path);
    EXPECT_EQ(back.name(), m.name());
    EXPECT_EQ(back.serialize(), m.serialize());
    for (const auto& s : toy_corpus(20, 77).sentences) EXPECT_EQ(back.predict(s.forms), m.predict(s.forms));
    const std::vector<std::string> unseen{"Qwerty", "zzz", "\xC3\xA9t\xC3\xA9"};
    EXPECT_EQ(back.predict(unseen), m.predict(unseen));
  }
}

TEST(Persistence, FormatStartsWithMagicAndVersion) {
  const auto bytes = TaggerModel::initialize(small_corpus(), tiny()).serialize();
  ASSERT_GT(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.data(), 8), "SEQTAGMF");
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[9], 0);
}

TEST(Persistence, CorruptionDetected) {
  auto bytes = TaggerModel::initialize(small_corpus(), tiny()).serialize();
  for (std::size_t pos : {std::size_t{3}, std::size_t{9}, bytes.size() / 2, bytes.size() - 1}) {
    auto broken = bytes;
    broken[pos] = static_cast<char>(broken[pos] ^ 0x10);
    EXPECT_THROW(TaggerModel::deserialize(broken), FormatError) << pos;
  }
  EXPECT_THROW(TaggerModel::deserialize(std::span<const char>(bytes.data(), bytes.size() - 7)), FormatError);
  EXPECT_THROW(TaggerModel::deserialize({}), FormatError);
}

TEST(Persistence, WrongKind) {
  const auto tnt = TrigramModel::train(small_corpus()).serialize();
  EXPECT_THROW(TaggerModel::deserialize(tnt), FormatError);
}

TEST(Persistence, CellKindAndLogBaseSurvive) {
  Hyperparams hp = tiny();
  hp.cell = CellKind::simple_rnn;
  hp.freqbin_log_base = 10.0;
  const TaggerModel m = TaggerModel::train(toy_corpus(8), hp);
  const TaggerModel back = TaggerModel::deserialize(m.serialize());
  EXPECT_EQ(back.hyperparams().cell, CellKind::simple_rnn);
  EXPECT_EQ(back.hyperparams().freqbin_log_base, 10.0);
  EXPECT_EQ(back.n_bins(), m.n_bins());
}

TEST(Names, ReflectModeAndFreqbin) {
  EXPECT_EQ(TaggerModel::initialize(small_corpus(), tiny(ReprMode::wc, true)).name(), "bilstm-wc-freqbin");
  EXPECT_EQ(TaggerModel::initialize(small_corpus(), tiny(ReprMode::c, false)).name(), "bilstm-c");
}
