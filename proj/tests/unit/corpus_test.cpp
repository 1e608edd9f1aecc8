#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "seqtag/corpus.hpp"
#include "seqtag/error.hpp"
#include "seqtag/log.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

using namespace seqtag;
using seqtag::testing::TempDir;

namespace {

const char* kTwoSentences =
    "# sent_id = 1\n"
    "# text = The dog barks.\n"
    "1\tThe\tthe\tDET\tDT\t_\t2\tdet\t_\t_\n"
    "2\tdog\tdog\tNOUN\tNN\t_\t3\tnsubj\t_\t_\n"
    "3\tbarks\tbark\tVERB\tVBZ\t_\t0\troot\t_\t_\n"
    "4\t.\t.\tPUNCT\t.\t_\t3\tpunct\t_\t_\n"
    "\n"
    "# sent_id = 2\n"
    "1\tHello\thello\tINTJ\tUH\t_\t0\troot\t_\t_\n"
    "\n";

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return parse_conllu(in, "mem");
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.line();
  }
  return 0;
}

Corpus random_corpus(std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<std::string> alphabet{"a", "b", "Z", "\xC3\xA9", "\xE2\x82\xAC", "-", "'", "1"};
  Corpus c;
  const std::size_t n = 1 + rng.below(8);
  for (std::size_t s = 0; s < n; ++s) {
    Sentence sent;
    const std::size_t len = 1 + rng.below(10);
    for (std::size_t i = 0; i < len; ++i) {
      std::string form;
      const std::size_t k = 1 + rng.below(6);
      for (std::size_t j = 0; j < k; ++j) form += alphabet[rng.below(alphabet.size())];
      sent.forms.push_back(form);
      sent.tags.emplace_back(upos_tags()[rng.below(17)]);
    }
    c.sentences.push_back(sent);
  }
  return c;
}

}  // namespace

TEST(ReadConllu, TwoSentences) {
  const Corpus c = parse(kTwoSentences);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.sentences[0].forms, (std::vector<std::string>{"The", "dog", "barks", "."}));
  EXPECT_EQ(c.sentences[0].tags, (std::vector<std::string>{"DET", "NOUN", "VERB", "PUNCT"}));
  EXPECT_EQ(c.sentences[0].source.file, "mem");
  EXPECT_EQ(c.sentences[0].source.first_line, 3u);
  EXPECT_EQ(c.sentences[0].source.last_line, 6u);
  EXPECT_EQ(c.token_count(), 5u);
}

TEST(ReadConllu, RangeAndEmptyNodesSkipped) {
  const Corpus c = parse(
      "1\tI\tI\tPRON\t_\t_\t_\t_\t_\t_\n"
      "2-3\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "2\tdo\tdo\tAUX\t_\t_\t_\t_\t_\t_\n"
      "3\tn't\tnot\tPART\t_\t_\t_\t_\t_\t_\n"
      "3.1\tgo\tgo\tVERB\t_\t_\t_\t_\t_\t_\n"
      "4\tgo\tgo\tVERB\t_\t_\t_\t_\t_\t_\n");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.sentences[0].forms, (std::vector<std::string>{"I", "do", "n't", "go"}));
}

TEST(ReadConllu, WrongColumnCountNamesLine) {
  EXPECT_EQ(error_line("1\ta\ta\tX\t_\t_\t_\t_\t_\t_\n2\tb\tb\tX\t_\t_\t_\t_\t_\n"), 2u);
}

TEST(ReadConllu, EmptyFormOrTagNamesLine) {
  EXPECT_EQ(error_line("# c\n1\t\ta\tX\t_\t_\t_\t_\t_\t_\n"), 2u);
  EXPECT_EQ(error_line("1\ta\ta\t\t_\t_\t_\t_\t_\t_\n"), 1u);
}

TEST(ReadConllu, MissingFile) {
  EXPECT_THROW(read_conllu("/nonexistent/file.conllu"), DataError);
}

TEST(ReadConllu, SplitLabelAndFile) {
  TempDir dir;
  const auto p = dir.write("x.conllu", kTwoSentences);
  const Corpus c = read_conllu(p, Split::dev);
  EXPECT_EQ(c.split, Split::dev);
  EXPECT_EQ(c.sentences[1].source.file, p.string());
}

TEST(ReadConllu, TrailingSentenceWithoutBlankLine) {
  const Corpus c = parse("1\ta\ta\tX\t_\t_\t_\t_\t_\t_");
  ASSERT_EQ(c.size(), 1u);
}

TEST(RoundTrip, ConlluIdentityOnRandomCorpora) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Corpus c = random_corpus(seed);
    std::ostringstream out;
    write_conllu(c, out);
    const Corpus back = parse(out.str());
    ASSERT_EQ(back, c) << "seed " << seed;
    std::ostringstream again;
    write_conllu(back, again);
    EXPECT_EQ(again.str(), out.str());
  }
}

TEST(RoundTrip, TwoColumn) {
  const Corpus c = random_corpus(3);
  std::ostringstream out;
  write_twocol(c, out);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_twocol(in, "mem"), c);
}

TEST(TwoColumn, Errors) {
  std::istringstream in("a\tX\nb\n");
  try {
    parse_twocol(in, "mem");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Corrupt, RateZeroIsIdentity) {
  const Corpus c = random_corpus(1);
  Rng rng(1);
  const auto r = corrupt_labels(c, 0.0, rng);
  EXPECT_EQ(r.corpus, c);
  EXPECT_EQ(r.corrupted, 0u);
  EXPECT_EQ(r.tokens, c.token_count());
}

TEST(Corrupt, RateOneChangesEveryTag) {
  const Corpus c = random_corpus(2);
  Rng rng(1);
  const auto r = corrupt_labels(c, 1.0, rng);
  EXPECT_EQ(r.corrupted, c.token_count());
  const auto tags = tagset(c);
  for (std::size_t s = 0; s < c.size(); ++s) {
    for (std::size_t i = 0; i < c.sentences[s].size(); ++i) {
      EXPECT_NE(r.corpus.sentences[s].tags[i], c.sentences[s].tags[i]);
      EXPECT_TRUE(std::binary_search(tags.begin(), tags.end(), r.corpus.sentences[s].tags[i]));
    }
  }
}

TEST(Corrupt, RealizedRateWithinFourSigma) {
  const Corpus c = seqtag::testing::toy_corpus(2000);
  const double n = static_cast<double>(c.token_count());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto r = corrupt_labels(c, 0.3, rng);
    const double sd = std::sqrt(n * 0.3 * 0.7);
    EXPECT_NEAR(static_cast<double>(r.corrupted), 0.3 * n, 4 * sd);
    // Count differences directly.
    std::size_t diff = 0;
    for (std::size_t s = 0; s < c.size(); ++s) {
      ASSERT_EQ(r.corpus.sentences[s].forms, c.sentences[s].forms);
      for (std::size_t i = 0; i < c.sentences[s].size(); ++i)
        diff += r.corpus.sentences[s].tags[i] != c.sentences[s].tags[i];
    }
    EXPECT_EQ(diff, r.corrupted);
  }
}

TEST(Corrupt, Errors) {
  const Corpus c = random_corpus(4);
  Rng rng(1);
  EXPECT_THROW(corrupt_labels(c, -0.1, rng), Error);
  EXPECT_THROW(corrupt_labels(c, 1.5, rng), Error);
  Corpus mono;
  mono.sentences.push_back(Sentence{{"a", "b"}, {"X", "X"}, {}});
  EXPECT_THROW(corrupt_labels(mono, 0.5, rng), DataError);
  EXPECT_NO_THROW(corrupt_labels(mono, 0.0, rng));
}

TEST(Subsample, Examples) {
  const Corpus c = seqtag::testing::toy_corpus(30);
  Rng r1(5), r2(5), r3(6);
  EXPECT_EQ(subsample(c, c.size(), r1), c);
  const Corpus one = subsample(c, 1, r1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NE(std::find(c.sentences.begin(), c.sentences.end(), one.sentences[0]), c.sentences.end());
  Rng a(9), b(9);
  EXPECT_EQ(subsample(c, 10, a), subsample(c, 10, b));
  EXPECT_THROW(subsample(c, 0, r2), Error);
  EXPECT_THROW(subsample(c, c.size() + 1, r3), Error);
}

TEST(Subsample, KeepsCorpusOrderWithoutRepeats) {
  Corpus c;
  for (int i = 0; i < 40; ++i) c.sentences.push_back(Sentence{{std::to_string(i)}, {"X"}, {}});
  Rng rng(2);
  const Corpus s = subsample(c, 15, rng);
  int prev = -1;
  for (const auto& sent : s.sentences) {
    const int v = std::stoi(sent.forms[0]);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Stats, TokensTypesAndTagset) {
  Corpus c;
  c.sentences.push_back(Sentence{{"a", "a", "b"}, {"NOUN", "NOUN", "VERB"}, {}});
  const auto st = stats(c);
  EXPECT_EQ(st.tokens, 3u);
  EXPECT_EQ(st.types, 2u);
  EXPECT_EQ(st.tagset, (std::vector<std::string>{"NOUN", "VERB"}));
  EXPECT_TRUE(st.non_upos_tags.empty());
  EXPECT_NEAR(st.mean_log_freq, std::log(2.0) / 2.0, 1e-15);
  EXPECT_EQ(st.min_log_freq, 0.0);
  EXPECT_THROW(stats(Corpus{}), DataError);
}

TEST(Stats, NonUposTagsWarn) {
  Corpus c;
  c.sentences.push_back(Sentence{{"a"}, {"NN"}, {}});
  int warnings = 0;
  log::set_sink([&](log::Level lv, std::string_view) { warnings += lv == log::Level::warning; });
  const auto st = stats(c);
  log::reset_sink();
  EXPECT_EQ(st.non_upos_tags, (std::vector<std::string>{"NN"}));
  EXPECT_EQ(warnings, 1);
}

TEST(Stats, MeanLogFrequencyOfUniformCorpus) {
  // Every type seen 7 times: mean ln freq = ln 7.
  WordCounts counts{{"x", 7}, {"y", 7}, {"z", 7}};
  EXPECT_NEAR(mean_log_frequency(counts), std::log(7.0), 1e-15);
}

TEST(Upos, SeventeenSortedTags) {
  const auto& tags = upos_tags();
  EXPECT_EQ(tags.size(), 17u);
  EXPECT_TRUE(std::is_sorted(tags.begin(), tags.end()));
  EXPECT_EQ(std::set<std::string_view>(tags.begin(), tags.end()).size(), 17u);
}
