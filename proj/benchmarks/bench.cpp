#include <benchmark/benchmark.h>

#include <numeric>
#include <string>
#include <vector>

#include "seqtag/corpus.hpp"
#include "seqtag/recurrent.hpp"
#include "seqtag/rng.hpp"
#include "seqtag/tagger.hpp"
#include "seqtag/tape.hpp"
#include "seqtag/tnt.hpp"

namespace {

using namespace seqtag;

// Random words over a small alphabet; each word's tag is a function of its
// last letter so both taggers have something to learn.
Corpus random_corpus(std::size_t sentences, std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  const std::string letters = "abcdefghijklmnop";
  Corpus corpus;
  for (std::size_t s = 0; s < sentences; ++s) {
    Sentence sentence;
    for (std::size_t i = 0; i < length; ++i) {
      std::string word;
      const std::size_t n = 2 + rng.below(6);
      for (std::size_t k = 0; k < n; ++k) word += letters[rng.below(letters.size())];
      sentence.tags.push_back("T" + std::to_string(word.back() % 12));
      sentence.forms.push_back(std::move(word));
    }
    corpus.sentences.push_back(std::move(sentence));
  }
  return corpus;
}

void BM_LstmStep(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  ParameterStore store;
  Rng rng(1);
  const Cell cell = Cell::create(store, "lstm", CellKind::lstm, dim, dim, rng);
  std::vector<double> x(dim);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    Tape tape(Tape::Mode::inference);
    RnnState s = zero_state(tape, cell);
    s = cell_step(tape, cell, tape.input(x), s);
    benchmark::DoNotOptimize(s.h);
  }
}
BENCHMARK(BM_LstmStep)->Arg(32)->Arg(100)->Arg(128);

void BM_LstmSequenceBackward(benchmark::State& state) {
  const std::size_t dim = 100;
  const auto length = static_cast<std::size_t>(state.range(0));
  ParameterStore store;
  Rng rng(2);
  const Cell cell = Cell::create(store, "lstm", CellKind::lstm, dim, dim, rng);
  std::vector<std::vector<double>> inputs(length, std::vector<double>(dim));
  for (auto& x : inputs)
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    Tape tape;
    std::vector<Var> xs;
    for (const auto& x : inputs) xs.push_back(tape.input(x));
    const auto states = run(tape, cell, xs, Direction::forward);
    tape.backward(tape.softmax_xent(states.back().h, 0));
    store.clear_gradients();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(length));
}
BENCHMARK(BM_LstmSequenceBackward)->Arg(10)->Arg(40);

void BM_Viterbi(benchmark::State& state) {
  const Corpus train = random_corpus(500, 15, 3);
  const Corpus test = random_corpus(1, static_cast<std::size_t>(state.range(0)), 4);
  const TrigramModel model = TrigramModel::train(train);
  const double beam = static_cast<double>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(viterbi(model, test.sentences[0].forms, beam));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Viterbi)->Args({25, 0})->Args({25, 1000})->Args({100, 1000});

void BM_TaggerTrainEpoch(benchmark::State& state) {
  const Corpus train = random_corpus(20, 15, 5);
  Hyperparams hp;
  hp.repr = state.range(0) == 0 ? ReprMode::w : ReprMode::wc;
  TaggerModel model = TaggerModel::initialize(train, hp);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(6);
  int epoch = 0;
  for (auto _ : state) benchmark::DoNotOptimize(model.train_epoch(train, order, rng, ++epoch));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(train.size()));
  state.SetLabel(state.range(0) == 0 ? "w" : "wc");
}
BENCHMARK(BM_TaggerTrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
