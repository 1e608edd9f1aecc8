#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>

namespace seqtag {

// SplitMix64 generator (Steele, Lea & Flood 2014). Every random draw in the
// library goes through this class so a run is fully reproducible from its
// seed on any platform: uniform doubles use the top 53 bits of a draw, normal
// deviates use the Box-Muller transform (both outputs of a pair are used, the
// second is cached in the state), and shuffles are Fisher-Yates with
// rejection-sampled indices. std:: distributions are avoided because their
// algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // N(0, sigma^2).
  double gaussian(double sigma = 1.0);

  // Independent stream keyed by `stream`; does not advance this generator.
  Rng derive(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  std::optional<double> spare_;
};

}  // namespace seqtag
