#include "seqtag/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace seqtag {

std::size_t Rng::below(std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // Reject the low end so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

double Rng::gaussian(double sigma) {
  if (spare_) {
    double z = *spare_;
    spare_.reset();
    return sigma * z;
  }
  double u1 = uniform();
  while (u1 <= std::numeric_limits<double>::min()) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return sigma * radius * std::cos(angle);
}

Rng Rng::derive(std::uint64_t stream) const {
  Rng mixer(seed_ ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
  return Rng(mixer.next_u64());
}

}  // namespace seqtag
