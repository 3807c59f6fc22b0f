#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

// Deterministic, portable random number generation.
//
// Every random quantity in the library is derived from a single 64-bit seed
// through a counter-based scheme so that results can be reproduced exactly,
// draw for draw, in any language:
//
//   mix64(z)                Stafford "mix13" finalizer (the SplitMix64 mixer).
//   derive_seed(seed, i)    mix64(mix64(seed + GOLDEN) + i * GOLDEN).
//   SplitMix64(s).next()    mix64(state += GOLDEN), state starts at s.
//
// Purpose-specific streams use derive_seed with the fixed Stream indices
// below; nested contexts (e.g. per-trial seeds) chain derive_seed calls.
// Higher-level draws consume uniforms in a fixed documented order; see the
// individual member functions.

namespace kuq {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed + kGolden) + index * kGolden);
}

// Fixed substream indices. One user-facing seed expands into independent
// streams for each purpose, so e.g. the transforms drawn for a region never
// depend on how much noise was sampled before them.
enum class Stream : std::uint64_t {
  noise = 1,
  transforms = 2,
  tie_order = 3,
  sampler = 4,
  directions = 5,
};

class SplitMix64 {
 public:
  constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept { return mix64(state_ += kGolden); }

  // Uniform on the open interval (0, 1): ((x >> 11) + 0.5) * 2^-53.
  double uniform01() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform on (-half_width, half_width).
  double uniform_sym(double half_width) noexcept {
    return (2.0 * uniform01() - 1.0) * half_width;
  }

  // Standard normal via the Box-Muller cosine branch; consumes exactly two
  // uniforms per draw.
  double gaussian() noexcept {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Laplace(location, scale) by inverse CDF; one uniform per draw.
  double laplace(double location, double scale) noexcept {
    const double u = uniform01() - 0.5;
    const double s = u < 0.0 ? -1.0 : 1.0;
    return location - scale * s * std::log1p(-2.0 * std::abs(u));
  }

  // Binomial(trials, p) as a sum of Bernoulli draws; one uniform per trial.
  int binomial(int trials, double p) noexcept {
    int count = 0;
    for (int i = 0; i < trials; ++i) count += uniform01() < p ? 1 : 0;
    return count;
  }

  double sign_pm() noexcept { return uniform01() < 0.5 ? -1.0 : 1.0; }

  // Uniform index in {0, ..., k-1}.
  std::size_t index_below(std::size_t k) noexcept {
    const auto j = static_cast<std::size_t>(uniform01() * static_cast<double>(k));
    return j >= k ? k - 1 : j;
  }

  // Fisher-Yates, iterating i from n-1 down to 1 with j = index_below(i + 1).
  template <class T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i-- > 1;) {
      const std::size_t j = index_below(i + 1);
      std::swap(items[i], items[j]);
    }
  }

  std::vector<int> permutation(int n) {
    if (n < 0) throw std::invalid_argument("permutation: negative size");
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    shuffle(p);
    return p;
  }

 private:
  std::uint64_t state_;
};

inline SplitMix64 stream(std::uint64_t seed, Stream which) noexcept {
  return SplitMix64(derive_seed(seed, static_cast<std::uint64_t>(which)));
}

}  // namespace kuq
