#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dgcn {

/// Deterministic random source. The mt19937_64 bit stream is pinned by the
/// C++ standard; the value mappings below are implemented here instead of
/// <random> distributions, whose outputs differ across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  /// Uniform double in [0, 1): top 53 bits of the generator word.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform index in [0, n). n must be > 0.
  std::size_t index(std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = gen_();
    while (r >= limit) r = gen_();
    return static_cast<std::size_t>(r % n);
  }

  /// Fisher-Yates shuffle with this generator.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace dgcn
