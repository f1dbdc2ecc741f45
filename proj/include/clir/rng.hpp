#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace clir {

/// Deterministic random source. All distribution transforms are hand-rolled
/// on top of the raw mt19937_64 word stream, so draw sequences are
/// bit-identical across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1), 53 bits of precision.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Rejection sampling keeps the draw unbiased.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang squeeze, shape > 0.
  double gamma(double shape);

  /// Symmetric Dirichlet sample of dimension k.
  std::vector<double> dirichlet(double alpha, std::size_t k);

  /// Index draw proportional to non-negative weights (need not be normalized).
  std::size_t categorical(std::span<const double> weights);

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace clir
