#pragma once

#include <cstdint>
#include <random>

namespace ddlqr {

/// SplitMix64 finalizer, used to derive independent seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for sub-stream `index` of a master seed. Streams for different
/// indices are independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

/// Reproducible Gaussian source.
///
/// Engine: std::mt19937_64 (its output sequence is fixed by the C++
/// standard). Uniforms: u = (bits >> 11 + 1)·2⁻⁵³ ∈ (0, 1]. Normals: basic
/// Box–Muller, z₀ = √(−2 ln u₁)·cos(2πu₂) then z₁ = √(−2 ln u₁)·sin(2πu₂),
/// consumed in that order. std::normal_distribution is avoided because its
/// algorithm differs across standard libraries.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in (0, 1].
  double uniform();
  /// Uniform in (lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace ddlqr
