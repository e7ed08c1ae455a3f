#pragma once

#include <cstdint>
#include <random>

namespace volleymc {

// Random draws for the sampler and the replication engine.  All distributions
// are implemented here instead of through <random>'s distribution classes:
// the standard leaves those algorithms implementation-defined, and we promise
// bit-identical traces for a given seed no matter which stdlib the binary was
// built against.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in {0, ..., n - 1}, rejection sampled to avoid modulo
  // bias.
  std::size_t uniform_index(std::size_t n);

  // Standard normal via the Marsaglia polar method.  The spare value is
  // discarded so that the mapping from engine stream to output stream stays
  // stateless.
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma with shape/rate parameterisation (mean shape/rate).
  // Marsaglia-Tsang squeeze for shape >= 1, boosted from shape + 1 otherwise.
  double gamma(double shape, double rate);

  double chi_squared(double df) { return gamma(0.5 * df, 0.5); }

  // Poisson count; inversion by multiplication for small means, the PTRS
  // transformed-rejection sampler for large ones.
  long poisson(double mean);

  // Stable sub-seed derivation (splitmix64 finaliser), used to give each
  // chain / replicate its own independent stream.
  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
};

}  // namespace volleymc
