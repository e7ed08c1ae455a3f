#include "volleymc/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace volleymc {

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

double Rng::normal() {
  while (true) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

double Rng::gamma(double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0) {
    throw std::invalid_argument("gamma: shape and rate must be positive");
  }
  if (shape < 1.0) {
    // Boost trick: X ~ Gamma(shape + 1), X * U^(1/shape) ~ Gamma(shape).
    const double x = gamma(shape + 1.0, 1.0);
    const double u = uniform();
    return x * std::pow(u, 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v / rate;
    }
  }
}

long Rng::poisson(double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    // Knuth: multiply uniforms until the product drops below exp(-mean).
    const double threshold = std::exp(-mean);
    long k = 0;
    double prod = uniform();
    while (prod > threshold) {
      ++k;
      prod *= uniform();
    }
    return k;
  }
  // Hormann's PTRS rejection sampler.
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        kf * loglam - mean - std::lgamma(kf + 1.0)) {
      return static_cast<long>(kf);
    }
  }
}

std::uint64_t Rng::derive_seed(std::uint64_t master, std::uint64_t salt) {
  // splitmix64 finaliser applied to master advanced by salt + 1 golden-ratio
  // steps; distinct salts give well-separated seeds even for master = 0.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace volleymc
