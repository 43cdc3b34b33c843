#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace em {

// Deterministic uniform draws on top of mt19937_64. Distributions are
// hand-mapped so streams are identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // [0, 1) with 53-bit resolution.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // log-uniform over [lo, hi], lo > 0.
  double log_uniform(double lo, double hi);

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(unit() * static_cast<double>(n)); }

  std::uint64_t raw() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

inline double Rng::log_uniform(double lo, double hi) {
  const double u = unit();
  return lo * std::pow(hi / lo, u);
}

}  // namespace em
