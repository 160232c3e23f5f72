// SPDX-License-Identifier: Apache-2.0
#include "recal/rng.hpp"

#include <cmath>

namespace recal {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void MismatchDistribution::validate() const {
  if (!std::isfinite(log_amp_var) || log_amp_var < 0.0)
    throw DomainError("MismatchDistribution: log_amp_var must be finite and >= 0");
  if (!(phase_bound >= 0.0 && phase_bound <= kPi))
    throw DomainError("MismatchDistribution: phase_bound must lie in [0, pi]");
}

Rng::Rng(std::uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

double Rng::uniform() {
  // 53 random bits
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  // Marsaglia polar method; no cached state so split streams stay independent.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

cplx Rng::complex_normal(double var) {
  const double s = std::sqrt(0.5 * var);
  const double re = normal();
  const double im = normal();
  return {s * re, s * im};
}

cplx Rng::unit_phase() { return std::polar(1.0, 2.0 * kPi * uniform()); }

cplx draw_complex_gain(Rng& rng, const MismatchDistribution& dist) {
  const double amp =
      dist.log_amp_var > 0.0 ? std::exp(std::sqrt(dist.log_amp_var) * rng.normal()) : 1.0;
  const double ph =
      dist.phase_bound > 0.0 ? rng.uniform(-dist.phase_bound, dist.phase_bound) : 0.0;
  return std::polar(amp, ph);
}

}  // namespace recal
