// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "recal/types.hpp"

namespace recal {

// Log-normal amplitude / uniform phase distribution of one RF-chain role.
struct MismatchDistribution {
  double log_amp_var = 0.0;  // variance of ln|g|
  double phase_bound = 0.0;  // phase ~ U(-bound, bound)

  void validate() const;
};

// Seedable generator. split() derives an independent child stream from the
// parent's seed and a stream index, without touching the parent's state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  Rng split(std::uint64_t stream) const;
  std::uint64_t seed() const { return seed_; }

  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // N(0, 1)
  cplx complex_normal(double var = 1.0); // CN(0, var)
  cplx unit_phase();                     // exp(j U[0, 2pi))

  std::mt19937_64& engine() { return eng_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

std::uint64_t splitmix64(std::uint64_t x);

// |g| = exp(N(0, d2)), angle(g) ~ U(-theta, theta).
cplx draw_complex_gain(Rng& rng, const MismatchDistribution& dist);

}  // namespace recal
