// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "recal/types.hpp"

namespace recal {

// Per-antenna mismatch function mu_m(sigma) and its derivative in sigma.
class MismatchModel {
 public:
  virtual ~MismatchModel() = default;
  virtual int size() const = 0;
  virtual cplx mu(int m, double sigma) const = 0;
  virtual cplx dmu(int m, double sigma) const = 0;
};

struct SlpOptions {
  double eps = 1e-6;
  double rho_step = 0.5;
  int max_iter = 500;
  double init_frac = 1e-3;
  bool strict_concavity = true;
  int concavity_grid = 64;
};

struct CalibrationResult {
  CVec c;
  double g0 = 0.0;
  int iterations = 0;
  bool converged = false;
  bool concave = true;
  std::vector<double> min_phi;  // min_m phi_m per iteration
};

// phi_m(c) = c |mu_m(c sigma_x,m)| and d/dc.
double slp_phi(const MismatchModel& mm, int m, double c, double sigma_x);
double slp_phi_prime(const MismatchModel& mm, int m, double c, double sigma_x);

// True if every phi_m is concave and non-decreasing on a grid over [0, c_max].
bool slp_check_concave(const MismatchModel& mm, const RVec& sigma_x, const RVec& c_max,
                       int grid = 64);

// max g0 s.t. phi_m(|c_m|) >= g0, sum |c_m|^2 sigma_x,m^2 <= rho_t, |c_m| <= c_max,m.
// Returned c is real non-negative; phases come from calibration_phases.
CalibrationResult slp_solve(const MismatchModel& mm, const RVec& sigma_x, double rho_t,
                            const RVec& c_max, const SlpOptions& opts = {});

// Reference optimum by bisection on g0 with monotone inversion of phi_m.
double slp_bisection_oracle(const MismatchModel& mm, const RVec& sigma_x, double rho_t,
                            const RVec& c_max, double rel_tol = 1e-12);

// angle(c_m) = -atan2(Im mu_m, Re mu_m) at |c_m| sigma_x,m.
RVec calibration_phases(const MismatchModel& mm, const RVec& c_abs, const RVec& sigma_x);

}  // namespace recal
