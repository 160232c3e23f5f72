// SPDX-License-Identifier: Apache-2.0
#include "recal/slp.hpp"

#include <algorithm>
#include <cmath>

namespace recal {

double slp_phi(const MismatchModel& mm, int m, double c, double sigma_x) {
  return c * std::abs(mm.mu(m, c * sigma_x));
}

double slp_phi_prime(const MismatchModel& mm, int m, double c, double sigma_x) {
  const cplx mu = mm.mu(m, c * sigma_x);
  const double a = std::abs(mu);
  if (a == 0.0) return 0.0;
  const double da = (std::conj(mu) * mm.dmu(m, c * sigma_x)).real() / a;
  return a + c * sigma_x * da;
}

bool slp_check_concave(const MismatchModel& mm, const RVec& sigma_x, const RVec& c_max,
                       int grid) {
  const int M = mm.size();
  std::vector<double> f(grid + 1);
  for (int m = 0; m < M; ++m) {
    double fmax = 0.0;
    for (int j = 0; j <= grid; ++j) {
      f[j] = slp_phi(mm, m, c_max(m) * j / grid, sigma_x(m));
      fmax = std::max(fmax, std::abs(f[j]));
    }
    const double tol = 1e-9 * std::max(fmax, 1e-300);
    for (int j = 1; j <= grid; ++j)
      if (f[j] < f[j - 1] - tol) return false;
    for (int j = 1; j < grid; ++j)
      if (f[j + 1] - 2.0 * f[j] + f[j - 1] > tol) return false;
  }
  return true;
}

CalibrationResult slp_solve(const MismatchModel& mm, const RVec& sigma_x, double rho_t,
                            const RVec& c_max, const SlpOptions& opts) {
  const int M = mm.size();
  if (sigma_x.size() != M || c_max.size() != M)
    throw DomainError("slp_solve: dimension mismatch");
  if (!(rho_t > 0.0)) throw DomainError("slp_solve: rho_t must be positive");
  if (!(opts.rho_step > 0.0 && opts.rho_step < 1.0))
    throw DomainError("slp_solve: step ratio must lie in (0, 1)");
  for (int m = 0; m < M; ++m)
    if (!(c_max(m) > 0.0) || !(sigma_x(m) > 0.0))
      throw DomainError("slp_solve: c_max and sigma_x must be positive");

  CalibrationResult res;
  res.concave = slp_check_concave(mm, sigma_x, c_max, opts.concavity_grid);
  if (!res.concave && opts.strict_concavity)
    throw DomainError("slp_solve: phi_m is not concave increasing on [0, c_max]");

  auto phi_vec = [&](const RVec& c) {
    RVec f(M);
    for (int m = 0; m < M; ++m) f(m) = slp_phi(mm, m, c(m), sigma_x(m));
    return f;
  };
  auto feasible = [&](const RVec& c) {
    const double slack = 1e-9 * rho_t;
    if ((c.array() * sigma_x.array()).square().sum() > rho_t + slack) return false;
    for (int m = 0; m < M; ++m)
      if (c(m) < 0.0 || c(m) > c_max(m) * (1.0 + 1e-12)) return false;
    return true;
  };

  RVec c = opts.init_frac * c_max;
  if (!feasible(c)) c *= std::sqrt(rho_t / (c.array() * sigma_x.array()).square().sum()) * 0.5;
  RVec f = phi_vec(c);
  double fmin = f.minCoeff();
  RVec d(M), chi(M), w2(M), cbar(M), cn(M);
  res.min_phi.push_back(fmin);

  for (int it = 1; it <= opts.max_iter; ++it) {
    res.iterations = it;
    for (int m = 0; m < M; ++m) {
      d(m) = std::max(slp_phi_prime(mm, m, c(m), sigma_x(m)), 1e-300);
      chi(m) = f(m) - d(m) * c(m);
      const double w = sigma_x(m) / d(m);
      w2(m) = w * w;
    }
    // Largest g0 with sum ((g0 - chi_m) sigma_m / phi'_m)^2 = rho_t.
    const double A = w2.sum();
    const double B = (w2.array() * chi.array()).sum();
    const double C = (w2.array() * chi.array().square()).sum() - rho_t;
    const double g_hat = (B + std::sqrt(std::max(B * B - A * C, 0.0))) / A;
    double g_cap = g_hat;
    for (int m = 0; m < M; ++m) g_cap = std::min(g_cap, f(m) + d(m) * (c_max(m) - c(m)));
    for (int m = 0; m < M; ++m) cbar(m) = std::clamp((g_cap - chi(m)) / d(m), 0.0, c_max(m));

    const RVec dc = cbar - c;
    double s = 1.0;
    bool accepted = false;
    RVec fn;
    for (int j = 0; j < 60; ++j) {
      cn = c + s * dc;
      if (feasible(cn)) {
        fn = phi_vec(cn);
        if (fn.minCoeff() >= fmin - 1e-14 * std::max(1.0, std::abs(fmin))) {
          accepted = true;
          break;
        }
      }
      s *= opts.rho_step;
    }
    if (!accepted) {
      res.converged = true;  // no improving step left
      break;
    }
    const double step = (cn - c).cwiseAbs().mean();
    c = cn;
    f = fn;
    fmin = std::max(fmin, f.minCoeff());
    res.min_phi.push_back(f.minCoeff());
    if (step < opts.eps) {
      res.converged = true;
      break;
    }
  }
  res.c = c.cast<cplx>();
  res.g0 = f.minCoeff();
  if (!(res.g0 > 0.0)) throw NumericalError("slp_solve: zero common gain");
  return res;
}

namespace {

// Smallest c in [0, c_max] with phi(c) >= g, assuming phi non-decreasing.
double phi_inverse(const MismatchModel& mm, int m, double g, double sigma_x, double c_max) {
  double lo = 0.0, hi = c_max;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * c_max; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (slp_phi(mm, m, mid, sigma_x) >= g)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace

double slp_bisection_oracle(const MismatchModel& mm, const RVec& sigma_x, double rho_t,
                            const RVec& c_max, double rel_tol) {
  const int M = mm.size();
  double hi = slp_phi(mm, 0, c_max(0), sigma_x(0));
  for (int m = 1; m < M; ++m) hi = std::min(hi, slp_phi(mm, m, c_max(m), sigma_x(m)));
  auto ok = [&](double g) {
    double p = 0.0;
    for (int m = 0; m < M; ++m) {
      const double c = phi_inverse(mm, m, g, sigma_x(m), c_max(m));
      p += c * c * sigma_x(m) * sigma_x(m);
    }
    return p <= rho_t;
  };
  if (ok(hi)) return hi;
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > rel_tol * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

RVec calibration_phases(const MismatchModel& mm, const RVec& c_abs, const RVec& sigma_x) {
  const int M = mm.size();
  RVec ph(M);
  for (int m = 0; m < M; ++m) {
    const cplx mu = mm.mu(m, c_abs(m) * sigma_x(m));
    if (mu == cplx(0.0)) throw DomainError("calibration_phases: mu vanishes at operating point");
    ph(m) = -std::atan2(mu.imag(), mu.real());
  }
  return ph;
}

}  // namespace recal
