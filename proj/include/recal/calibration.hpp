// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "recal/hardware.hpp"
#include "recal/rng.hpp"
#include "recal/slp.hpp"
#include "recal/types.hpp"

namespace recal {

// Multi-power pilot schedule. Level n (0-based) of antenna m has amplitude
// (n+1) sigma_max(m) / N.
struct PilotPlan {
  int n_levels = 8;
  int n_symbols = 10;
  RVec sigma_max;

  int M() const { return static_cast<int>(sigma_max.size()); }
  double level(int m, int n) const { return sigma_max(m) * (n + 1) / n_levels; }
  // rho_c,n for antenna m
  double level_power(int m, int n) const { return level(m, n) * level(m, n); }
  void validate(int order = 0) const;
  long long overhead() const { return static_cast<long long>(M()) * n_levels * n_symbols; }
};

// sigma_max,m = A_sat,m / 10^{ibo_min/10}.
PilotPlan make_pilot_plan(const SystemHardware& hw, int n_levels, int n_symbols,
                          double ibo_min_db = 0.0);

struct TrainingRecord {
  int tx = 0, rx = 0, level = 0;
  CVec x;  // pilots of the transmitter
  CVec y;
};

// y(m, i) holds the N x Q samples sent by m and received by i.
struct TrainingData {
  int M = 0, N = 0, Q = 0;
  std::vector<CMat> pilots;  // per antenna, N x Q
  std::vector<CMat> rx;      // M*M, diagonal empty
  long long transmissions = 0;  // pilot symbols sent, counted per antenna

  const CMat& x(int m) const { return pilots[m]; }
  const CMat& y(int m, int i) const { return rx[static_cast<size_t>(m) * M + i]; }
  CMat& y(int m, int i) { return rx[static_cast<size_t>(m) * M + i]; }
  TrainingRecord record(int m, int i, int n) const;
  std::vector<TrainingRecord> records() const;
};

// Symmetric inter-antenna channel, CN(0, var) per unordered pair, zero diagonal.
CMat draw_omega(Rng& rng, int M, double var = 1.0);

struct TrainingOptions {
  bool distortion = true;  // draw the Bussgang distortion term in surrogate mode
};

TrainingData simulate_ota_training(const SystemHardware& hw, const PilotPlan& plan,
                                   const CMat& omega, double noise_var, TxMode mode, Rng& rng,
                                   const TrainingOptions& opts = {});

// psi_w(s) = sum_l (-1)^{l+w} (w+l+2)! / (l! (l+1)! (w-l)!) s^l, w <= 20.
double orth_poly_psi(int order, double sigma);
double orth_poly_psi_deriv(int order, double sigma);

enum class Pairing { same_level, cross_level };
enum class PolyEstimator { pinned_ls, gtls };

struct PsiOptions {
  Pairing pairing = Pairing::cross_level;
  bool conjugate_pilot = false;  // ybar = y conj(x) instead of y x
  double scale = 0.0;            // psi argument is sigma/scale; 0 = max sigma_max
};

double psi_scale(const PilotPlan& plan, const PsiOptions& opts);

// Dense same-level matrix: M(M-1)/2 N Q rows, M(order+1) columns.
CMat assemble_psi_matrix(const TrainingData& data, const PilotPlan& plan, int order,
                         const PsiOptions& opts = {});

// Psi^H Psi and the errors-in-variables noise covariance, accumulated without
// forming Psi. Cross-level pairing uses every (n, n2) combination.
struct PsiGram {
  CMat gram;
  RMat noise;
  int order = 0;
  double scale = 1.0;
  long long rows = 0;
};
PsiGram accumulate_psi_gram(const TrainingData& data, const PilotPlan& plan, int order,
                            double noise_var, const PsiOptions& opts = {});

struct PolyMismatch {
  CMat tau;  // M x (order+1), tau(0,0) = 1
  int order = 0;
  double scale = 1.0;
  RVec floor;  // per-antenna amplitude below which mu_hat is held; empty = none

  int M() const { return static_cast<int>(tau.rows()); }
};

// Pinned LS on the dense matrix.
PolyMismatch estimate_poly_coeffs(const CMat& psi_matrix, int order, double scale = 1.0);
PolyMismatch estimate_poly_coeffs(const PsiGram& g, PolyEstimator est = PolyEstimator::gtls);

cplx mu_hat(const PolyMismatch& poly, int m, double sigma);
cplx mu_hat_deriv(const PolyMismatch& poly, int m, double sigma);
double mu_hat_amplitude(const PolyMismatch& poly, int m, double sigma);

class PolyMismatchModel : public MismatchModel {
 public:
  explicit PolyMismatchModel(const PolyMismatch& p) : p_(p) {}
  int size() const override { return p_.M(); }
  cplx mu(int m, double s) const override { return mu_hat(p_, m, s); }
  cplx dmu(int m, double s) const override { return mu_hat_deriv(p_, m, s); }

 private:
  const PolyMismatch& p_;
};

// True mismatch (t_m/r_m) mu(A_sat,m/sigma).
class BussgangMismatchModel : public MismatchModel {
 public:
  explicit BussgangMismatchModel(const SystemHardware& hw) : hw_(hw) {}
  int size() const override { return hw_.M(); }
  cplx mu(int m, double s) const override;
  cplx dmu(int m, double s) const override;

 private:
  const SystemHardware& hw_;
};

inline CalibrationResult slp_solve(const PolyMismatch& poly, const RVec& sigma_x, double rho_t,
                                   const RVec& c_max, const SlpOptions& opts = {}) {
  return slp_solve(PolyMismatchModel(poly), sigma_x, rho_t, c_max, opts);
}

inline RVec calibration_phases(const PolyMismatch& poly, const RVec& c_abs, const RVec& sigma_x) {
  return calibration_phases(PolyMismatchModel(poly), c_abs, sigma_x);
}

// Conventional single-level calibration: c = c0 / f.
CVec linear_calibration(const TrainingData& data, int level, cplx c0 = 1.0);

// Rescales c so sum |c|^2 sigma_x^2 = rho_t, then clips |c_m| to c_max.
CVec scale_to_power(const CVec& c, const RVec& sigma_x, double rho_t, const RVec& c_max);

struct CalibrateOptions {
  PsiOptions psi;
  PolyEstimator estimator = PolyEstimator::gtls;
  TrainingOptions training;
  TxMode mode = TxMode::surrogate;
  bool hold_below_lowest = true;
  SlpOptions slp = [] {
    SlpOptions o;
    o.strict_concavity = false;
    return o;
  }();
};

struct CalibrateOutput {
  CalibrationResult result;
  PolyMismatch poly;
  long long overhead = 0;
};

// Estimation and coefficient solve on existing training data.
CalibrateOutput calibrate_from_training(const TrainingData& data, const SystemHardware& hw,
                                        const PilotPlan& plan, double noise_var, int order,
                                        double rho_t, const CalibrateOptions& opts = {});

CalibrateOutput calibrate(const SystemHardware& hw, const PilotPlan& plan, const CMat& omega,
                          double noise_var, int order, double rho_t, Rng& rng,
                          const CalibrateOptions& opts = {});

}  // namespace recal
