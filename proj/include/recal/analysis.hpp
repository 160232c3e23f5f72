// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "recal/hardware.hpp"
#include "recal/rng.hpp"
#include "recal/types.hpp"

namespace recal {

struct SindrBreakdown {
  double es = 0.0;
  double si = 0.0;
  double mui = 0.0;
  double nld = 0.0;
  double noise = 0.0;
  double sindr = 0.0;

  void finalize() { sindr = es / (si + mui + nld + noise); }
};

struct RateDecomposition {
  double r_ideal = 0.0;
  double d_bs = 0.0;
  double d_ue = 0.0;
  double r = 0.0;
  double d_ue_rx = 0.0;    // -mean log2|u_k|^2, reported only
  double min_sindr = 0.0;
  bool low_sindr = false;  // some gamma_k < 1
};

struct LinearMismatchParams {
  int M = 0, K = 0;
  double rho_t = 1.0, a0 = 1.0, phi_k = 1.0, tr_phi_inv = 1.0;
  double delta_t2 = 0.0, delta_r2 = 0.0, delta_v2 = 0.0;
  double theta_t = 0.0, theta_r = 0.0;
  double noise_var = 1.0;
};

double sinr_linear_mismatch(const LinearMismatchParams& p);

// Effective per-antenna transmit gains G and distortion variances Sigma
// for the ZF operating point sigma_x = |r| sqrt(rho_t / tr RR*).
struct ZfOperatingPoint {
  CVec g;
  RVec sigma_d2;
  RVec sigma_x;
};
ZfOperatingPoint zf_operating_point(const SystemHardware& hw, double rho_t);

// Closed-form terms for every UE given arbitrary G and Sigma (per hardware draw).
std::vector<SindrBreakdown> sindr_zf_closed_general(const CVec& g, const RVec& sigma_d2,
                                                    const SystemHardware& hw, const RVec& phi,
                                                    double rho_t, double a0, double noise_var);

SindrBreakdown sindr_zf_closed(const SystemHardware& hw, const RVec& phi, double rho_t,
                               double a0, double noise_var, int k);
std::vector<SindrBreakdown> sindr_zf_closed_all(const SystemHardware& hw, const RVec& phi,
                                                double rho_t, double a0, double noise_var);

double rate_from_sindr(double sindr);
double mean_rate(const std::vector<SindrBreakdown>& ues);

RateDecomposition avg_rate_decomposition(const SystemHardware& hw, const RVec& phi,
                                         double rho_t, double a0, double noise_var);

struct LargeIboParams {
  int M = 0, K = 0;
  double rho_t = 1.0, a0 = 1.0;
  double a_sat = 1.0;  // absolute saturation amplitude
  double phi_k = 1.0, tr_phi_inv = 1.0;
  double delta_a2 = 0.0, delta_t2 = 0.0, delta_r2 = 0.0;
  double theta_t = 0.0, theta_r = 0.0;
  double noise_var = 1.0;
};

// Throws DomainError outside 2 rho e^{da2}/(M A^2) < 1.
double sindr_large_ibo(const LargeIboParams& p);
bool large_ibo_valid(const LargeIboParams& p);

struct McSindr {
  std::vector<SindrBreakdown> ue;
  std::vector<SindrBreakdown> stderr_;  // standard errors of the term estimates
  double beta_empirical = 0.0;
  int n_channels = 0;
};

// Moments of H_eq = U H G W over channel draws for fixed hardware and phi.
// surrogate: exact per-channel Bussgang moments; physical: symbol-level SSPA.
McSindr estimate_sindr_mc(const SystemHardware& hw, const RVec& phi, double rho_t, double a0,
                          double noise_var, int n_channels, int n_symbols, TxMode mode, Rng& rng,
                          int threads = 1);

// Surrogate estimate with per-antenna gains and distortion given directly.
// A calibrated precoder diag(c) W enters as g = c * g(|c| sigma_x).
McSindr estimate_sindr_mc_general(const CVec& g, const RVec& sigma_d2, const SystemHardware& hw,
                                  const RVec& phi, double rho_t, double a0, double noise_var,
                                  int n_channels, Rng& rng, int threads = 1);

}  // namespace recal
