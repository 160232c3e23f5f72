// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "recal/rng.hpp"
#include "recal/types.hpp"

namespace recal {

// Rapp-type SSPA: sqrt(a0) t x / (1 + (|x|/a_sat)^{2v})^{1/(2v)}.
struct HpaModel {
  double a0 = 1.0;   // linear power gain
  cplx t{1.0, 0.0};  // small-signal gain vibration
  double a_sat = 1.0;
  double v = 1.0;

  void validate() const;
};

struct BussgangPair {
  cplx g{0.0, 0.0};
  double sigma_d2 = 0.0;
};

// Mismatch laws per RF role. `a` scales the BS saturation level (phase unused),
// `v` is the UE transmit gain vibration.
struct RoleDistributions {
  MismatchDistribution a, t, r, u, v;

  static RoleDistributions common(double log_amp_var, double phase_bound);
  void validate() const;
};

struct UeHpaConfig {
  double b0 = 1.0;
  double b_sat = 1.0;
};

struct SystemHardware {
  std::vector<HpaModel> bs_hpas;
  CVec bs_rx;       // r
  CVec ue_tx_gain;  // b
  CVec ue_rx;       // u
  std::vector<HpaModel> ue_hpas;

  int M() const { return static_cast<int>(bs_hpas.size()); }
  int K() const { return static_cast<int>(ue_rx.size()); }
  CVec bs_t() const;
  RVec bs_a_sat() const;
  double a0() const { return bs_hpas.empty() ? 1.0 : bs_hpas.front().a0; }
  void validate() const;
};

SystemHardware draw_system_hardware(Rng& rng, int M, int K, const RoleDistributions& dists,
                                    double a_sat_base, double v, double ue_pilot_amp,
                                    double a0 = 1.0, const UeHpaConfig& ue = {});

// Unit gains everywhere, common saturation level.
SystemHardware ideal_hardware(int M, int K, double a_sat, double a0 = 1.0, double v = 1.0);

cplx sspa_apply(const HpaModel& hpa, cplx x);

// Amplitude transfer without sqrt(a0) t: 1/(1+(r/a_sat)^{2v})^{1/(2v)}.
double sspa_gain(double r, double a_sat, double v);

// g = t mu(a_sat/sigma_x), sigma_d2 = |t|^2 lambda(a_sat, sigma_x). a0 not folded in.
BussgangPair bussgang_decompose(const HpaModel& hpa, double sigma_x);

double ibo_db(double a_sat, double sigma_x);
double sigma_from_ibo(double a_sat, double ibo);
double a_sat_from_ibo(double sigma_x, double ibo);

}  // namespace recal
