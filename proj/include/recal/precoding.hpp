// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "recal/channel.hpp"
#include "recal/hardware.hpp"
#include "recal/rng.hpp"
#include "recal/types.hpp"

namespace recal {

enum class PrecoderState { plain, calibrated };
enum class CalibrationPath { linear, nonlinear };

struct Precoder {
  CMat w;            // M x K
  double beta = 1.0;
  PrecoderState mode = PrecoderState::plain;
  RVec amp_scale;    // per-antenna rms multiplier from calibration; empty = ones
};

struct DownlinkOutcome {
  CVec y;        // K
  CVec x_b;      // M, pre-HPA
  RVec sigma_x;  // M, rms used for the Bussgang pair
};

// W = H*(H^T H*)^{-1} / sqrt(beta).
Precoder zf_precoder(const CMat& h_ul, double beta);

// Mean of tr{(H^T H*)^{-1}}; singular draws are skipped and counted.
double beta_zf_empirical(const std::vector<CMat>& h_uls, int* n_singular = nullptr);

// M tr{(B Phi B*)^{-1}} / (tr{RR*} (M - K)).
double beta_zf_closed(const SystemHardware& hw, const RVec& phi);

// sigma_x,m = |r_m| sqrt(rho_t / tr{RR*}).
RVec sigma_x_closed(const CVec& r, double rho_t);

std::vector<DownlinkOutcome> transmit_downlink(const Precoder& prec, const SystemHardware& hw,
                                               const ChannelRealization& ch, double rho_t,
                                               int n_symbols, TxMode mode, double noise_var,
                                               Rng& rng);

// linear: diag(c) W renormalized to the original total power.
// nonlinear: diag(c) W as is.
Precoder apply_calibration(const Precoder& prec, const CVec& c,
                           CalibrationPath path = CalibrationPath::nonlinear);

}  // namespace recal
