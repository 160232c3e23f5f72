// SPDX-License-Identifier: Apache-2.0
#include "recal/precoding.hpp"

#include <cmath>

namespace recal {

namespace {

// Solves G X = B for Hermitian positive definite G; throws if singular.
CMat spd_solve(const CMat& g, const CMat& b) {
  Eigen::LLT<CMat> llt(g);
  if (llt.info() != Eigen::Success) throw NumericalError("singular Gram matrix");
  return llt.solve(b);
}

}  // namespace

Precoder zf_precoder(const CMat& h_ul, double beta) {
  if (!(beta > 0.0)) throw DomainError("zf_precoder: beta must be positive");
  if (h_ul.rows() < h_ul.cols()) throw DomainError("zf_precoder: need M >= K");
  const CMat hc = h_ul.conjugate();
  const CMat gram = h_ul.transpose() * hc;
  Precoder p;
  p.w = hc * spd_solve(gram, CMat::Identity(gram.rows(), gram.cols())) / std::sqrt(beta);
  p.beta = beta;
  return p;
}

double beta_zf_empirical(const std::vector<CMat>& h_uls, int* n_singular) {
  double acc = 0.0;
  int used = 0, bad = 0;
  for (const CMat& h : h_uls) {
    const CMat gram = h.transpose() * h.conjugate();
    Eigen::LLT<CMat> llt(gram);
    if (llt.info() != Eigen::Success) {
      ++bad;
      continue;
    }
    acc += llt.solve(CMat::Identity(gram.rows(), gram.cols())).trace().real();
    ++used;
  }
  if (n_singular) *n_singular = bad;
  if (used == 0) throw NumericalError("beta_zf_empirical: no usable draws");
  return acc / used;
}

double beta_zf_closed(const SystemHardware& hw, const RVec& phi) {
  const int M = hw.M(), K = hw.K();
  if (phi.size() != K) throw DomainError("beta_zf_closed: phi length mismatch");
  if (M <= K + 1) throw DomainError("beta_zf_closed: need M > K + 1");
  double tr_b = 0.0;
  for (int k = 0; k < K; ++k) tr_b += 1.0 / (std::norm(hw.ue_tx_gain(k)) * phi(k));
  return M * tr_b / (hw.bs_rx.squaredNorm() * (M - K));
}

RVec sigma_x_closed(const CVec& r, double rho_t) {
  if (!(rho_t > 0.0)) throw DomainError("sigma_x_closed: rho_t must be positive");
  return r.cwiseAbs() * std::sqrt(rho_t / r.squaredNorm());
}

std::vector<DownlinkOutcome> transmit_downlink(const Precoder& prec, const SystemHardware& hw,
                                               const ChannelRealization& ch, double rho_t,
                                               int n_symbols, TxMode mode, double noise_var,
                                               Rng& rng) {
  const int M = hw.M(), K = hw.K();
  if (prec.w.rows() != M || prec.w.cols() != K || ch.h.rows() != K || ch.h.cols() != M)
    throw DomainError("transmit_downlink: dimension mismatch");
  if (!(rho_t > 0.0) || n_symbols < 1 || noise_var < 0.0)
    throw DomainError("transmit_downlink: invalid parameters");

  RVec sx = sigma_x_closed(hw.bs_rx, rho_t);
  if (prec.amp_scale.size() == M) sx = sx.cwiseProduct(prec.amp_scale);
  std::vector<BussgangPair> bp(M);
  if (mode == TxMode::surrogate)
    for (int m = 0; m < M; ++m) bp[m] = bussgang_decompose(hw.bs_hpas[m], sx(m));

  const CMat uh = hw.ue_rx.asDiagonal() * ch.h;
  std::vector<DownlinkOutcome> out(n_symbols);
  CVec s(K), xh(M);
  for (int n = 0; n < n_symbols; ++n) {
    for (int k = 0; k < K; ++k) s(k) = rng.complex_normal(rho_t);
    DownlinkOutcome& o = out[n];
    o.x_b = prec.w * s;
    o.sigma_x = sx;
    for (int m = 0; m < M; ++m) {
      const HpaModel& h = hw.bs_hpas[m];
      if (mode == TxMode::physical) {
        xh(m) = sspa_apply(h, o.x_b(m));
      } else {
        const cplx d = bp[m].sigma_d2 > 0.0 ? rng.complex_normal(bp[m].sigma_d2) : cplx(0.0);
        xh(m) = std::sqrt(h.a0) * (bp[m].g * o.x_b(m) + d);
      }
    }
    o.y = uh * xh;
    if (noise_var > 0.0)
      for (int k = 0; k < K; ++k) o.y(k) += rng.complex_normal(noise_var);
  }
  return out;
}

Precoder apply_calibration(const Precoder& prec, const CVec& c, CalibrationPath path) {
  if (c.size() != prec.w.rows()) throw DomainError("apply_calibration: length mismatch");
  if (!c.allFinite()) throw DomainError("apply_calibration: non-finite coefficients");
  if (c.cwiseAbs().maxCoeff() == 0.0) throw DomainError("apply_calibration: zero vector");
  Precoder out = prec;
  out.mode = PrecoderState::calibrated;
  out.w = c.asDiagonal() * prec.w;
  RVec scale = c.cwiseAbs();
  if (prec.amp_scale.size() == c.size()) scale = scale.cwiseProduct(prec.amp_scale);
  if (path == CalibrationPath::linear) {
    const double k = std::sqrt(prec.w.squaredNorm() / out.w.squaredNorm());
    out.w *= k;
    scale *= k;
  }
  out.amp_scale = scale;
  return out;
}

}  // namespace recal
