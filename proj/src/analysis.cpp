// SPDX-License-Identifier: Apache-2.0
#include "recal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "recal/channel.hpp"
#include "recal/numerics.hpp"
#include "recal/parallel.hpp"
#include "recal/precoding.hpp"

namespace recal {

double sinr_linear_mismatch(const LinearMismatchParams& p) {
  if (p.M <= p.K || p.K < 1) throw DomainError("sinr_linear_mismatch: need M > K >= 1");
  const double st = sinc(p.theta_t), sr = sinc(p.theta_r);
  const double eps1 = std::exp(2.0 * p.delta_t2) + std::exp(2.0 * p.delta_r2) -
                      2.0 * st * sr * std::exp(0.5 * (p.delta_t2 - p.delta_r2));
  const double mk = p.M - p.K;
  const double num = p.a0 * p.rho_t * mk / p.tr_phi_inv * st * st * sr * sr;
  const double den = std::exp(p.delta_r2 + p.delta_v2 - p.delta_t2) *
                     (p.a0 * p.rho_t * p.phi_k * mk / p.M * eps1 + p.noise_var);
  return num / den;
}

ZfOperatingPoint zf_operating_point(const SystemHardware& hw, double rho_t) {
  const int M = hw.M();
  ZfOperatingPoint op;
  op.sigma_x = sigma_x_closed(hw.bs_rx, rho_t);
  op.g.resize(M);
  op.sigma_d2.resize(M);
  for (int m = 0; m < M; ++m) {
    const BussgangPair bp = bussgang_decompose(hw.bs_hpas[m], op.sigma_x(m));
    op.g(m) = bp.g;
    op.sigma_d2(m) = bp.sigma_d2;
  }
  return op;
}

std::vector<SindrBreakdown> sindr_zf_closed_general(const CVec& g, const RVec& sigma_d2,
                                                    const SystemHardware& hw, const RVec& phi,
                                                    double rho_t, double a0, double noise_var) {
  const int M = hw.M(), K = hw.K();
  if (M <= K) throw DomainError("sindr_zf_closed: need M > K");
  if (g.size() != M || sigma_d2.size() != M || phi.size() != K)
    throw DomainError("sindr_zf_closed: dimension mismatch");
  const CVec& r = hw.bs_rx;
  const CVec& b = hw.ue_tx_gain;
  const CVec& u = hw.ue_rx;

  const double tr_rr = r.squaredNorm();
  double tr_b = 0.0;
  for (int k = 0; k < K; ++k) tr_b += 1.0 / (std::norm(b(k)) * phi(k));
  const cplx tr_gr = (g.array() * r.array().conjugate()).sum();
  const cplx alpha = (g.array() / r.array()).mean();
  const double e2 = (g - alpha * r).squaredNorm();
  const double tr_sigma = sigma_d2.sum();
  const double mk = M - K;
  const double m2 = static_cast<double>(M) * M;

  std::vector<SindrBreakdown> out(K);
  for (int k = 0; k < K; ++k) {
    SindrBreakdown& s = out[k];
    const double bk2 = std::norm(b(k)), uk2 = std::norm(u(k));
    s.es = a0 * rho_t * mk * std::norm(u(k) * tr_gr) / (M * bk2 * tr_b * tr_rr);
    s.si = a0 * rho_t * uk2 * e2 * mk / (m2 * bk2 * tr_b);
    double mui = 0.0;
    for (int i = 0; i < K; ++i) {
      if (i == k) continue;
      mui += a0 * rho_t * phi(k) * e2 * mk / (m2 * std::norm(b(i) / u(k)) * phi(i) * tr_b);
    }
    s.mui = mui;
    s.nld = a0 * uk2 * phi(k) * tr_sigma;
    s.noise = noise_var;
    s.finalize();
  }
  return out;
}

std::vector<SindrBreakdown> sindr_zf_closed_all(const SystemHardware& hw, const RVec& phi,
                                                double rho_t, double a0, double noise_var) {
  const ZfOperatingPoint op = zf_operating_point(hw, rho_t);
  return sindr_zf_closed_general(op.g, op.sigma_d2, hw, phi, rho_t, a0, noise_var);
}

SindrBreakdown sindr_zf_closed(const SystemHardware& hw, const RVec& phi, double rho_t,
                               double a0, double noise_var, int k) {
  if (k < 0 || k >= hw.K()) throw DomainError("sindr_zf_closed: UE index out of range");
  return sindr_zf_closed_all(hw, phi, rho_t, a0, noise_var)[k];
}

double rate_from_sindr(double sindr) {
  if (!(sindr >= 0.0)) throw DomainError("rate_from_sindr: sindr must be >= 0");
  return std::log2(1.0 + sindr);
}

double mean_rate(const std::vector<SindrBreakdown>& ues) {
  double acc = 0.0;
  for (const auto& s : ues) acc += rate_from_sindr(s.sindr);
  return ues.empty() ? 0.0 : acc / ues.size();
}

RateDecomposition avg_rate_decomposition(const SystemHardware& hw, const RVec& phi,
                                         double rho_t, double a0, double noise_var) {
  const int M = hw.M(), K = hw.K();
  if (M <= K) throw DomainError("avg_rate_decomposition: need M > K");
  const ZfOperatingPoint op = zf_operating_point(hw, rho_t);
  const CVec& r = hw.bs_rx;
  const double tr_rr = r.squaredNorm();
  const cplx tr_gr = (op.g.array() * r.array().conjugate()).sum();
  const cplx alpha = (op.g.array() / r.array()).mean();
  const double eps2 = (op.g - alpha * r).squaredNorm() / M;
  const double tr_sigma = op.sigma_d2.sum();
  const double tr_phi_inv = phi.cwiseInverse().sum();
  const double mk = M - K;

  RateDecomposition d;
  d.r_ideal = std::log2(mk / tr_phi_inv * rho_t * a0 / noise_var);
  const double ref = noise_var * std::norm(tr_gr) / (M * tr_rr);
  // 1/|b_k|^2 relative to the first UE; magnitudes equal to rounding count as equal.
  const double b_ref = std::norm(hw.ue_tx_gain(0));
  double inv_b = 0.0, log_inv_b = 0.0, log_u = 0.0;
  for (int k = 0; k < K; ++k) {
    const double seq = a0 * phi(k) * tr_sigma + noise_var / std::norm(hw.ue_rx(k));
    d.d_bs += std::log2((mk / M * rho_t * a0 * phi(k) * eps2 + seq) / ref);
    double ib = b_ref / std::norm(hw.ue_tx_gain(k));
    if (std::abs(ib - 1.0) <= 1e-13) ib = 1.0;
    inv_b += ib;
    log_inv_b += std::log2(ib);
    log_u += std::log2(std::norm(hw.ue_rx(k)));
  }
  d.d_bs /= K;
  d.d_ue = std::log2(inv_b / K) - log_inv_b / K;
  d.d_ue_rx = -log_u / K;
  d.r = d.r_ideal - d.d_bs - d.d_ue;

  const auto terms = sindr_zf_closed_general(op.g, op.sigma_d2, hw, phi, rho_t, a0, noise_var);
  d.min_sindr = terms[0].sindr;
  for (const auto& s : terms) d.min_sindr = std::min(d.min_sindr, s.sindr);
  d.low_sindr = d.min_sindr < 1.0;
  return d;
}

bool large_ibo_valid(const LargeIboParams& p) {
  return 2.0 * p.rho_t * std::exp(p.delta_a2) / (p.M * p.a_sat * p.a_sat) < 1.0;
}

double sindr_large_ibo(const LargeIboParams& p) {
  if (p.M <= p.K || p.K < 1) throw DomainError("sindr_large_ibo: need M > K >= 1");
  if (!(p.a_sat > 0.0)) throw DomainError("sindr_large_ibo: a_sat must be positive");
  if (!large_ibo_valid(p)) throw DomainError("sindr_large_ibo: outside large-IBO regime");
  const double s2 = std::pow(sinc(p.theta_t) * sinc(p.theta_r), 2);
  const double eps3 = std::exp(2.0 * p.delta_t2) +
                      (std::exp(2.0 * p.delta_r2) - 2.0) * std::exp(p.delta_t2 + p.delta_r2) * s2;
  const double eps4 = s2 * std::exp(p.delta_t2 - p.delta_r2);
  const double f = 1.0 - 2.0 * p.rho_t * std::exp(p.delta_a2) / (p.M * p.a_sat * p.a_sat);
  const double mk = p.M - p.K;
  return p.a0 * eps4 * mk / p.tr_phi_inv * f * p.rho_t /
         (mk / p.M * p.a0 * p.phi_k * eps3 * f * p.rho_t + p.noise_var);
}

namespace {

// Per-chunk accumulators over channel draws.
struct Moments {
  CVec s1;    // sum of h_eq,kk (or c_kk)
  RVec s2;    // sum of |h_eq,kk|^2
  RVec s22;   // sum of |h_eq,kk|^4
  RVec smu;   // sum of sum_{i!=k} |h_eq,ki|^2
  RVec smu2;
  RVec snl;   // sum of distortion power
  RVec snl2;
  double tr_inv = 0.0;
  int n = 0;

  explicit Moments(int K)
      : s1(CVec::Zero(K)), s2(RVec::Zero(K)), s22(RVec::Zero(K)), smu(RVec::Zero(K)),
        smu2(RVec::Zero(K)), snl(RVec::Zero(K)), snl2(RVec::Zero(K)) {}

  void add(const Moments& o) {
    s1 += o.s1;
    s2 += o.s2;
    s22 += o.s22;
    smu += o.smu;
    smu2 += o.smu2;
    snl += o.snl;
    snl2 += o.snl2;
    tr_inv += o.tr_inv;
    n += o.n;
  }
};

// heq is the per-channel K x K matrix of coefficients on s (already scaled by
// sqrt(a0)); nld is the per-UE distortion power of that channel.
void accumulate(Moments& acc, const CMat& heq, const RVec& nld) {
  const int K = static_cast<int>(heq.rows());
  for (int k = 0; k < K; ++k) {
    const double p = std::norm(heq(k, k));
    acc.s1(k) += heq(k, k);
    acc.s2(k) += p;
    acc.s22(k) += p * p;
    const double mu = heq.row(k).squaredNorm() - p;
    acc.smu(k) += mu;
    acc.smu2(k) += mu * mu;
    acc.snl(k) += nld(k);
    acc.snl2(k) += nld(k) * nld(k);
  }
  acc.n += 1;
}

McSindr finish(const Moments& m, double rho_t, double noise_var) {
  const int K = static_cast<int>(m.s1.size());
  const double n = m.n;
  McSindr out;
  out.n_channels = m.n;
  out.beta_empirical = m.tr_inv / n;
  out.ue.resize(K);
  out.stderr_.resize(K);
  auto se = [n](double s, double s2) {
    const double mean = s / n;
    const double var = std::max(0.0, s2 / n - mean * mean);
    return n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  };
  for (int k = 0; k < K; ++k) {
    const cplx e1 = m.s1(k) / n;
    const double e2 = m.s2(k) / n;
    SindrBreakdown& t = out.ue[k];
    t.es = rho_t * std::norm(e1);
    t.si = rho_t * std::max(0.0, e2 - std::norm(e1));
    t.mui = rho_t * m.smu(k) / n;
    t.nld = m.snl(k) / n;
    t.noise = noise_var;
    t.finalize();
    SindrBreakdown& s = out.stderr_[k];
    const double se2 = se(m.s2(k), m.s22(k));
    s.si = rho_t * se2;
    s.es = rho_t * se2;  // |E h|^2 shares the second-moment scale
    s.mui = rho_t * se(m.smu(k), m.smu2(k));
    s.nld = se(m.snl(k), m.snl2(k));
  }
  return out;
}

int chunk_count(int n_channels) { return std::min(n_channels, 64); }

}  // namespace

McSindr estimate_sindr_mc_general(const CVec& g, const RVec& sigma_d2, const SystemHardware& hw,
                                  const RVec& phi, double rho_t, double a0, double noise_var,
                                  int n_channels, Rng& rng, int threads) {
  const int M = hw.M(), K = hw.K();
  if (n_channels < 1) throw DomainError("estimate_sindr_mc: n_channels must be >= 1");
  if (g.size() != M || sigma_d2.size() != M || phi.size() != K)
    throw DomainError("estimate_sindr_mc: dimension mismatch");
  const double beta = beta_zf_closed(hw, phi);
  const Rng root = rng.split(0x5eed);
  rng.uniform();  // advance caller stream
  const int chunks = chunk_count(n_channels);
  std::vector<Moments> parts(chunks, Moments(K));
  const double sa0 = std::sqrt(a0);
  parallel_for(
      chunks,
      [&](int c) {
        Rng r = root.split(c);
        const int lo = static_cast<int>(static_cast<long long>(n_channels) * c / chunks);
        const int hi = static_cast<int>(static_cast<long long>(n_channels) * (c + 1) / chunks);
        Moments& acc = parts[c];
        RVec nld(K);
        for (int it = lo; it < hi; ++it) {
          const ChannelRealization ch = draw_channel(r, M, phi);
          const CMat hul = uplink_channel(ch, hw);
          const CMat gram = hul.transpose() * hul.conjugate();
          Eigen::LLT<CMat> llt(gram);
          const CMat inv = llt.solve(CMat::Identity(K, K));
          acc.tr_inv += inv.trace().real();
          const CMat w = hul.conjugate() * inv / std::sqrt(beta);
          const CMat uh = hw.ue_rx.asDiagonal() * ch.h;
          const CMat heq = sa0 * (uh * g.asDiagonal()) * w;
          for (int k = 0; k < K; ++k)
            nld(k) = a0 * (uh.row(k).cwiseAbs2() * sigma_d2)(0);
          accumulate(acc, heq, nld);
        }
      },
      threads);
  Moments total(K);
  for (const auto& p : parts) total.add(p);
  return finish(total, rho_t, noise_var);
}

McSindr estimate_sindr_mc(const SystemHardware& hw, const RVec& phi, double rho_t, double a0,
                          double noise_var, int n_channels, int n_symbols, TxMode mode, Rng& rng,
                          int threads) {
  if (mode == TxMode::surrogate) {
    const ZfOperatingPoint op = zf_operating_point(hw, rho_t);
    return estimate_sindr_mc_general(op.g, op.sigma_d2, hw, phi, rho_t, a0, noise_var,
                                     n_channels, rng, threads);
  }
  const int M = hw.M(), K = hw.K();
  if (n_channels < 1 || n_symbols < 1)
    throw DomainError("estimate_sindr_mc: n_channels and n_symbols must be >= 1");
  const double beta = beta_zf_closed(hw, phi);
  const Rng root = rng.split(0x5eed);
  rng.uniform();
  const int chunks = chunk_count(n_channels);
  std::vector<Moments> parts(chunks, Moments(K));
  parallel_for(
      chunks,
      [&](int c) {
        Rng r = root.split(c);
        const int lo = static_cast<int>(static_cast<long long>(n_channels) * c / chunks);
        const int hi = static_cast<int>(static_cast<long long>(n_channels) * (c + 1) / chunks);
        Moments& acc = parts[c];
        for (int it = lo; it < hi; ++it) {
          const ChannelRealization ch = draw_channel(r, M, phi);
          const CMat hul = uplink_channel(ch, hw);
          const Precoder prec = zf_precoder(hul, beta);
          acc.tr_inv += (prec.w.adjoint() * prec.w).trace().real() * beta;
          const CMat uh = hw.ue_rx.asDiagonal() * ch.h;
          // Regress received samples on the symbols: y = C s + distortion.
          CMat cross = CMat::Zero(K, K), ss = CMat::Zero(K, K);
          RVec pw = RVec::Zero(K);
          CVec s(K), xh(M);
          for (int n = 0; n < n_symbols; ++n) {
            for (int k = 0; k < K; ++k) s(k) = r.complex_normal(rho_t);
            const CVec xb = prec.w * s;
            for (int m = 0; m < M; ++m) xh(m) = sspa_apply(hw.bs_hpas[m], xb(m));
            const CVec y = uh * xh;
            cross += y * s.adjoint();
            ss += s * s.adjoint();
            pw += y.cwiseAbs2();
          }
          const CMat coef = cross * ss.inverse();
          RVec nld(K);
          for (int k = 0; k < K; ++k) {
            const double lin = (coef.row(k) * ss * coef.row(k).adjoint())(0, 0).real();
            nld(k) = std::max(0.0, (pw(k) - lin) / n_symbols);
          }
          accumulate(acc, coef, nld);
        }
      },
      threads);
  Moments total(K);
  for (const auto& p : parts) total.add(p);
  return finish(total, rho_t, noise_var);
}

}  // namespace recal
