// SPDX-License-Identifier: Apache-2.0
#include "recal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "recal/numerics.hpp"
#include "recal/precoding.hpp"

namespace recal {

void PilotPlan::validate(int order) const {
  if (M() < 2) throw DomainError("PilotPlan: need at least two antennas");
  if (n_levels < 1 || n_symbols < 1) throw DomainError("PilotPlan: N and Q must be >= 1");
  if (order > 0 && n_levels < order + 1)
    throw DomainError("PilotPlan: need N >= order + 1 (got N=" + std::to_string(n_levels) +
                      ", order=" + std::to_string(order) + ")");
  for (int m = 0; m < M(); ++m)
    if (!(sigma_max(m) > 0.0)) throw DomainError("PilotPlan: sigma_max must be positive");
}

PilotPlan make_pilot_plan(const SystemHardware& hw, int n_levels, int n_symbols,
                          double ibo_min_db) {
  PilotPlan p;
  p.n_levels = n_levels;
  p.n_symbols = n_symbols;
  p.sigma_max = hw.bs_a_sat() / db_to_lin(ibo_min_db);
  p.validate();
  return p;
}

TrainingRecord TrainingData::record(int m, int i, int n) const {
  if (m == i || m < 0 || i < 0 || m >= M || i >= M || n < 0 || n >= N)
    throw DomainError("TrainingData: record index out of range");
  TrainingRecord r;
  r.tx = m;
  r.rx = i;
  r.level = n;
  r.x = pilots[m].row(n).transpose();
  r.y = y(m, i).row(n).transpose();
  return r;
}

std::vector<TrainingRecord> TrainingData::records() const {
  std::vector<TrainingRecord> out;
  out.reserve(static_cast<size_t>(M) * (M - 1) * N);
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < M; ++i)
      if (i != m)
        for (int n = 0; n < N; ++n) out.push_back(record(m, i, n));
  return out;
}

CMat draw_omega(Rng& rng, int M, double var) {
  CMat w = CMat::Zero(M, M);
  for (int m = 0; m < M; ++m)
    for (int i = m + 1; i < M; ++i) w(m, i) = w(i, m) = rng.complex_normal(var);
  return w;
}

TrainingData simulate_ota_training(const SystemHardware& hw, const PilotPlan& plan,
                                   const CMat& omega, double noise_var, TxMode mode, Rng& rng,
                                   const TrainingOptions& opts) {
  const int M = hw.M(), N = plan.n_levels, Q = plan.n_symbols;
  plan.validate();
  if (plan.M() != M || omega.rows() != M || omega.cols() != M)
    throw DomainError("simulate_ota_training: dimension mismatch");
  for (int m = 0; m < M; ++m) {
    if (omega(m, m) != cplx(0.0)) throw DomainError("simulate_ota_training: omega diagonal");
    for (int i = m + 1; i < M; ++i)
      if (omega(m, i) != omega(i, m))
        throw DomainError("simulate_ota_training: omega must be symmetric");
  }
  if (noise_var < 0.0) throw DomainError("simulate_ota_training: negative noise variance");

  TrainingData d;
  d.M = M;
  d.N = N;
  d.Q = Q;
  d.pilots.assign(M, CMat(N, Q));
  d.rx.assign(static_cast<size_t>(M) * M, CMat());
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < M; ++i)
      if (i != m) d.y(m, i).resize(N, Q);

  CVec tx(Q);
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m)
      for (int q = 0; q < Q; ++q) d.pilots[m](n, q) = plan.level(m, n) * rng.unit_phase();
    for (int m = 0; m < M; ++m) {
      const HpaModel& h = hw.bs_hpas[m];
      const double a0 = h.a0;
      if (mode == TxMode::physical) {
        for (int q = 0; q < Q; ++q) tx(q) = std::sqrt(a0) * sspa_apply(h, d.pilots[m](n, q));
      } else {
        const BussgangPair bp = bussgang_decompose(h, plan.level(m, n));
        for (int q = 0; q < Q; ++q) {
          cplx v = bp.g * d.pilots[m](n, q);
          if (opts.distortion && bp.sigma_d2 > 0.0) v += rng.complex_normal(bp.sigma_d2);
          tx(q) = std::sqrt(a0) * v;
        }
      }
      d.transmissions += Q;
      for (int i = 0; i < M; ++i) {
        if (i == m) continue;
        const cplx path = hw.bs_rx(i) * omega(m, i);
        CMat& y = d.y(m, i);
        for (int q = 0; q < Q; ++q) {
          y(n, q) = path * tx(q);
          if (noise_var > 0.0) y(n, q) += rng.complex_normal(noise_var);
        }
      }
    }
  }
  return d;
}

double orth_poly_psi(int order, double sigma) {
  if (order < 0 || order > 20) throw DomainError("orth_poly_psi: order must lie in [0, 20]");
  // c_0 = (w+1)(w+2), c_{l+1}/c_l = (w+l+3)(w-l)/((l+1)(l+2))
  const int w = order;
  double c = (w + 1.0) * (w + 2.0);
  double sum = 0.0, p = 1.0;
  for (int l = 0; l <= w; ++l) {
    sum += (((l + w) % 2) ? -c : c) * p;
    c *= (w + l + 3.0) * (w - l) / ((l + 1.0) * (l + 2.0));
    p *= sigma;
  }
  return sum;
}

double orth_poly_psi_deriv(int order, double sigma) {
  if (order < 0 || order > 20) throw DomainError("orth_poly_psi: order must lie in [0, 20]");
  const int w = order;
  double c = (w + 1.0) * (w + 2.0);
  double sum = 0.0, p = 1.0;
  for (int l = 0; l <= w; ++l) {
    if (l > 0) {
      sum += (((l + w) % 2) ? -c : c) * l * p;
      p *= sigma;
    }
    c *= (w + l + 3.0) * (w - l) / ((l + 1.0) * (l + 2.0));
  }
  return sum;
}

double psi_scale(const PilotPlan& plan, const PsiOptions& opts) {
  return opts.scale > 0.0 ? opts.scale : plan.sigma_max.maxCoeff();
}

namespace {

// psi table per antenna: N x (order+1).
std::vector<RMat> psi_tables(const PilotPlan& plan, int order, double scale) {
  std::vector<RMat> t(plan.M(), RMat(plan.n_levels, order + 1));
  for (int m = 0; m < plan.M(); ++m)
    for (int n = 0; n < plan.n_levels; ++n)
      for (int w = 0; w <= order; ++w) t[m](n, w) = orth_poly_psi(w, plan.level(m, n) / scale);
  return t;
}

inline cplx pil(const TrainingData& d, int m, int n, int q, bool conj) {
  const cplx x = d.pilots[m](n, q);
  return conj ? std::conj(x) : x;
}

void check_data(const TrainingData& data, const PilotPlan& plan) {
  if (data.M != plan.M() || data.N != plan.n_levels || data.Q != plan.n_symbols)
    throw DomainError("training data does not match the pilot plan");
  for (int m = 0; m < data.M; ++m)
    for (int i = 0; i < data.M; ++i)
      if (i != m && (data.y(m, i).rows() != data.N || data.y(m, i).cols() != data.Q))
        throw DomainError("missing training record for pair (" + std::to_string(m) + ", " +
                          std::to_string(i) + ")");
}

}  // namespace

CMat assemble_psi_matrix(const TrainingData& data, const PilotPlan& plan, int order,
                         const PsiOptions& opts) {
  check_data(data, plan);
  plan.validate();
  const int M = data.M, N = data.N, Q = data.Q, P = order + 1;
  const double scale = psi_scale(plan, opts);
  const auto ps = psi_tables(plan, order, scale);
  const long long rows = static_cast<long long>(M) * (M - 1) / 2 * N * Q;
  CMat psi = CMat::Zero(rows, static_cast<long long>(M) * P);
  long long row = 0;
  for (int m = 0; m < M; ++m)
    for (int i = m + 1; i < M; ++i)
      for (int n = 0; n < N; ++n)
        for (int q = 0; q < Q; ++q, ++row) {
          // mu_m ybar_{i,m} - mu_i ybar_{m,i} = 0
          const cplx ybar_im = data.y(i, m)(n, q) * pil(data, m, n, q, opts.conjugate_pilot);
          const cplx ybar_mi = data.y(m, i)(n, q) * pil(data, i, n, q, opts.conjugate_pilot);
          for (int w = 0; w < P; ++w) {
            psi(row, m * P + w) = ybar_im * ps[m](n, w);
            psi(row, i * P + w) = -ybar_mi * ps[i](n, w);
          }
        }
  return psi;
}

PsiGram accumulate_psi_gram(const TrainingData& data, const PilotPlan& plan, int order,
                            double noise_var, const PsiOptions& opts) {
  check_data(data, plan);
  plan.validate(order);
  const int M = data.M, N = data.N, Q = data.Q, P = order + 1;
  const bool cj = opts.conjugate_pilot;
  PsiGram out;
  out.order = order;
  out.scale = psi_scale(plan, opts);
  out.gram = CMat::Zero(M * P, M * P);
  out.noise = RMat::Zero(M * P, M * P);
  const auto ps = psi_tables(plan, order, out.scale);
  const bool cross = opts.pairing == Pairing::cross_level;
  out.rows = static_cast<long long>(M) * (M - 1) / 2 * N * Q * (cross ? N : 1);

  // Noise variance of y(m, i) per level, from the spread of y/x across symbols.
  auto level_var = [&](int m, int i, int n) {
    if (Q < 2) return noise_var;
    const CMat& y = data.y(m, i);
    cplx mean = 0.0;
    for (int q = 0; q < Q; ++q) mean += y(n, q) / data.pilots[m](n, q);
    mean /= static_cast<double>(Q);
    double v = 0.0;
    for (int q = 0; q < Q; ++q) v += std::norm(y(n, q) / data.pilots[m](n, q) - mean);
    return v / (Q - 1) * data.pilots[m].row(n).cwiseAbs2().mean();
  };

  CMat U(Q, P), V(Q, P);
  RVec wm(N), wi(N), am(Q), ai(Q);
  for (int m = 0; m < M; ++m) {
    for (int i = m + 1; i < M; ++i) {
      const CMat& y_im = data.y(i, m);  // received at m
      const CMat& y_mi = data.y(m, i);  // received at i
      auto bm = out.gram.block(m * P, m * P, P, P);
      auto bi = out.gram.block(i * P, i * P, P, P);
      auto bmi = out.gram.block(m * P, i * P, P, P);
      if (cross) {
        // row (n, n2, q): block m = y_im(n2,q) x_m(n,q) psi_m(n), block i = -y_mi(n,q) x_i(n2,q) psi_i(n2)
        am = y_im.cwiseAbs2().colwise().sum().transpose();
        ai = y_mi.cwiseAbs2().colwise().sum().transpose();
        for (int n = 0; n < N; ++n) {
          wm(n) = (data.pilots[m].row(n).cwiseAbs2().transpose().array() * am.array()).sum();
          wi(n) = (data.pilots[i].row(n).cwiseAbs2().transpose().array() * ai.array()).sum();
        }
        bm += (ps[m].transpose() * wm.asDiagonal() * ps[m]).cast<cplx>();
        bi += (ps[i].transpose() * wi.asDiagonal() * ps[i]).cast<cplx>();
        U.setZero();
        V.setZero();
        for (int q = 0; q < Q; ++q)
          for (int n = 0; n < N; ++n) {
            const cplx u = std::conj(pil(data, m, n, q, cj)) * y_mi(n, q);
            const cplx v = std::conj(y_im(n, q)) * pil(data, i, n, q, cj);
            U.row(q) += u * ps[m].row(n).cast<cplx>();
            V.row(q) += v * ps[i].row(n).cast<cplx>();
          }
        bmi -= U.transpose() * V;
      } else {
        for (int n = 0; n < N; ++n) {
          double sm = 0.0, si = 0.0;
          cplx sx = 0.0;
          for (int q = 0; q < Q; ++q) {
            const cplx a = y_im(n, q) * pil(data, m, n, q, cj);
            const cplx b = y_mi(n, q) * pil(data, i, n, q, cj);
            sm += std::norm(a);
            si += std::norm(b);
            sx += std::conj(a) * b;
          }
          bm += (sm * ps[m].row(n).transpose() * ps[m].row(n)).cast<cplx>();
          bi += (si * ps[i].row(n).transpose() * ps[i].row(n)).cast<cplx>();
          bmi -= sx * (ps[m].row(n).transpose() * ps[i].row(n)).cast<cplx>();
        }
      }
      out.gram.block(i * P, m * P, P, P) = bmi.adjoint();

      // Errors-in-variables covariance: block m carries the noise of y_im.
      for (int n = 0; n < N; ++n) {
        const double xm2 = data.pilots[m].row(n).cwiseAbs2().sum();
        const double xi2 = data.pilots[i].row(n).cwiseAbs2().sum();
        double vm = 0.0, vi = 0.0;  // noise power of the partner's samples
        if (cross) {
          for (int n2 = 0; n2 < N; ++n2) {
            vm += level_var(i, m, n2);
            vi += level_var(m, i, n2);
          }
        } else {
          vm = level_var(i, m, n);
          vi = level_var(m, i, n);
        }
        out.noise.block(m * P, m * P, P, P) += xm2 * vm * ps[m].row(n).transpose() * ps[m].row(n);
        out.noise.block(i * P, i * P, P, P) += xi2 * vi * ps[i].row(n).transpose() * ps[i].row(n);
      }
    }
  }
  return out;
}

namespace {

PolyMismatch pack(const CVec& v, int M, int order, double scale) {
  PolyMismatch p;
  p.order = order;
  p.scale = scale;
  p.tau.resize(M, order + 1);
  for (int m = 0; m < M; ++m)
    for (int w = 0; w <= order; ++w) p.tau(m, w) = v(m * (order + 1) + w);
  return p;
}

std::string deficient_columns(const Eigen::ColPivHouseholderQR<CMat>& qr) {
  std::string s;
  const auto& perm = qr.colsPermutation().indices();
  for (long long j = qr.rank(); j < perm.size(); ++j) {
    if (!s.empty()) s += ",";
    s += std::to_string(perm(j) + 2);  // 1-based, in the matrix before the pinned column is dropped
  }
  return s;
}

}  // namespace

PolyMismatch estimate_poly_coeffs(const CMat& psi_matrix, int order, double scale) {
  const long long D = psi_matrix.cols();
  if (order < 0 || D % (order + 1) != 0 || D < 2 * (order + 1))
    throw DomainError("estimate_poly_coeffs: column count does not match the order");
  const int M = static_cast<int>(D / (order + 1));
  const CMat psi2 = psi_matrix.rightCols(D - 1);
  Eigen::ColPivHouseholderQR<CMat> qr(psi2);
  if (qr.rank() < D - 1)
    throw NumericalError("estimate_poly_coeffs: rank-deficient, columns {" +
                         deficient_columns(qr) + "}");
  CVec v(D);
  v(0) = 1.0;
  v.tail(D - 1) = -qr.solve(psi_matrix.col(0));
  return pack(v, M, order, scale);
}

PolyMismatch estimate_poly_coeffs(const PsiGram& g, PolyEstimator est) {
  const long long D = g.gram.rows();
  const int P = g.order + 1;
  const int M = static_cast<int>(D / P);
  CVec v(D);
  if (est == PolyEstimator::pinned_ls) {
    const CMat g2 = g.gram.bottomRightCorner(D - 1, D - 1);
    Eigen::LDLT<CMat> ldlt(g2);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().real().minCoeff() > 0.0))
      throw NumericalError("estimate_poly_coeffs: Gram matrix is singular");
    v(0) = 1.0;
    v.tail(D - 1) = -ldlt.solve(g.gram.col(0).tail(D - 1));
  } else {
    // Smallest generalized eigenvector of G v = lambda N v.
    // The ridge keeps noiseless training well posed; it is negligible otherwise.
    const double ridge = 1e-12 * g.gram.real().diagonal().cwiseAbs().maxCoeff();
    Eigen::LLT<RMat> lln(g.noise + ridge * RMat::Identity(D, D));
    if (lln.info() != Eigen::Success)
      throw NumericalError("estimate_poly_coeffs: noise covariance is not positive definite");
    const CMat L = lln.matrixL().toDenseMatrix().cast<cplx>();
    const CMat Li = L.triangularView<Eigen::Lower>().solve(CMat::Identity(D, D));
    CMat S = Li * g.gram * Li.adjoint();
    S = 0.5 * (S + S.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(S);
    if (es.info() != Eigen::Success) throw NumericalError("estimate_poly_coeffs: eigensolver failed");
    v = L.adjoint().triangularView<Eigen::Upper>().solve(es.eigenvectors().col(0));
    if (std::abs(v(0)) == 0.0) throw NumericalError("estimate_poly_coeffs: tau_{1,0} vanishes");
    v /= v(0);
  }
  return pack(v, M, g.order, g.scale);
}

cplx mu_hat(const PolyMismatch& poly, int m, double sigma) {
  if (sigma < 0.0) throw DomainError("mu_hat: sigma must be >= 0");
  if (poly.floor.size() == poly.M()) sigma = std::max(sigma, poly.floor(m));
  const double s = sigma / poly.scale;
  cplx acc = 0.0;
  for (int w = 0; w <= poly.order; ++w) acc += poly.tau(m, w) * orth_poly_psi(w, s);
  return acc;
}

cplx mu_hat_deriv(const PolyMismatch& poly, int m, double sigma) {
  if (poly.floor.size() == poly.M() && sigma < poly.floor(m)) return 0.0;
  const double s = sigma / poly.scale;
  cplx acc = 0.0;
  for (int w = 1; w <= poly.order; ++w) acc += poly.tau(m, w) * orth_poly_psi_deriv(w, s);
  return acc / poly.scale;
}

double mu_hat_amplitude(const PolyMismatch& poly, int m, double sigma) {
  return std::abs(mu_hat(poly, m, sigma));
}

cplx BussgangMismatchModel::mu(int m, double s) const {
  const HpaModel& h = hw_.bs_hpas[m];
  const cplx k = h.t / hw_.bs_rx(m);
  if (s <= 0.0) return k;
  return k * bussgang_mu(h.a_sat / s);
}

cplx BussgangMismatchModel::dmu(int m, double s) const {
  const HpaModel& h = hw_.bs_hpas[m];
  if (s <= 0.0) return 0.0;
  const double x = h.a_sat / s;
  return (h.t / hw_.bs_rx(m)) * bussgang_mu_prime(x) * (-x / s);
}

CVec linear_calibration(const TrainingData& data, int level, cplx c0) {
  const int M = data.M, Q = data.Q;
  if (level < 0 || level >= data.N) throw DomainError("linear_calibration: level out of range");
  if (M < 2) throw DomainError("linear_calibration: need at least two antennas");
  // xy(j, m) = x_m^T y_{j,m}: pilots of m against samples received at m from j
  CMat xy = CMat::Zero(M, M);
  for (int j = 0; j < M; ++j)
    for (int m = 0; m < M; ++m) {
      if (j == m) continue;
      cplx s = 0.0;
      for (int q = 0; q < Q; ++q) s += data.pilots[m](level, q) * data.y(j, m)(level, q);
      xy(j, m) = s;
    }
  CMat Y = CMat::Zero(M, M);
  for (int m = 0; m < M; ++m) {
    double diag = 0.0;
    for (int j = 0; j < M; ++j)
      if (j != m) diag += std::norm(xy(j, m));
    Y(m, m) = diag;
    for (int i = 0; i < M; ++i) {
      if (i == m) continue;
      // -y_{i,m}^H x_m^* x_i^T y_{m,i}
      Y(m, i) = -std::conj(xy(i, m)) * xy(m, i);
    }
  }
  const CVec y1 = Y.col(0);
  const CMat Y2 = Y.rightCols(M - 1);
  const CMat gram = Y2.transpose() * Y2.conjugate();
  Eigen::FullPivLU<CMat> lu(gram);
  if (!lu.isInvertible()) throw NumericalError("linear_calibration: singular system");
  CVec f(M);
  f(0) = 1.0;
  f.tail(M - 1) = -(y1.transpose() * Y2.conjugate() * lu.inverse()).transpose();
  CVec c(M);
  for (int m = 0; m < M; ++m) {
    if (f(m) == cplx(0.0)) throw NumericalError("linear_calibration: zero mismatch factor");
    c(m) = c0 / f(m);
  }
  return c;
}

CVec scale_to_power(const CVec& c, const RVec& sigma_x, double rho_t, const RVec& c_max) {
  const double p = (c.cwiseAbs2().array() * sigma_x.array().square()).sum();
  if (!(p > 0.0)) throw DomainError("scale_to_power: zero vector");
  CVec out = c * std::sqrt(rho_t / p);
  for (int m = 0; m < out.size(); ++m) {
    const double a = std::abs(out(m));
    if (a > c_max(m)) out(m) *= c_max(m) / a;
  }
  return out;
}

CalibrateOutput calibrate_from_training(const TrainingData& data, const SystemHardware& hw,
                                        const PilotPlan& plan, double noise_var, int order,
                                        double rho_t, const CalibrateOptions& opts) {
  if (order < 0) throw DomainError("calibrate: order must be >= 0");
  plan.validate(order);
  CalibrateOutput out;
  out.overhead = data.transmissions;
  const PsiGram g = accumulate_psi_gram(data, plan, order, noise_var, opts.psi);
  out.poly = estimate_poly_coeffs(g, opts.estimator);
  if (opts.hold_below_lowest) {
    out.poly.floor.resize(plan.M());
    for (int m = 0; m < plan.M(); ++m) out.poly.floor(m) = plan.level(m, 0);
  }
  const RVec sx = sigma_x_closed(hw.bs_rx, rho_t);
  const RVec cmax = plan.sigma_max.cwiseQuotient(sx);
  const PolyMismatchModel model(out.poly);
  out.result = slp_solve(model, sx, rho_t, cmax, opts.slp);
  const RVec amp = out.result.c.real();
  const RVec ph = calibration_phases(model, amp, sx);
  for (int m = 0; m < plan.M(); ++m) out.result.c(m) = std::polar(amp(m), ph(m));
  return out;
}

CalibrateOutput calibrate(const SystemHardware& hw, const PilotPlan& plan, const CMat& omega,
                          double noise_var, int order, double rho_t, Rng& rng,
                          const CalibrateOptions& opts) {
  if (order < 0) throw DomainError("calibrate: order must be >= 0");
  plan.validate(order);
  const TrainingData data = simulate_ota_training(hw, plan, omega, noise_var, opts.mode, rng,
                                                  opts.training);
  return calibrate_from_training(data, hw, plan, noise_var, order, rho_t, opts);
}

}  // namespace recal
