// SPDX-License-Identifier: Apache-2.0
#include "recal/hardware.hpp"

#include <cmath>

#include "recal/numerics.hpp"

namespace recal {

void HpaModel::validate() const {
  if (!(a0 > 0.0)) throw DomainError("HpaModel: a0 must be positive");
  if (!(a_sat > 0.0)) throw DomainError("HpaModel: a_sat must be positive");
  if (!(v > 0.0)) throw DomainError("HpaModel: v must be positive");
}

RoleDistributions RoleDistributions::common(double log_amp_var, double phase_bound) {
  RoleDistributions d;
  d.a = {log_amp_var, 0.0};
  d.t = d.r = d.u = d.v = {log_amp_var, phase_bound};
  return d;
}

void RoleDistributions::validate() const {
  a.validate();
  t.validate();
  r.validate();
  u.validate();
  v.validate();
}

CVec SystemHardware::bs_t() const {
  CVec out(M());
  for (int m = 0; m < M(); ++m) out(m) = bs_hpas[m].t;
  return out;
}

RVec SystemHardware::bs_a_sat() const {
  RVec out(M());
  for (int m = 0; m < M(); ++m) out(m) = bs_hpas[m].a_sat;
  return out;
}

void SystemHardware::validate() const {
  const int m = M(), k = K();
  if (m < 1 || k < 1) throw DomainError("SystemHardware: empty");
  if (bs_rx.size() != m || ue_tx_gain.size() != k ||
      static_cast<int>(ue_hpas.size()) != k)
    throw DomainError("SystemHardware: inconsistent vector lengths");
  for (int i = 0; i < m; ++i) {
    bs_hpas[i].validate();
    if (bs_rx(i) == cplx(0.0)) throw DomainError("SystemHardware: zero receive gain");
  }
}

double sspa_gain(double r, double a_sat, double v) {
  if (r == 0.0) return 1.0;
  const double lr = std::log(r / a_sat);
  const double e = 2.0 * v * lr;
  // (1 + z)^{1/(2v)} with z = exp(e), computed without overflow
  if (e > 700.0) return std::exp(-lr - std::log1p(std::exp(-e)) / (2.0 * v));
  return std::exp(-std::log1p(std::exp(e)) / (2.0 * v));
}

cplx sspa_apply(const HpaModel& hpa, cplx x) {
  return std::sqrt(hpa.a0) * hpa.t * x * sspa_gain(std::abs(x), hpa.a_sat, hpa.v);
}

BussgangPair bussgang_decompose(const HpaModel& hpa, double sigma_x) {
  if (!(sigma_x > 0.0)) throw DomainError("bussgang_decompose: sigma_x must be positive");
  BussgangPair p;
  p.g = hpa.t * bussgang_mu(hpa.a_sat / sigma_x);
  p.sigma_d2 = std::norm(hpa.t) * bussgang_lambda(hpa.a_sat, sigma_x);
  return p;
}

double ibo_db(double a_sat, double sigma_x) {
  if (!(a_sat > 0.0) || !(sigma_x > 0.0)) throw DomainError("ibo_db: arguments must be positive");
  return 10.0 * std::log10(a_sat / sigma_x);
}

double sigma_from_ibo(double a_sat, double ibo) {
  if (!(a_sat > 0.0)) throw DomainError("sigma_from_ibo: a_sat must be positive");
  return a_sat / db_to_lin(ibo);
}

double a_sat_from_ibo(double sigma_x, double ibo) {
  if (!(sigma_x > 0.0)) throw DomainError("a_sat_from_ibo: sigma_x must be positive");
  return sigma_x * db_to_lin(ibo);
}

SystemHardware draw_system_hardware(Rng& rng, int M, int K, const RoleDistributions& dists,
                                    double a_sat_base, double v, double ue_pilot_amp, double a0,
                                    const UeHpaConfig& ue) {
  if (K < 1 || M <= K) throw DomainError("draw_system_hardware: need M > K >= 1");
  if (!(a_sat_base > 0.0) || !(v > 0.0) || !(a0 > 0.0) || !(ue_pilot_amp >= 0.0))
    throw DomainError("draw_system_hardware: invalid HPA parameters");
  dists.validate();

  SystemHardware hw;
  hw.bs_hpas.resize(M);
  hw.bs_rx.resize(M);
  for (int m = 0; m < M; ++m) {
    HpaModel& h = hw.bs_hpas[m];
    h.a0 = a0;
    h.v = v;
    h.t = draw_complex_gain(rng, dists.t);
    h.a_sat = a_sat_base * std::abs(draw_complex_gain(rng, dists.a));
    hw.bs_rx(m) = draw_complex_gain(rng, dists.r);
  }
  hw.ue_rx.resize(K);
  hw.ue_tx_gain.resize(K);
  hw.ue_hpas.resize(K);
  for (int k = 0; k < K; ++k) {
    HpaModel& h = hw.ue_hpas[k];
    h.a0 = ue.b0;
    h.v = v;
    h.a_sat = ue.b_sat;
    h.t = draw_complex_gain(rng, dists.v);
    hw.ue_rx(k) = draw_complex_gain(rng, dists.u);
    hw.ue_tx_gain(k) = h.t * sspa_gain(ue_pilot_amp, h.a_sat, v);
  }
  return hw;
}

SystemHardware ideal_hardware(int M, int K, double a_sat, double a0, double v) {
  Rng rng(0);
  RoleDistributions d;
  return draw_system_hardware(rng, M, K, d, a_sat, v, 0.0, a0);
}

}  // namespace recal
