// SPDX-License-Identifier: Apache-2.0
#include "recal/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "recal/analysis.hpp"
#include "recal/numerics.hpp"
#include "recal/parallel.hpp"
#include "recal/precoding.hpp"

namespace recal {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::pair<Scenario, std::string>>& scenario_names() {
  static const std::vector<std::pair<Scenario, std::string>> n = {
      {Scenario::rate_vs_snr, "rate_vs_snr"},
      {Scenario::loss_vs_mismatch, "loss_vs_mismatch"},
      {Scenario::rate_vs_ibo, "rate_vs_ibo"},
      {Scenario::cal_rate_vs_snr, "cal_rate_vs_snr"},
      {Scenario::cal_rate_vs_ibo, "cal_rate_vs_ibo"},
      {Scenario::cal_rate_vs_order, "cal_rate_vs_order"}};
  return n;
}

bool is_cal(Scenario s) {
  return s == Scenario::cal_rate_vs_snr || s == Scenario::cal_rate_vs_ibo ||
         s == Scenario::cal_rate_vs_order;
}

std::map<std::string, std::vector<double>> default_sweep(Scenario s) {
  switch (s) {
    case Scenario::rate_vs_snr: return {{"rho_t_db", {-10, 0, 10, 20, 30}}};
    case Scenario::loss_vs_mismatch: return {{"delta2", {0.0, 0.05, 0.1, 0.15, 0.2}}};
    case Scenario::rate_vs_ibo: return {{"ibo_db", {0, 3, 5, 8, 10, 15, 20}}};
    case Scenario::cal_rate_vs_snr: return {{"rho_t_db", {0, 5, 10, 15, 20, 25}}};
    case Scenario::cal_rate_vs_ibo: return {{"ibo_db", {3, 5, 8, 10, 15, 20, 25}}};
    case Scenario::cal_rate_vs_order:
      return {{"order", {0, 1, 2, 3, 4, 5, 6}}, {"cal_q", {2, 50}}};
  }
  return {};
}

// Parameters at one sweep point.
struct Point {
  double rho_t_db, ibo_db, delta2, theta;
  int order, cal_q;
};

std::vector<Point> expand(const ExperimentConfig& cfg) {
  auto sweep = cfg.sweep.empty() ? default_sweep(cfg.scenario) : cfg.sweep;
  Point base{cfg.rho_t_db, cfg.ibo_db, cfg.delta2, cfg.theta, cfg.cal.order, cfg.cal.n_symbols};
  std::vector<Point> pts{base};
  for (const auto& key : sweep_keys()) {
    auto it = sweep.find(key);
    if (it == sweep.end()) continue;
    std::vector<Point> next;
    for (const Point& p : pts)
      for (double v : it->second) {
        Point q = p;
        if (key == "rho_t_db") q.rho_t_db = v;
        if (key == "ibo_db") q.ibo_db = v;
        if (key == "delta2") q.delta2 = v;
        if (key == "theta") q.theta = v;
        if (key == "order") q.order = static_cast<int>(std::lround(v));
        if (key == "cal_q") q.cal_q = static_cast<int>(std::lround(v));
        next.push_back(q);
      }
    pts = std::move(next);
  }
  return pts;
}

RoleDistributions role_dists(const ExperimentConfig& cfg, const Point& p) {
  RoleDistributions d = RoleDistributions::common(p.delta2, p.theta);
  for (const auto& [k, v] : cfg.role_override) {
    if (k == "a") d.a = {v.log_amp_var, 0.0};
    if (k == "t") d.t = v;
    if (k == "r") d.r = v;
    if (k == "u") d.u = v;
    if (k == "v") d.v = v;
  }
  return d;
}

double rate_of(const std::vector<SindrBreakdown>& s) { return mean_rate(s); }

// Rate after applying coefficients c to the precoder (pre-calibration beta).
double calibrated_rate(const CVec& c, const SystemHardware& hw, const RVec& phi, double rho,
                       double a0, double nv, bool mc, int n_channels, Rng& rng) {
  const int M = hw.M();
  const RVec sx = sigma_x_closed(hw.bs_rx, rho);
  CVec g(M);
  RVec s2(M);
  for (int m = 0; m < M; ++m) {
    const double a = std::abs(c(m));
    if (a == 0.0) {
      g(m) = 0.0;
      s2(m) = 0.0;
      continue;
    }
    const BussgangPair bp = bussgang_decompose(hw.bs_hpas[m], a * sx(m));
    g(m) = c(m) * bp.g;
    s2(m) = bp.sigma_d2;
  }
  if (mc) return rate_of(estimate_sindr_mc_general(g, s2, hw, phi, rho, a0, nv, n_channels, rng, 1).ue);
  return rate_of(sindr_zf_closed_general(g, s2, hw, phi, rho, a0, nv));
}

std::vector<double> run_trial(const ExperimentConfig& cfg, const Point& p,
                              const std::vector<std::string>& methods, int trial) {
  const Rng root = Rng(cfg.seed).split(static_cast<std::uint64_t>(trial));
  Rng hw_rng = root.split(0), pl_rng = root.split(1), mc_rng = root.split(2),
      tr_rng = root.split(3);
  const int M = cfg.M, K = cfg.K;
  const double rho = db_to_lin(p.rho_t_db);
  const double a0 = db_to_lin(cfg.a0_db);
  const double nv = cfg.noise_var;
  const double a_sat = std::sqrt(rho / M) * db_to_lin(p.ibo_db);
  UeHpaConfig ue;
  ue.b0 = db_to_lin(cfg.b0_db);
  const double ue_amp = ue.b_sat / db_to_lin(cfg.ue_ibo_db);
  const RoleDistributions dists = role_dists(cfg, p);
  const SystemHardware hw = draw_system_hardware(hw_rng, M, K, dists, a_sat, cfg.v, ue_amp, a0, ue);
  const RVec phi = cfg.unit_pathloss ? RVec::Ones(K) : draw_ue_pathloss(pl_rng, K, cfg.geom);
  const double tr_phi_inv = phi.cwiseInverse().sum();

  std::vector<double> out(methods.size(), kNaN);
  std::vector<SindrBreakdown> closed;
  auto closed_terms = [&]() -> const std::vector<SindrBreakdown>& {
    if (closed.empty()) closed = sindr_zf_closed_all(hw, phi, rho, a0, nv);
    return closed;
  };

  // Calibration products, computed lazily and shared between methods.
  bool trained = false;
  TrainingData data;
  PilotPlan plan;
  auto train = [&]() {
    if (trained) return;
    plan = make_pilot_plan(hw, cfg.cal.n_levels, p.cal_q, cfg.cal.ibo_min_db);
    const CMat omega = draw_omega(tr_rng, M, cfg.cal.omega_var);
    TrainingOptions to;
    to.distortion = cfg.cal.distortion;
    data = simulate_ota_training(hw, plan, omega, cfg.cal.noise_var, cfg.mode, tr_rng, to);
    trained = true;
  };
  const RVec sx = sigma_x_closed(hw.bs_rx, rho);
  auto cmax = [&]() {
    return (hw.bs_a_sat() / db_to_lin(cfg.cal.ibo_min_db)).cwiseQuotient(sx).eval();
  };
  // Order 0 is conventional linear RC on the same training data.
  auto poly_rc = [&](int order) {
    train();
    CalibrateOptions co;
    co.estimator = cfg.cal.estimator;
    co.psi.pairing = cfg.cal.pairing;
    co.hold_below_lowest = cfg.cal.hold_below;
    co.mode = cfg.mode;
    const CalibrateOutput r =
        calibrate_from_training(data, hw, plan, cfg.cal.noise_var, order, rho, co);
    return calibrated_rate(r.result.c, hw, phi, rho, a0, nv, cfg.cal.mc_rate, cfg.mc.n_channels,
                           mc_rng);
  };

  for (size_t j = 0; j < methods.size(); ++j) {
    const std::string& m = methods[j];
    if (m == "ideal" || m == "r_ideal") {
      out[j] = std::log2((M - K) / tr_phi_inv * rho * a0 / nv);
    } else if (m == "closed_form") {
      out[j] = rate_of(closed_terms());
    } else if (m == "mc") {
      const McSindr est = estimate_sindr_mc(hw, phi, rho, a0, nv, cfg.mc.n_channels,
                                            cfg.mc.n_symbols, cfg.mode, mc_rng, 1);
      out[j] = rate_of(est.ue);
    } else if (m == "lrm_closed") {
      LinearMismatchParams lp;
      lp.M = M;
      lp.K = K;
      lp.rho_t = rho;
      lp.a0 = a0;
      lp.tr_phi_inv = tr_phi_inv;
      lp.delta_t2 = dists.t.log_amp_var;
      lp.delta_r2 = dists.r.log_amp_var;
      lp.delta_v2 = dists.v.log_amp_var;
      lp.theta_t = dists.t.phase_bound;
      lp.theta_r = dists.r.phase_bound;
      lp.noise_var = nv;
      double acc = 0.0;
      for (int k = 0; k < K; ++k) {
        lp.phi_k = phi(k);
        acc += rate_from_sindr(sinr_linear_mismatch(lp));
      }
      out[j] = acc / K;
    } else if (m == "large_ibo") {
      LargeIboParams lp;
      lp.M = M;
      lp.K = K;
      lp.rho_t = rho;
      lp.a0 = a0;
      lp.a_sat = a_sat;
      lp.tr_phi_inv = tr_phi_inv;
      lp.delta_a2 = dists.a.log_amp_var;
      lp.delta_t2 = dists.t.log_amp_var;
      lp.delta_r2 = dists.r.log_amp_var;
      lp.theta_t = dists.t.phase_bound;
      lp.theta_r = dists.r.phase_bound;
      lp.noise_var = nv;
      if (large_ibo_valid(lp)) {
        double acc = 0.0;
        for (int k = 0; k < K; ++k) {
          lp.phi_k = phi(k);
          acc += rate_from_sindr(sindr_large_ibo(lp));
        }
        out[j] = acc / K;
      }
    } else if (m == "d_bs" || m == "d_ue" || m == "decomposed" || m == "d_ue_rx") {
      const RateDecomposition d = avg_rate_decomposition(hw, phi, rho, a0, nv);
      out[j] = m == "d_bs" ? d.d_bs : m == "d_ue" ? d.d_ue : m == "d_ue_rx" ? d.d_ue_rx : d.r;
    } else if (m == "none") {
      out[j] = rate_of(closed_terms());
      if (cfg.cal.mc_rate)
        out[j] = calibrated_rate(CVec::Ones(M), hw, phi, rho, a0, nv, true, cfg.mc.n_channels,
                                 mc_rng);
    } else if (m == "linear_rc") {
      out[j] = poly_rc(0);
    } else if (m == "linear_rc_single") {
      train();
      const int lvl = cfg.cal.linear_level < 0 ? plan.n_levels - 1 : cfg.cal.linear_level;
      const CVec c = scale_to_power(linear_calibration(data, lvl), sx, rho, cmax());
      out[j] = calibrated_rate(c, hw, phi, rho, a0, nv, cfg.cal.mc_rate, cfg.mc.n_channels, mc_rng);
    } else if (m == "poly_nrc") {
      out[j] = poly_rc(p.order);
    } else if (m == "perfect_nrc") {
      const BussgangMismatchModel tm(hw);
      SlpOptions so;
      so.strict_concavity = false;
      const CalibrationResult r = slp_solve(tm, sx, rho, cmax(), so);
      const RVec amp = r.c.real();
      const RVec ph = calibration_phases(tm, amp, sx);
      CVec c(M);
      for (int i = 0; i < M; ++i) c(i) = std::polar(amp(i), ph(i));
      out[j] = calibrated_rate(c, hw, phi, rho, a0, nv, cfg.cal.mc_rate, cfg.mc.n_channels,
                               mc_rng);
    }
  }
  return out;
}

}  // namespace

Scenario scenario_from_string(const std::string& s) {
  for (const auto& [k, v] : scenario_names())
    if (v == s) return k;
  throw DomainError("unknown scenario '" + s + "'");
}

std::string to_string(Scenario s) {
  for (const auto& [k, v] : scenario_names())
    if (k == s) return v;
  return "?";
}

std::vector<std::string> default_methods(Scenario s) {
  if (is_cal(s)) return {"none", "linear_rc", "poly_nrc", "perfect_nrc"};
  if (s == Scenario::loss_vs_mismatch)
    return {"r_ideal", "d_bs", "d_ue", "decomposed", "closed_form"};
  return {"ideal", "closed_form", "mc", "lrm_closed", "large_ibo"};
}

std::vector<std::string> known_methods(Scenario s) {
  if (is_cal(s)) return {"none", "linear_rc", "linear_rc_single", "poly_nrc", "perfect_nrc"};
  return {"ideal",   "closed_form", "mc",         "lrm_closed", "large_ibo",
          "r_ideal", "d_bs",        "d_ue",       "d_ue_rx",    "decomposed"};
}

void ExperimentConfig::validate() const {
  if (K < 1 || M <= K) throw DomainError("M/K: need M > K >= 1");
  if (!(noise_var > 0.0)) throw DomainError("noise_var: must be positive");
  if (!(v > 0.0)) throw DomainError("hardware.v: must be positive");
  if (!unit_pathloss) geom.validate();
  if (mc.n_hardware < 1) throw DomainError("mc.n_hardware: must be >= 1");
  if (mc.n_channels < 1) throw DomainError("mc.n_channels: must be >= 1");
  if (mc.n_symbols < 1) throw DomainError("mc.n_symbols: must be >= 1");
  const auto known = known_methods(scenario);
  for (const auto& m : methods)
    if (std::find(known.begin(), known.end(), m) == known.end())
      throw DomainError("methods: '" + m + "' is not available for " + to_string(scenario));
  for (const auto& [k, vals] : sweep) {
    if (std::find(sweep_keys().begin(), sweep_keys().end(), k) == sweep_keys().end())
      throw DomainError("sweep." + k + ": unknown sweep key");
    if (vals.empty()) throw DomainError("sweep." + k + ": empty grid");
    for (double x : vals) {
      if (!std::isfinite(x)) throw DomainError("sweep." + k + ": non-finite value");
      if (k == "delta2" && x < 0.0) throw DomainError("sweep.delta2: must be >= 0");
      if (k == "theta" && (x < 0.0 || x > kPi)) throw DomainError("sweep.theta: must lie in [0, pi]");
      if (k == "order" && (x < 0 || x > 20)) throw DomainError("sweep.order: must lie in [0, 20]");
      if (k == "cal_q" && x < 1) throw DomainError("sweep.cal_q: must be >= 1");
    }
  }
  if (delta2 < 0.0) throw DomainError("hardware.delta2: must be >= 0");
  if (theta < 0.0 || theta > kPi) throw DomainError("hardware.theta: must lie in [0, pi]");
  if (is_cal(scenario)) {
    if (cal.n_levels < 1 || cal.n_symbols < 1)
      throw DomainError("calibration: n_levels and n_symbols must be >= 1");
    if (cal.linear_level >= cal.n_levels)
      throw DomainError("calibration.linear_level: must be below n_levels (or -1)");
    int max_order = cal.order;
    if (auto it = sweep.find("order"); it != sweep.end())
      for (double x : it->second) max_order = std::max(max_order, static_cast<int>(x));
    if (cal.n_levels < max_order + 1)
      throw DomainError("calibration.n_levels: need n_levels >= order + 1");
  }
}

TrialGrid run_trials(const ExperimentConfig& cfg, const ProgressFn& progress, int threads) {
  cfg.validate();
  const std::vector<Point> pts = expand(cfg);
  TrialGrid g;
  g.methods = cfg.methods.empty() ? default_methods(cfg.scenario) : cfg.methods;
  const int T = cfg.mc.n_hardware;
  const int P = static_cast<int>(pts.size());
  for (const Point& p : pts)
    g.points.push_back({p.rho_t_db, p.ibo_db, p.delta2, p.theta, p.order, p.cal_q});
  g.values.assign(static_cast<size_t>(P) * T, {});
  g.n_trials = T;
  std::atomic<int> done{0};
  std::mutex mu;
  parallel_for(
      P * T,
      [&](int idx) {
        const int pi = idx / T, t = idx % T;
        g.values[idx] = run_trial(cfg, pts[pi], g.methods, t);
        const int d = ++done;
        if (progress) {
          std::lock_guard<std::mutex> lk(mu);
          progress(d, P * T);
        }
      },
      threads);
  return g;
}

Table run_scenario(const ExperimentConfig& cfg, const ProgressFn& progress, int threads) {
  const TrialGrid g = run_trials(cfg, progress, threads);
  const auto& methods = g.methods;
  const int T = g.n_trials;
  const int P = static_cast<int>(g.points.size());
  const auto& res = g.values;

  Table tab;
  tab.header = {"scenario", "point"};
  for (const auto& k : sweep_keys()) tab.header.push_back(k);
  for (const char* h : {"method", "rate_mean", "rate_stderr", "n_trials"}) tab.header.push_back(h);
  for (int pi = 0; pi < P; ++pi) {
    const SweepPoint& p = g.points[pi];
    for (size_t j = 0; j < methods.size(); ++j) {
      double s = 0.0, s2 = 0.0;
      long long n = 0;
      for (int t = 0; t < T; ++t) {
        const double x = res[static_cast<size_t>(pi) * T + t][j];
        if (!std::isfinite(x)) continue;
        s += x;
        s2 += x * x;
        ++n;
      }
      const double mean = n ? s / n : kNaN;
      const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
      const double se = n > 1 ? std::sqrt(var / n) : kNaN;
      tab.rows.push_back({to_string(cfg.scenario), static_cast<long long>(pi), p.rho_t_db,
                          p.ibo_db, p.delta2, p.theta, static_cast<long long>(p.order),
                          static_cast<long long>(p.cal_q), methods[j], mean, se, n});
    }
  }
  return tab;
}

}  // namespace recal
