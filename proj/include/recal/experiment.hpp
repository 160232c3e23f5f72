// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "recal/calibration.hpp"
#include "recal/channel.hpp"
#include "recal/csv.hpp"
#include "recal/types.hpp"

namespace recal {

enum class Scenario {
  rate_vs_snr,
  loss_vs_mismatch,
  rate_vs_ibo,
  cal_rate_vs_snr,
  cal_rate_vs_ibo,
  cal_rate_vs_order
};

struct McConfig {
  int n_hardware = 20;
  int n_channels = 200;
  int n_symbols = 64;
};

struct CalConfig {
  int order = 5;
  int n_levels = 8;
  int n_symbols = 10;
  double ibo_min_db = 0.0;
  double omega_var = 1.0;
  double noise_var = 1.0;
  int linear_level = -1;  // single-level RC; -1 = highest level
  PolyEstimator estimator = PolyEstimator::gtls;
  Pairing pairing = Pairing::cross_level;
  bool distortion = true;
  bool hold_below = true;
  bool mc_rate = false;  // evaluate calibrated rates by Monte Carlo instead of closed form
};

// Sweep keys, in CSV column order.
inline const std::vector<std::string>& sweep_keys() {
  static const std::vector<std::string> k = {"rho_t_db", "ibo_db", "delta2",
                                             "theta",    "order",  "cal_q"};
  return k;
}

struct ExperimentConfig {
  Scenario scenario = Scenario::rate_vs_snr;
  int M = 64, K = 8;
  std::uint64_t seed = 1;
  TxMode mode = TxMode::surrogate;
  double a0_db = 10.0;
  double noise_var = 1.0;
  bool unit_pathloss = false;
  CellGeometry geom;
  double delta2 = 0.05;
  double theta = kPi / 6.0;
  std::map<std::string, MismatchDistribution> role_override;  // keys a, t, r, u, v
  double v = 1.0;
  double ue_ibo_db = 10.0;
  double b0_db = 0.0;
  double ibo_db = 10.0;
  double rho_t_db = 10.0;
  McConfig mc;
  CalConfig cal;
  std::vector<std::string> methods;  // empty: scenario defaults
  std::map<std::string, std::vector<double>> sweep;
  std::string output;

  void validate() const;
};

Scenario scenario_from_string(const std::string& s);
std::string to_string(Scenario s);
std::vector<std::string> default_methods(Scenario s);
std::vector<std::string> known_methods(Scenario s);

using ProgressFn = std::function<void(int done, int total)>;

struct SweepPoint {
  double rho_t_db, ibo_db, delta2, theta;
  int order, cal_q;
};

// Per-trial rates: values[point * n_trials + trial][method]. Trial t uses the
// same random streams at every point and for every method.
struct TrialGrid {
  std::vector<SweepPoint> points;
  std::vector<std::string> methods;
  int n_trials = 0;
  std::vector<std::vector<double>> values;

  double at(int point, int trial, int method) const {
    return values[static_cast<size_t>(point) * n_trials + trial][method];
  }
};

TrialGrid run_trials(const ExperimentConfig& cfg, const ProgressFn& progress = {}, int threads = 0);

// One row per (sweep point, method): sweep values, method, rate_mean,
// rate_stderr, n_trials. Output is independent of the worker count.
Table run_scenario(const ExperimentConfig& cfg, const ProgressFn& progress = {},
                   int threads = 0);

}  // namespace recal
