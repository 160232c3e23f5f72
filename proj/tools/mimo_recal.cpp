// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "recal/config.hpp"
#include "recal/csv.hpp"
#include "recal/experiment.hpp"
#include "recal/parallel.hpp"
#include "recal/selftest.hpp"

namespace {

int cmd_run(const std::string& config_path, bool paper_scale, const std::vector<long long>& seed,
            const std::vector<std::string>& sets) {
  using namespace recal;
  nlohmann::json j = load_json_file(config_path);
  for (const auto& s : sets) apply_override(j, s);
  ExperimentConfig cfg = config_from_json(j);
  if (paper_scale) apply_paper_scale(cfg);
  if (!seed.empty()) {
    if (seed.front() < 0) throw ConfigError("--seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed.front());
  }
  cfg.validate();

  const int threads = worker_count();
  std::fprintf(stderr, "mimo-recal: %s, M=%d K=%d seed=%llu, %d threads\n",
               to_string(cfg.scenario).c_str(), cfg.M, cfg.K,
               static_cast<unsigned long long>(cfg.seed), threads);
  int last_pct = -1;
  const Table t = run_scenario(
      cfg,
      [&](int done, int total) {
        const int pct = total > 0 ? 100 * done / total : 100;
        if (pct != last_pct) {
          last_pct = pct;
          std::fprintf(stderr, "\r  %3d%% (%d/%d)", pct, done, total);
          if (done == total) std::fputc('\n', stderr);
        }
      },
      threads);

  if (cfg.output.empty() || cfg.output == "-") {
    write_csv(std::cout, t);
    std::cout.flush();
  } else {
    emit_csv(t, cfg.output);
    std::fprintf(stderr, "wrote %zu rows to %s\n", t.rows.size(), cfg.output.c_str());
  }
  return 0;
}

int cmd_selftest() {
  int failed = 0;
  for (const auto& r : recal::run_selftest()) {
    std::printf("%s  %-24s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    failed += !r.pass;
  }
  std::printf("%d check(s) failed\n", failed);
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reciprocity mismatch simulator for TDD massive MIMO with nonlinear HPAs"};
  app.require_subcommand(1);

  std::string config_path;
  bool paper_scale = false;
  std::vector<long long> seed;
  std::vector<std::string> sets;
  auto* run = app.add_subcommand("run", "Run the scenario described by a JSON config");
  run->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  run->add_flag("--paper-scale", paper_scale, "Use M=256, K=20");
  run->add_option("--seed", seed, "Master seed")->expected(1);
  run->add_option("--set", sets, "Override a config field, e.g. --set mc.n_hardware=50")
      ->allow_extra_args(false);

  auto* selftest = app.add_subcommand("selftest", "Run the built-in oracle checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, paper_scale, seed, sets);
    if (*selftest) return cmd_selftest();
  } catch (const recal::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
