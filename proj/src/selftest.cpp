// SPDX-License-Identifier: Apache-2.0
#include "recal/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "recal/analysis.hpp"
#include "recal/calibration.hpp"
#include "recal/csv.hpp"
#include "recal/numerics.hpp"
#include "recal/precoding.hpp"
#include "recal/slp.hpp"

namespace recal {

namespace {

struct Ref {
  const char* label;
  double got;
  double want;
};

SelftestResult check_refs(const std::string& name, const std::vector<Ref>& refs, double rtol) {
  SelftestResult r{name, true, ""};
  double worst = 0.0;
  for (const auto& x : refs) {
    const double err = std::abs(x.got - x.want) / std::max(std::abs(x.want), 1e-300);
    if (!(err <= rtol)) {
      r.pass = false;
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s: got %.17g want %.17g; ", x.label, x.got, x.want);
      r.detail += buf;
    }
    worst = std::max(worst, err);
  }
  if (r.pass) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "max rel err %.2e", worst);
    r.detail = buf;
  }
  return r;
}

SelftestResult guarded(const std::string& name, const std::function<SelftestResult()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {name, false, std::string("threw: ") + e.what()};
  }
}

}  // namespace

std::vector<SelftestResult> run_selftest() {
  std::vector<SelftestResult> out;

  out.push_back(guarded("erfc", [] {
    return check_refs("erfc",
                      {{"erfc(0.5)", erfc(0.5), 0.47950012218695346232},
                       {"erfc(1)", erfc(1.0), 0.15729920705028513066},
                       {"erfc(3)", erfc(3.0), 2.2090496998585441373e-5},
                       {"erfc(10)", erfc(10.0), 2.088487583762544757e-45}},
                      1e-13);
  }));
  out.push_back(guarded("exponential integral", [] {
    return check_refs("exponential integral",
                      {{"E1(0.1)", expint_e1(0.1), 1.8229239584193906661},
                       {"E1(5)", expint_e1(5.0), 1.1482955912753257973e-3},
                       {"e^y E1(50)", expint_e1_scaled(50.0), 0.019615109930114870365},
                       {"e^y E1(200)", expint_e1_scaled(200.0), 4.9752463231793566242e-3},
                       {"Ei(-1)", exp_integral_ei(-1.0), -0.21938393439552027368},
                       {"e^-x Ei(-40)", exp_integral_ei_scaled(-40.0), -0.02440411507962857627}},
                      1e-12);
  }));
  out.push_back(guarded("bussgang mu", [] {
    return check_refs("bussgang mu",
                      {{"mu(0.25)", bussgang_mu(0.25), 0.21184103024067227532},
                       {"mu(1)", bussgang_mu(1.0), 0.62106392192934394698},
                       {"mu(3)", bussgang_mu(3.0), 0.90958236693663552958},
                       {"mu(7.9)", bussgang_mu(7.9), 0.98452572906382929526},
                       {"mu(8.1)", bussgang_mu(8.1), 0.98525619140938512107},
                       {"mu(20)", bussgang_mu(20.0), 0.99751394657720734214}},
                      1e-12);
  }));
  out.push_back(guarded("bussgang lambda", [] {
    return check_refs("bussgang lambda",
                      {{"lambda(1,1)", bussgang_lambda(1.0, 1.0), 0.017932242554547692459},
                       {"lambda(2,1)", bussgang_lambda(2.0, 1.0), 0.007475333125600530812},
                       {"lambda(1,0.5)", bussgang_lambda(1.0, 0.5), 0.001868833281400132703},
                       {"lambda(3,1)", bussgang_lambda(3.0, 1.0), 0.0028415157260324669274},
                       {"lambda(1,3)", bussgang_lambda(1.0, 3.0), 0.10598468041658963248}},
                      1e-9);
  }));
  out.push_back(guarded("orthogonal polynomials", [] {
    return check_refs("orthogonal polynomials",
                      {{"psi0(0.3)", orth_poly_psi(0, 0.3), 2.0},
                       {"psi1(0)", orth_poly_psi(1, 0.0), -6.0},
                       {"psi1(1)", orth_poly_psi(1, 1.0), 6.0},
                       {"psi2(0)", orth_poly_psi(2, 0.0), 12.0},
                       {"psi1(0.25)", orth_poly_psi(1, 0.25), -3.0}},
                      1e-14);
  }));
  out.push_back(guarded("beta zf identity", [] {
    const auto hw = ideal_hardware(64, 8, 1.0);
    const double b = beta_zf_closed(hw, RVec::Ones(8));
    return check_refs("beta zf identity", {{"beta", b, 8.0 / 56.0}}, 1e-14);
  }));
  out.push_back(guarded("slp vs bisection", [] {
    Rng rng(7);
    const int M = 8;
    const auto hw = draw_system_hardware(rng, M, 2, RoleDistributions::common(0.05, kPi / 6),
                                         1.0, 1.0, 0.3);
    const double rho = 1.0;
    const RVec sx = sigma_x_closed(hw.bs_rx, rho);
    const RVec cmax = RVec::Constant(M, 10.0);
    BussgangMismatchModel mm(hw);
    const auto res = slp_solve(mm, sx, rho, cmax);
    const double ref = slp_bisection_oracle(mm, sx, rho, cmax);
    return check_refs("slp vs bisection", {{"g0", res.g0, ref}}, 1e-4);
  }));
  out.push_back(guarded("training overhead", [] {
    Rng rng(3);
    const auto hw = ideal_hardware(6, 2, 1.0);
    const auto plan = make_pilot_plan(hw, 4, 3);
    const auto data = simulate_ota_training(hw, plan, draw_omega(rng, 6), 0.0,
                                            TxMode::surrogate, rng);
    const double want = 6.0 * 4 * 3;
    return check_refs("training overhead",
                      {{"counter", static_cast<double>(data.transmissions), want},
                       {"plan", static_cast<double>(plan.overhead()), want}},
                      0.0);
  }));
  out.push_back(guarded("csv formatting", [] {
    const bool ok = format_cell(1.0 / 3.0) == "0.333333333" && format_cell(Cell{42LL}) == "42" &&
                    format_cell(Cell{std::string("a,b")}) == "\"a,b\"";
    return SelftestResult{"csv formatting", ok, ok ? "ok" : "unexpected cell text"};
  }));
  return out;
}

}  // namespace recal
