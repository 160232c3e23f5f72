#include <doctest.h>

#include <cmath>

#include "recal/calibration.hpp"
#include "recal/numerics.hpp"
#include "recal/precoding.hpp"

using namespace recal;
using doctest::Approx;

namespace {

struct Synthetic {
  PilotPlan plan;
  TrainingData data;
  CMat tau;  // ground truth, tau(0,0) = 1
  double scale = 1.0;
};

// Training data whose mismatch ratios are exact polynomials in the pilot amplitude.
Synthetic synthetic(Rng& rng, int M, int N, int Q, int order, double noise = 0.0) {
  Synthetic s;
  s.plan.n_levels = N;
  s.plan.n_symbols = Q;
  s.plan.sigma_max.resize(M);
  for (int m = 0; m < M; ++m) s.plan.sigma_max(m) = rng.uniform(0.8, 1.2);
  s.scale = s.plan.sigma_max.maxCoeff();
  s.tau.resize(M, order + 1);
  for (int m = 0; m < M; ++m)
    for (int w = 0; w <= order; ++w)
      s.tau(m, w) = rng.complex_normal(w == 0 ? 1.0 : 0.01 / (w * w));
  s.tau /= s.tau(0, 0);
  CVec r(M);
  for (int m = 0; m < M; ++m) r(m) = draw_complex_gain(rng, {0.05, 0.5});
  const CMat omega = draw_omega(rng, M);
  auto poly = [&](int m, double sigma) {
    cplx acc = 0.0;
    for (int w = 0; w <= order; ++w) acc += s.tau(m, w) * orth_poly_psi(w, sigma / s.scale);
    return acc;
  };
  TrainingData& d = s.data;
  d.M = M;
  d.N = N;
  d.Q = Q;
  d.pilots.assign(M, CMat(N, Q));
  d.rx.assign(static_cast<size_t>(M) * M, CMat());
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n)
      for (int q = 0; q < Q; ++q) d.pilots[m](n, q) = s.plan.level(m, n) * rng.unit_phase();
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < M; ++i) {
      if (i == m) continue;
      d.y(m, i).resize(N, Q);
      for (int n = 0; n < N; ++n)
        for (int q = 0; q < Q; ++q) {
          const cplx tx = r(m) * poly(m, s.plan.level(m, n)) * d.pilots[m](n, q);
          d.y(m, i)(n, q) = r(i) * omega(m, i) * tx + (noise > 0 ? rng.complex_normal(noise) : 0.0);
        }
    }
  d.transmissions = static_cast<long long>(M) * N * Q;
  return s;
}

double rel_err(const CMat& a, const CMat& b) { return (a - b).norm() / b.norm(); }

SystemHardware cal_hardware(Rng& rng, int M, double ibo, double rho = 10.0) {
  return draw_system_hardware(rng, M, 1, RoleDistributions::common(0.05, kPi / 6),
                              std::sqrt(rho / M) * db_to_lin(ibo), 1.0, 0.1, 10.0);
}

}  // namespace

TEST_CASE("orthogonal polynomial examples") {
  for (double s : {0.0, 0.3, 1.7}) CHECK(orth_poly_psi(0, s) == 2.0);
  for (double s : {0.0, 0.25, 0.9}) CHECK(orth_poly_psi(1, s) == Approx(12 * s - 6).epsilon(1e-15));
  CHECK(orth_poly_psi(2, 0.0) == 12.0);
  for (int w = 1; w <= 8; ++w)
    for (double s : {0.1, 0.5, 0.95}) {
      const double h = 1e-6;
      const double fd = (orth_poly_psi(w, s + h) - orth_poly_psi(w, s - h)) / (2 * h);
      CHECK(orth_poly_psi_deriv(w, s) == Approx(fd).epsilon(1e-6).scale(std::abs(orth_poly_psi(w, 1.0))));
    }
  CHECK_THROWS_AS(orth_poly_psi(21, 0.5), DomainError);
  CHECK_THROWS_AS(orth_poly_psi(-1, 0.5), DomainError);
}

TEST_CASE("polynomials are orthogonal under the weight s(1-s)") {
  // Gauss-Legendre-free check: fine midpoint rule on [0, 1].
  const int n = 20000;
  for (int a = 0; a <= 4; ++a)
    for (int b = a + 1; b <= 5; ++b) {
      double acc = 0.0, na = 0.0;
      for (int j = 0; j < n; ++j) {
        const double s = (j + 0.5) / n;
        const double w = s * (1 - s);
        acc += w * orth_poly_psi(a, s) * orth_poly_psi(b, s);
        na += w * orth_poly_psi(a, s) * orth_poly_psi(a, s);
      }
      CHECK(std::abs(acc) <= 1e-6 * na);
    }
}

TEST_CASE("pilot plan") {
  const auto hw = ideal_hardware(4, 2, 3.0);
  const auto plan = make_pilot_plan(hw, 5, 10, 10.0 * std::log10(3.0));
  CHECK(plan.sigma_max(2) == Approx(1.0).epsilon(1e-14));
  CHECK(plan.level(0, 4) == Approx(1.0).epsilon(1e-14));
  CHECK(plan.level(0, 0) == Approx(0.2).epsilon(1e-14));
  CHECK(plan.overhead() == 4 * 5 * 10);
  CHECK_THROWS_AS(plan.validate(5), DomainError);
  CHECK_NOTHROW(plan.validate(4));
}

TEST_CASE("over-the-air training") {
  Rng rng(1);
  const int M = 5;
  SUBCASE("noiseless unit hardware") {
    const auto hw = ideal_hardware(M, 2, 1.0, 4.0);
    const auto plan = make_pilot_plan(hw, 3, 4);
    const CMat omega = draw_omega(rng, M);
    TrainingOptions to;
    to.distortion = false;
    const auto d = simulate_ota_training(hw, plan, omega, 0.0, TxMode::surrogate, rng, to);
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < M; ++i) {
        if (i == m) continue;
        for (int n = 0; n < 3; ++n) {
          const double g = bussgang_mu(1.0 / plan.level(m, n));
          for (int q = 0; q < 4; ++q) {
            const cplx want = 2.0 * omega(m, i) * g * d.x(m)(n, q);
            CHECK(std::abs(d.y(m, i)(n, q) - want) <= 1e-12 * std::abs(want));
            CHECK(std::abs(d.y(m, i)(n, q) / d.x(m)(n, q) - d.y(i, m)(n, q) / d.x(i)(n, q)) <= 1e-12);
          }
        }
      }
    CHECK(d.transmissions == M * 3 * 4);
  }
  SUBCASE("constant-modulus pilots") {
    const auto hw = cal_hardware(rng, M, 10.0);
    const auto plan = make_pilot_plan(hw, 4, 1000);
    const auto d = simulate_ota_training(hw, plan, draw_omega(rng, M), 1.0, TxMode::physical, rng);
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < 4; ++n) {
        const double rms = std::sqrt(d.x(m).row(n).cwiseAbs2().mean());
        CHECK(rms == Approx(plan.level(m, n)).epsilon(1e-12));
      }
    CHECK(d.transmissions == plan.overhead());
  }
  SUBCASE("records") {
    const auto hw = ideal_hardware(3, 1, 1.0);
    const auto plan = make_pilot_plan(hw, 2, 3);
    const auto d = simulate_ota_training(hw, plan, draw_omega(rng, 3), 0.1, TxMode::surrogate, rng);
    const auto recs = d.records();
    CHECK(recs.size() == 3 * 2 * 2);
    for (const auto& r : recs) CHECK(r.y.size() == 3);
    CHECK_THROWS_AS(d.record(1, 1, 0), DomainError);
  }
  SUBCASE("invalid inter-antenna channel") {
    const auto hw = ideal_hardware(3, 1, 1.0);
    const auto plan = make_pilot_plan(hw, 2, 3);
    CMat omega = draw_omega(rng, 3);
    omega(0, 1) += 0.1;
    CHECK_THROWS_AS(simulate_ota_training(hw, plan, omega, 0.0, TxMode::surrogate, rng), DomainError);
    omega = draw_omega(rng, 3);
    omega(1, 1) = 1.0;
    CHECK_THROWS_AS(simulate_ota_training(hw, plan, omega, 0.0, TxMode::surrogate, rng), DomainError);
  }
}

TEST_CASE("psi matrix layout") {
  Rng rng(2);
  auto s = synthetic(rng, 2, 1, 1, 1);
  const CMat psi = assemble_psi_matrix(s.data, s.plan, 1);
  REQUIRE(psi.rows() == 1);
  REQUIRE(psi.cols() == 4);
  const double sc = s.scale;
  const cplx y01 = s.data.y(1, 0)(0, 0) * s.data.x(0)(0, 0);  // received at 0
  const cplx y10 = s.data.y(0, 1)(0, 0) * s.data.x(1)(0, 0);  // received at 1
  const double s0 = s.plan.level(0, 0) / sc, s1 = s.plan.level(1, 0) / sc;
  CHECK(std::abs(psi(0, 0) - y01 * orth_poly_psi(0, s0)) < 1e-15);
  CHECK(std::abs(psi(0, 1) - y01 * orth_poly_psi(1, s0)) < 1e-15);
  CHECK(std::abs(psi(0, 2) + y10 * orth_poly_psi(0, s1)) < 1e-15);
  CHECK(std::abs(psi(0, 3) + y10 * orth_poly_psi(1, s1)) < 1e-15);

  auto big = synthetic(rng, 6, 4, 3, 2);
  CHECK(assemble_psi_matrix(big.data, big.plan, 2).rows() == 6 * 5 / 2 * 4 * 3);

  auto broken = big;
  broken.data.y(2, 4).resize(0, 0);
  CHECK_THROWS_AS(assemble_psi_matrix(broken.data, broken.plan, 2), DomainError);
}

TEST_CASE("ground truth lies in the null space of noiseless data") {
  Rng rng(3);
  auto s = synthetic(rng, 6, 5, 3, 3);
  const CMat psi = assemble_psi_matrix(s.data, s.plan, 3);
  CVec t(6 * 4);
  for (int m = 0; m < 6; ++m)
    for (int w = 0; w < 4; ++w) t(m * 4 + w) = s.tau(m, w);
  CHECK((psi * t).norm() <= 1e-10 * psi.norm() * t.norm());
}

TEST_CASE("noiseless coefficient recovery") {
  Rng rng(4);
  const int order = 4;
  auto s = synthetic(rng, 8, 6, 3, order);
  const auto dense = estimate_poly_coeffs(assemble_psi_matrix(s.data, s.plan, order), order, s.scale);
  CHECK(rel_err(dense.tau, s.tau) <= 1e-8);
  for (Pairing pr : {Pairing::same_level, Pairing::cross_level}) {
    PsiOptions po;
    po.pairing = pr;
    const auto g = accumulate_psi_gram(s.data, s.plan, order, 0.0, po);
    CHECK(rel_err(estimate_poly_coeffs(g, PolyEstimator::pinned_ls).tau, s.tau) <= 1e-8);
    CHECK(rel_err(estimate_poly_coeffs(g, PolyEstimator::gtls).tau, s.tau) <= 1e-8);
  }
}

TEST_CASE("dense and Gram forms agree for same-level pairing") {
  Rng rng(5);
  auto s = synthetic(rng, 5, 4, 2, 2, 1e-3);
  const CMat psi = assemble_psi_matrix(s.data, s.plan, 2);
  PsiOptions po;
  po.pairing = Pairing::same_level;
  const auto g = accumulate_psi_gram(s.data, s.plan, 2, 1e-3, po);
  CHECK((g.gram - psi.adjoint() * psi).norm() <= 1e-10 * g.gram.norm());
  CHECK(g.rows == psi.rows());
}

TEST_CASE("identical antennas give identical coefficient blocks") {
  Rng rng(6);
  const auto hw = ideal_hardware(6, 2, 1.0);
  const auto plan = make_pilot_plan(hw, 4, 3);
  TrainingOptions to;
  to.distortion = false;
  const auto d = simulate_ota_training(hw, plan, draw_omega(rng, 6), 0.0, TxMode::surrogate, rng, to);
  const auto p = estimate_poly_coeffs(accumulate_psi_gram(d, plan, 3, 0.0));
  for (int m = 1; m < 6; ++m) CHECK((p.tau.row(m) - p.tau.row(0)).norm() <= 1e-9);
}

TEST_CASE("rank deficiency names the columns") {
  Rng rng(7);
  auto s = synthetic(rng, 4, 2, 2, 1);
  for (int m = 0; m < 4; ++m)
    for (int i = 0; i < 4; ++i)
      if (i != m && (m == 3 || i == 3)) s.data.y(m, i).setZero();
  try {
    estimate_poly_coeffs(assemble_psi_matrix(s.data, s.plan, 1), 1, s.scale);
    FAIL("expected a rank-deficiency error");
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("7") != std::string::npos);
    CHECK(msg.find("8") != std::string::npos);
  }
}

TEST_CASE("fitted mismatch follows the true ratio") {
  Rng rng(8);
  const int M = 8;
  const auto hw = cal_hardware(rng, M, 10.0);
  const auto plan = make_pilot_plan(hw, 8, 10, 5.0);
  TrainingOptions to;
  to.distortion = false;
  const auto d = simulate_ota_training(hw, plan, draw_omega(rng, M), 0.0, TxMode::surrogate, rng, to);
  const auto p = estimate_poly_coeffs(accumulate_psi_gram(d, plan, 5, 0.0));
  const BussgangMismatchModel truth(hw);
  const cplx k = mu_hat(p, 0, plan.level(0, 0)) / truth.mu(0, plan.level(0, 0));
  double worst = 0.0, worst_jump = 0.0;
  for (int m = 0; m < M; ++m) {
    double prev_arg = std::arg(mu_hat(p, m, 0.0));
    for (int j = 0; j <= 50; ++j) {
      const double s = plan.sigma_max(m) * j / 50.0;
      const cplx est = mu_hat(p, m, s), ref = k * truth.mu(m, s);
      worst = std::max(worst, std::abs(est - ref) / std::abs(ref));
      worst_jump = std::max(worst_jump, std::abs(std::remainder(std::arg(est) - prev_arg, 2 * kPi)));
      prev_arg = std::arg(est);
    }
  }
  CHECK(worst <= 0.01);
  CHECK(worst_jump < kPi / 2);
}

TEST_CASE("coefficient error falls with training SNR") {
  Rng rng(9);
  const int M = 6, order = 2;
  std::vector<double> err;
  for (double nv : {1e-1, 1e-2, 1e-3, 1e-4}) {
    double acc = 0.0;
    for (int t = 0; t < 100; ++t) {
      Rng r = rng.split(t);
      auto s = synthetic(r, M, 4, 4, order, nv);
      const auto p = estimate_poly_coeffs(accumulate_psi_gram(s.data, s.plan, order, nv));
      acc += rel_err(p.tau, s.tau);
    }
    err.push_back(acc / 100);
  }
  for (size_t j = 1; j < err.size(); ++j) CHECK(err[j] < err[j - 1]);
}

TEST_CASE("mu_hat with real coefficients") {
  PolyMismatch p;
  p.order = 1;
  p.tau.resize(1, 2);
  p.tau << 1.0, 0.05;
  p.scale = 1.0;
  CHECK(std::arg(mu_hat(p, 0, 0.7)) == 0.0);
  CHECK(mu_hat_amplitude(p, 0, 0.7) == Approx(2.0 + 0.05 * (12 * 0.7 - 6)).epsilon(1e-15));
  p.floor = RVec::Constant(1, 0.5);
  CHECK(mu_hat(p, 0, 0.1) == mu_hat(p, 0, 0.5));
  CHECK(mu_hat_deriv(p, 0, 0.1) == cplx(0.0));
}

TEST_CASE("linear calibration") {
  Rng rng(10);
  TrainingOptions to;
  to.distortion = false;
  SUBCASE("identical hardware") {
    const auto hw = ideal_hardware(6, 2, 1e6);
    const auto plan = make_pilot_plan(hw, 1, 3, 60.0);
    const auto d = simulate_ota_training(hw, plan, draw_omega(rng, 6), 0.0, TxMode::surrogate, rng, to);
    const CVec c = linear_calibration(d, 0, cplx(0.5, 0.5));
    for (int m = 0; m < 6; ++m) CHECK(std::abs(c(m) - cplx(0.5, 0.5)) <= 1e-10);
  }
  SUBCASE("two antennas") {
    const auto hw = cal_hardware(rng, 2, 60.0);
    const auto plan = make_pilot_plan(hw, 1, 2, 60.0);
    const auto d = simulate_ota_training(hw, plan, draw_omega(rng, 2), 0.0, TxMode::surrogate, rng, to);
    const CVec c = linear_calibration(d, 0);
    const cplx k0 = hw.bs_hpas[0].t / hw.bs_rx(0), k1 = hw.bs_hpas[1].t / hw.bs_rx(1);
    CHECK(std::abs(c(0) / c(1) - k1 / k0) <= 1e-10 * std::abs(k1 / k0));
  }
  SUBCASE("equalizes t/r") {
    const auto hw = cal_hardware(rng, 8, 60.0);
    const auto plan = make_pilot_plan(hw, 2, 3, 60.0);
    const auto d = simulate_ota_training(hw, plan, draw_omega(rng, 8), 0.0, TxMode::surrogate, rng, to);
    const CVec c = linear_calibration(d, 1);
    const cplx ref = c(0) * hw.bs_hpas[0].t / hw.bs_rx(0);
    for (int m = 1; m < 8; ++m)
      CHECK(std::abs(c(m) * hw.bs_hpas[m].t / hw.bs_rx(m) - ref) <= 1e-8 * std::abs(ref));
    CHECK_THROWS_AS(linear_calibration(d, 2), DomainError);
  }
}

TEST_CASE("scale_to_power") {
  CVec c(3);
  c << 1.0, cplx(0.0, 2.0), 3.0;
  const RVec sx = RVec::Constant(3, 0.5);
  const CVec a = scale_to_power(c, sx, 2.0, RVec::Constant(3, 100.0));
  CHECK((a.cwiseAbs2().array() * sx.array().square()).sum() == Approx(2.0).epsilon(1e-14));
  const CVec b = scale_to_power(c, sx, 2.0, RVec::Constant(3, 1.0));
  CHECK(b.cwiseAbs().maxCoeff() <= 1.0 + 1e-15);
  CHECK_THROWS_AS(scale_to_power(CVec::Zero(3), sx, 1.0, RVec::Ones(3)), DomainError);
}

TEST_CASE("end-to-end calibration equalizes the estimated gains") {
  Rng rng(11);
  const int M = 16;
  const double rho = 10.0;
  const auto hw = cal_hardware(rng, M, 10.0, rho);
  const auto plan = make_pilot_plan(hw, 6, 10);
  CalibrateOptions opts;
  opts.training.distortion = false;
  const auto out = calibrate(hw, plan, draw_omega(rng, M), 0.0, 5, rho, rng, opts);
  CHECK(out.overhead == M * 6 * 10);
  const RVec sx = sigma_x_closed(hw.bs_rx, rho);
  const PolyMismatchModel mm(out.poly);
  double lo = 1e300, hi = 0.0;
  for (int m = 0; m < M; ++m) {
    const double f = slp_phi(mm, m, std::abs(out.result.c(m)), sx(m));
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  CHECK((hi - lo) / out.result.g0 <= 1e-3);
  for (int m = 0; m < M; ++m) {
    const cplx v = out.result.c(m) * mu_hat(out.poly, m, std::abs(out.result.c(m)) * sx(m));
    CHECK(std::abs(std::arg(v)) <= 1e-10);
  }
  // Five levels cannot pin down a fifth-order polynomial.
  const auto p5 = make_pilot_plan(hw, 5, 10);
  CHECK_THROWS_AS(calibrate(hw, p5, draw_omega(rng, M), 0.0, 5, rho, rng, opts), DomainError);
}

TEST_CASE("calibration with the true mismatch equalizes exactly") {
  Rng rng(12);
  const int M = 16;
  const double rho = 10.0;
  const auto hw = cal_hardware(rng, M, 5.0, rho);
  const RVec sx = sigma_x_closed(hw.bs_rx, rho);
  const RVec cmax = (hw.bs_a_sat()).cwiseQuotient(sx);
  const BussgangMismatchModel tm(hw);
  SlpOptions so;
  so.strict_concavity = false;
  const auto r = slp_solve(tm, sx, rho, cmax, so);
  const RVec ph = calibration_phases(tm, r.c.real(), sx);
  cplx ref = 0.0;
  for (int m = 0; m < M; ++m) {
    const cplx c = std::polar(r.c(m).real(), ph(m));
    const cplx v = c * tm.mu(m, r.c(m).real() * sx(m));
    if (m == 0) ref = v;
    CHECK(std::abs(v - ref) <= 1e-8 * std::abs(ref) + 1e-6 * r.g0);
  }
}
