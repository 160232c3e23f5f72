#include <doctest.h>

#include <cmath>

#include "recal/calibration.hpp"
#include "recal/numerics.hpp"
#include "recal/slp.hpp"

using namespace recal;
using doctest::Approx;

namespace {

// mu_m(s) = k_m mu(A_m / s), a soft-limited gain with complex offset.
class SoftModel : public MismatchModel {
 public:
  SoftModel(CVec k, RVec a) : k_(std::move(k)), a_(std::move(a)) {}
  int size() const override { return static_cast<int>(k_.size()); }
  cplx mu(int m, double s) const override {
    return s <= 0 ? k_(m) : k_(m) * bussgang_mu(a_(m) / s);
  }
  cplx dmu(int m, double s) const override {
    if (s <= 0) return 0.0;
    const double x = a_(m) / s;
    return k_(m) * bussgang_mu_prime(x) * (-x / s);
  }

 private:
  CVec k_;
  RVec a_;
};

class ConstModel : public MismatchModel {
 public:
  explicit ConstModel(CVec k) : k_(std::move(k)) {}
  int size() const override { return static_cast<int>(k_.size()); }
  cplx mu(int m, double) const override { return k_(m); }
  cplx dmu(int, double) const override { return 0.0; }

 private:
  CVec k_;
};

// Gain that rises then falls: phi is not monotone.
class FoldbackModel : public MismatchModel {
 public:
  int size() const override { return 2; }
  cplx mu(int, double s) const override { return std::exp(-s * s); }
  cplx dmu(int, double s) const override { return -2 * s * std::exp(-s * s); }
};

SoftModel random_soft(Rng& rng, int M) {
  CVec k(M);
  RVec a(M);
  for (int m = 0; m < M; ++m) {
    k(m) = draw_complex_gain(rng, {0.1, kPi / 4});
    a(m) = rng.uniform(0.5, 1.5);
  }
  return SoftModel(k, a);
}

}  // namespace

TEST_CASE("phi and its derivative") {
  Rng rng(1);
  const auto mm = random_soft(rng, 4);
  for (int m = 0; m < 4; ++m)
    for (double c : {0.2, 1.0, 3.0}) {
      const double h = 1e-6;
      const double fd = (slp_phi(mm, m, c + h, 0.7) - slp_phi(mm, m, c - h, 0.7)) / (2 * h);
      CHECK(slp_phi_prime(mm, m, c, 0.7) == Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("concavity check") {
  Rng rng(2);
  const auto mm = random_soft(rng, 6);
  CHECK(slp_check_concave(mm, RVec::Ones(6), RVec::Constant(6, 5.0)));
  FoldbackModel fb;
  CHECK_FALSE(slp_check_concave(fb, RVec::Ones(2), RVec::Constant(2, 3.0)));
  SlpOptions strict;
  CHECK_THROWS_AS(slp_solve(fb, RVec::Ones(2), 1.0, RVec::Constant(2, 3.0), strict), DomainError);
  SlpOptions lax;
  lax.strict_concavity = false;
  const auto r = slp_solve(fb, RVec::Ones(2), 1.0, RVec::Constant(2, 3.0), lax);
  CHECK_FALSE(r.concave);
  CHECK(r.c.cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("identical hardware gives equal coefficients at full power") {
  const int M = 8;
  const SoftModel mm(CVec::Constant(M, cplx(0.8, 0.3)), RVec::Constant(M, 1.0));
  const RVec sx = RVec::Constant(M, 0.25);
  const auto r = slp_solve(mm, sx, 2.0, RVec::Constant(M, 100.0));
  REQUIRE(r.converged);
  for (int m = 1; m < M; ++m) CHECK(r.c(m).real() == Approx(r.c(0).real()).epsilon(1e-6));
  CHECK((r.c.cwiseAbs2().array() * sx.array().square()).sum() == Approx(2.0).epsilon(1e-6));
}

TEST_CASE("constant gains invert the amplitudes") {
  const int M = 5;
  CVec k(M);
  k << 1.0, 0.5, cplx(0, 2.0), 1.25, cplx(0.3, -0.4);
  const ConstModel mm(k);
  const RVec sx = RVec::Ones(M);
  const double rho = 3.0;
  const auto r = slp_solve(mm, sx, rho, RVec::Constant(M, 100.0));
  double s = 0.0;
  for (int m = 0; m < M; ++m) s += 1.0 / std::norm(k(m));
  const double g0 = std::sqrt(rho / s);
  CHECK(r.g0 == Approx(g0).epsilon(1e-5));
  for (int m = 0; m < M; ++m) CHECK(r.c(m).real() == Approx(g0 / std::abs(k(m))).epsilon(1e-5));

  // with a tight amplitude cap on the weakest antenna
  RVec cmax = RVec::Constant(M, 100.0);
  cmax(1) = 1.0;
  const auto rc = slp_solve(mm, sx, rho, cmax);
  CHECK(rc.c(1).real() <= 1.0 + 1e-9);
  CHECK(rc.g0 == Approx(0.5).epsilon(1e-5));
}

TEST_CASE("agrees with the bisection oracle") {
  for (int t = 0; t < 20; ++t) {
    Rng rng = Rng(3).split(t);
    const int M = 4 + t % 13;
    const auto mm = random_soft(rng, M);
    RVec sx(M), cmax(M);
    for (int m = 0; m < M; ++m) {
      sx(m) = rng.uniform(0.1, 0.4);
      cmax(m) = rng.uniform(2.0, 10.0);
    }
    const double rho = rng.uniform(0.1, 2.0);
    const auto r = slp_solve(mm, sx, rho, cmax);
    const double ref = slp_bisection_oracle(mm, sx, rho, cmax);
    CHECK(r.g0 == Approx(ref).epsilon(1e-4));

    // constraints at termination
    CHECK((r.c.cwiseAbs2().array() * sx.array().square()).sum() <= rho * (1 + 1e-9));
    for (int m = 0; m < M; ++m) {
      CHECK(r.c(m).real() <= cmax(m) * (1 + 1e-12));
      CHECK(r.c(m).real() > 0.0);
      CHECK(r.c(m).imag() == 0.0);
      CHECK(slp_phi(mm, m, r.c(m).real(), sx(m)) >= r.g0 * (1 - 1e-9));
    }
    // monotone progress
    for (size_t j = 1; j < r.min_phi.size(); ++j)
      CHECK(r.min_phi[j] >= r.min_phi[j - 1] - 1e-12 * std::abs(r.min_phi[j - 1]));
  }
}

TEST_CASE("phases") {
  const ConstModel mm(CVec::Constant(3, std::polar(2.0, kPi / 7)));
  const RVec ph = calibration_phases(mm, RVec::Ones(3), RVec::Ones(3));
  for (int m = 0; m < 3; ++m) CHECK(ph(m) == Approx(-kPi / 7).epsilon(1e-14));
  const ConstModel real(CVec::Constant(2, 0.5));
  CHECK(calibration_phases(real, RVec::Ones(2), RVec::Ones(2)).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(4);
  const auto soft = random_soft(rng, 6);
  const RVec ca = RVec::Constant(6, 1.3), sx = RVec::Constant(6, 0.4);
  const RVec p = calibration_phases(soft, ca, sx);
  for (int m = 0; m < 6; ++m) {
    const cplx v = std::polar(ca(m), p(m)) * soft.mu(m, ca(m) * sx(m));
    CHECK(std::abs(v.imag()) <= 1e-10 * std::abs(v));
    CHECK(v.real() > 0.0);
  }
}

TEST_CASE("input validation") {
  const ConstModel mm(CVec::Ones(3));
  CHECK_THROWS_AS(slp_solve(mm, RVec::Ones(2), 1.0, RVec::Ones(3)), DomainError);
  CHECK_THROWS_AS(slp_solve(mm, RVec::Ones(3), -1.0, RVec::Ones(3)), DomainError);
  CHECK_THROWS_AS(slp_solve(mm, RVec::Ones(3), 1.0, RVec::Zero(3)), DomainError);
}
