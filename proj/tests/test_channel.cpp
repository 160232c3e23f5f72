#include <doctest.h>

#include <cmath>

#include "recal/channel.hpp"
#include "recal/hardware.hpp"

using namespace recal;
using doctest::Approx;

TEST_CASE("path loss examples") {
  CellGeometry g;
  CHECK(g.pathloss(1.0) == Approx(0.01).epsilon(1e-15));
  CHECK(g.pathloss(0.01) == Approx(0.01 * std::pow(10.0, 7.4)).epsilon(1e-12));
  g.xi = 0.0;
  Rng rng(1);
  const RVec phi = draw_ue_pathloss(rng, 10, g);
  for (int k = 0; k < 10; ++k) CHECK(phi(k) == Approx(0.01).epsilon(1e-15));
}

TEST_CASE("UE placement is area-uniform") {
  CellGeometry g;
  g.zeta = 1.0;
  g.xi = 1.0;  // phi = 1/d
  Rng rng(8);
  const int n = 200000;
  const RVec phi = draw_ue_pathloss(rng, n, g);
  // P(d <= 0.5) = (0.25 - 1e-4) / (1 - 1e-4)
  int inner = 0;
  for (int i = 0; i < n; ++i) inner += (1.0 / phi(i)) <= 0.5;
  CHECK(double(inner) / n == Approx((0.25 - 1e-4) / (1 - 1e-4)).epsilon(0.02));
  for (int i = 0; i < n; ++i) {
    CHECK(1.0 / phi(i) >= 0.01 - 1e-15);
    CHECK(1.0 / phi(i) <= 1.0 + 1e-15);
  }
}

TEST_CASE("invalid geometry") {
  CellGeometry g;
  g.min_dist = 2.0;
  Rng rng(1);
  CHECK_THROWS_AS(draw_ue_pathloss(rng, 3, g), DomainError);
}

TEST_CASE("channel entries have the path-loss variance") {
  Rng rng(4);
  const RVec phi = RVec::Ones(10);
  double s = 0.0;
  long long n = 0;
  for (int j = 0; j < 1000; ++j) {
    const auto ch = draw_channel(rng, 100, phi);
    s += ch.h.squaredNorm();
    n += ch.h.size();
  }
  CHECK(s / n == Approx(1.0).epsilon(0.02));

  double s4 = 0.0;
  RVec four(1);
  four << 4.0;
  for (int j = 0; j < 20000; ++j) s4 += draw_channel(rng, 1, four).h.squaredNorm();
  CHECK(s4 / 20000 == Approx(4.0).epsilon(0.03));

  Rng a(5), b(5);
  CHECK(draw_channel(a, 8, phi).h == draw_channel(b, 8, phi).h);
}

TEST_CASE("uplink channel") {
  Rng rng(6);
  const int M = 12, K = 3;
  const auto ch = draw_channel(rng, M, RVec::Ones(K));
  auto hw = ideal_hardware(M, K, 1.0);
  CHECK(uplink_channel(ch, hw) == CMat(ch.h.transpose()));

  hw = draw_system_hardware(rng, M, K, RoleDistributions::common(0.1, 1.0), 1.0, 1.0, 0.3);
  const CMat ul = uplink_channel(ch, hw);
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k)
      CHECK(std::abs(ul(m, k) - hw.bs_rx(m) * ch.h(k, m) * hw.ue_tx_gain(k)) <= 1e-14);

  auto hw2 = hw;
  hw2.bs_rx(4) *= 2.0;
  const CMat ul2 = uplink_channel(ch, hw2);
  CHECK((ul2.row(4) - 2.0 * ul.row(4)).norm() <= 1e-14);
  CHECK((ul2.row(3) - ul.row(3)).norm() == 0.0);

  ChannelRealization bad = ch;
  bad.h = CMat::Zero(K, M + 1);
  CHECK_THROWS_AS(uplink_channel(bad, hw), DomainError);
}

TEST_CASE("diagonal dominance of the Gram inverse grows with M") {
  Rng rng(10);
  const int K = 8;
  double prev = 1e9;
  for (int M : {32, 128, 512}) {
    double acc = 0.0;
    for (int j = 0; j < 30; ++j) {
      const auto ch = draw_channel(rng, M, RVec::Ones(K));
      const CMat inv = (ch.h * ch.h.adjoint()).inverse();
      const CMat off = inv - CMat(inv.diagonal().asDiagonal());
      acc += off.norm() / inv.norm();
    }
    CHECK(acc < prev);
    prev = acc;
  }
}
