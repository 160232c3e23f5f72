// SPDX-License-Identifier: Apache-2.0
#include "recal/channel.hpp"

#include <cmath>

namespace recal {

void CellGeometry::validate() const {
  if (!(min_dist > 0.0 && min_dist < radius))
    throw DomainError("CellGeometry: need 0 < min_dist < radius");
  if (!(zeta > 0.0)) throw DomainError("CellGeometry: zeta must be positive");
  if (!(xi >= 0.0)) throw DomainError("CellGeometry: xi must be non-negative");
}

RVec draw_ue_pathloss(Rng& rng, int K, const CellGeometry& geom) {
  geom.validate();
  if (K < 1) throw DomainError("draw_ue_pathloss: K must be positive");
  RVec phi(K);
  const double r0 = geom.min_dist * geom.min_dist;
  const double r1 = geom.radius * geom.radius;
  for (int k = 0; k < K; ++k) {
    const double d = std::sqrt(r0 + (r1 - r0) * rng.uniform());
    phi(k) = geom.pathloss(d);
  }
  return phi;
}

ChannelRealization draw_channel(Rng& rng, int M, const RVec& phi) {
  if (M < 1 || phi.size() < 1) throw DomainError("draw_channel: empty dimensions");
  const int K = static_cast<int>(phi.size());
  ChannelRealization ch;
  ch.phi = phi;
  ch.h.resize(K, M);
  for (int k = 0; k < K; ++k) {
    if (!(phi(k) > 0.0)) throw DomainError("draw_channel: phi entries must be positive");
    const double s = std::sqrt(phi(k));
    for (int m = 0; m < M; ++m) ch.h(k, m) = s * rng.complex_normal();
  }
  return ch;
}

CMat uplink_channel(const ChannelRealization& ch, const SystemHardware& hw) {
  if (ch.h.cols() != hw.M() || ch.h.rows() != hw.K())
    throw DomainError("uplink_channel: dimension mismatch");
  return hw.bs_rx.asDiagonal() * ch.h.transpose() * hw.ue_tx_gain.asDiagonal();
}

}  // namespace recal
