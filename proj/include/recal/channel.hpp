// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "recal/hardware.hpp"
#include "recal/rng.hpp"
#include "recal/types.hpp"

namespace recal {

struct ChannelRealization {
  CMat h;    // K x M, diag(sqrt(phi)) Hr
  RVec phi;  // large-scale gains
};

struct CellGeometry {
  double radius = 1.0;
  double min_dist = 0.01;
  double zeta = 0.01;  // -20 dB
  double xi = 3.7;

  void validate() const;
  double pathloss(double d) const { return zeta * std::pow(d, -xi); }
};

// Area-uniform UE placement on the annulus [min_dist, radius].
RVec draw_ue_pathloss(Rng& rng, int K, const CellGeometry& geom);

ChannelRealization draw_channel(Rng& rng, int M, const RVec& phi);

// R H^T B.
CMat uplink_channel(const ChannelRealization& ch, const SystemHardware& hw);

}  // namespace recal
