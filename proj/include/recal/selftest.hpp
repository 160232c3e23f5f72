// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace recal {

struct SelftestResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Fast oracle checks against frozen high-precision references.
std::vector<SelftestResult> run_selftest();

}  // namespace recal
