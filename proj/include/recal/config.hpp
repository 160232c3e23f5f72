// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "recal/experiment.hpp"

namespace recal {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

nlohmann::json load_json_file(const std::string& path);

// "a.b.c=value"; value is parsed as JSON when possible, else kept as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

ExperimentConfig config_from_json(const nlohmann::json& j);

void apply_paper_scale(ExperimentConfig& cfg);

}  // namespace recal
