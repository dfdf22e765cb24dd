#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "zenosde/simulate.hpp"
#include "zenosde/system.hpp"

namespace zenosde {

/// Everything a run needs besides the seed and the command parameters.
struct RunConfig {
  std::string name;
  SystemSpec system;
  IntegratorConfig integrator;
  double horizon = 1.0;
};

/// Parses the JSON config format. Unknown keys are rejected; every object
/// may carry free-text "source" and "comment" strings. Errors are
/// ConfigInvalid and name the offending field (or line and column for
/// syntax errors).
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_text(std::string_view text);
RunConfig load_config_file(const std::filesystem::path& path);

/// Resolved form: all defaults written out, no annotations.
nlohmann::json config_to_json(const RunConfig& cfg);

std::vector<std::string> preset_names();
/// Annotated preset (each number-bearing block says where it comes from).
nlohmann::json preset_json(std::string_view name);
RunConfig preset(std::string_view name);

}  // namespace zenosde
