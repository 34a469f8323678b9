#pragma once

// Reproducible experiment runner: JSON configs in, CSV artifacts plus a
// metadata document out. Scenario names mirror the standard central-spin
// experiments (spectrum histogram, correlation decay, rate consistency,
// hierarchy comparison, stationary states, mutual information, exact
// validation).

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace finitebath {

// Thrown for malformed or inconsistent configs (CLI exit code 2);
// numerical failures surface as std::runtime_error and friends (exit 3).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RunOptions {
  std::string output_dir;            // overrides config output_dir if set
  std::optional<std::uint64_t> seed_override;
  int threads = 1;
};

// Parses, validates and executes one scenario; returns the metadata
// document that was written to <output_dir>/metadata.json.
nlohmann::json run_scenario(const nlohmann::json& config,
                            const RunOptions& options = {});

nlohmann::json load_config_file(const std::string& path);

}  // namespace finitebath
