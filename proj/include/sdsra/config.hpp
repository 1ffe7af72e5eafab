#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sdsra/agent.hpp"

namespace sdsra {

/// Everything a `train` run needs: agent hyperparameters plus orchestration.
struct RunConfig {
  AgentConfig agent;
  std::string env = "pendulum";
  std::string name = "run";
  std::size_t total_steps = 30'000;
  std::size_t eval_interval = 1000;
  std::size_t eval_episodes = 5;
  std::size_t log_interval = 1000;
  std::string output_dir = "runs";
  std::vector<std::uint64_t> seeds{1};
  /// Return level used by `compare` for steps-to-threshold.
  double threshold = -400.0;
  /// Moving-average window, in evaluation points, for steps-to-threshold.
  std::size_t threshold_window = 3;

  bool operator==(const RunConfig& other) const;
};

struct ParsedConfig {
  RunConfig config;
  /// One entry per key that was absent and took its default, e.g. "alpha = 0.2".
  std::vector<std::string> applied_defaults;
};

/// Parses `key = value` lines; `#` starts a comment. Throws ConfigError with
/// the offending line on unknown keys, unparsable or out-of-range values.
ParsedConfig parse_config(std::string_view text);
ParsedConfig load_config_file(const std::filesystem::path& path);

/// Renders every key; parse_config(render_config(c)).config == c.
std::string render_config(const RunConfig& config);

std::string_view mode_name(Mode mode);

}  // namespace sdsra
