#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cyclerl/continual.hpp"

namespace cyclerl {

enum class Variant { dqn, ddqn, pm, l2, ewc, qreg, qreg_u, qreg_l, qreg_lu, qreg_nwl, qreg_nwlu };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);
const std::vector<Variant>& all_variants();

/// Applies the variant's hyperparameter preset to `agent`. Only the fields the
/// variant owns are touched; schedule-relative values use `schedule`.
void apply_variant(Variant v, const ScheduleConfig& schedule, AgentConfig& agent);

/// Desk-scale defaults: short tasks and a replay buffer far smaller than a task.
RunConfig default_run_config();

struct ExperimentConfig {
  std::string name = "experiment";
  Variant variant = Variant::dqn;
  RunConfig run = default_run_config();
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "results";
  int threads = 1;
  /// Write a resumable snapshot after every phase into output_dir/checkpoints.
  bool checkpoints = false;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Builds a config from JSON. Order of precedence: built-in defaults, then the
/// variant preset, then any agent fields given explicitly. Unknown keys and
/// invalid values raise ConfigError naming the key path.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig parse_config(const std::string& path);

/// Canonical form listing every field. Parsing it back yields an equal config
/// with no preset applied twice, since explicit fields win over the preset.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Canonical JSON text: two-space indent, keys sorted, trailing newline.
std::string canonical_dump(const nlohmann::json& j);

}  // namespace cyclerl
