#include "cyclerl/continual.hpp"
#include "cyclerl/errors.hpp"

namespace cyclerl {

SchedulePlan build_schedule(const ScheduleConfig& config) {
  if (config.n_tasks < 1) throw ConfigError("schedule.N must be at least 1");
  if (config.cycles < 1) throw ConfigError("schedule.C must be at least 1");
  if (config.steps_per_task < 1) throw ConfigError("schedule.T_steps must be at least 1");
  if (config.eval_period < 1) throw ConfigError("schedule.eval_period must be at least 1");
  if (config.steps_per_task % config.eval_period != 0) {
    throw ConfigError("schedule.eval_period (" + std::to_string(config.eval_period) + ") must divide T_steps (" +
                      std::to_string(config.steps_per_task) + ")");
  }
  if (config.eval_episodes < 1) throw ConfigError("schedule.eval_episodes must be at least 1");
  if (config.eval_epsilon < 0.0 || config.eval_epsilon > 1.0) {
    throw ConfigError("schedule.eval_epsilon must lie in [0, 1]");
  }
  SchedulePlan plan{config, {}};
  for (int c = 1; c <= config.cycles; ++c)
    for (int j = 1; j <= config.n_tasks; ++j) plan.phases.push_back({c, j});
  return plan;
}

SchedulePlan build_schedule(int n_tasks, int cycles, std::uint64_t steps_per_task, std::uint64_t eval_period) {
  ScheduleConfig cfg;
  cfg.n_tasks = n_tasks;
  cfg.cycles = cycles;
  cfg.steps_per_task = steps_per_task;
  cfg.eval_period = eval_period;
  return build_schedule(cfg);
}

bool RunLog::complete(const SchedulePlan& plan) const {
  if (abort_reason) return false;
  std::size_t terminal = 0;
  for (const auto& e : evals)
    if (e.terminal) ++terminal;
  return terminal == plan.phases.size();
}

}  // namespace cyclerl
