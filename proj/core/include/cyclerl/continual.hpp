#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cyclerl/agent.hpp"
#include "cyclerl/envs.hpp"
#include "cyclerl/replay.hpp"

namespace cyclerl {

struct Phase {
  int cycle = 1;  // 1-based
  int task = 1;   // 1-based
  bool operator==(const Phase&) const = default;
};

struct ScheduleConfig {
  int n_tasks = 2;                     // N
  int cycles = 2;                      // C
  std::uint64_t steps_per_task = 20000;  // T_steps
  std::uint64_t eval_period = 2000;
  int eval_episodes = 5;
  double eval_epsilon = 0.0;
  bool operator==(const ScheduleConfig&) const = default;
};

/// Cycle-major task order: (1,1), (1,2), ..., (1,N), (2,1), ...
struct SchedulePlan {
  ScheduleConfig config;
  std::vector<Phase> phases;

  [[nodiscard]] std::uint64_t total_steps() const { return phases.size() * config.steps_per_task; }
  [[nodiscard]] std::uint64_t evals_per_phase() const { return config.steps_per_task / config.eval_period; }
  [[nodiscard]] std::size_t phase_index(Phase p) const {
    return static_cast<std::size_t>((p.cycle - 1) * config.n_tasks + (p.task - 1));
  }
};

SchedulePlan build_schedule(const ScheduleConfig& config);
SchedulePlan build_schedule(int n_tasks, int cycles, std::uint64_t steps_per_task, std::uint64_t eval_period);

/// Everything one seed's run needs.
struct RunConfig {
  EnvSuiteConfig env;
  ScheduleConfig schedule;
  AgentConfig agent;
  std::size_t probe_size = 256;
  bool evaluation = true;  // off only in tests comparing training trajectories
  bool operator==(const RunConfig&) const = default;
};

struct EvalRecord {
  int eval_task = 1;
  double mean_return = 0.0;
  std::vector<double> episode_returns;
};

/// All evaluation tasks measured at one global step. phase_index is -1 for
/// the pre-training evaluation at step 0.
struct EvalPoint {
  std::uint64_t global_step = 0;
  int phase_index = -1;
  int cycle = 0;
  int task = 0;
  bool terminal = false;  // last evaluation of its phase (R^end)
  double q_norm = 0.0;
  std::vector<EvalRecord> tasks;
};

/// Training statistics accumulated between evaluations.
struct LossSummary {
  std::uint64_t global_step = 0;
  std::uint64_t train_steps = 0;
  std::uint64_t qreg_steps = 0;  // updates with a nonzero rehearsal batch
  double mean_td_loss = 0.0;
  double mean_qreg_loss = 0.0;
  double mean_penalty = 0.0;
  double mean_grad_norm = 0.0;
  double max_grad_norm = 0.0;
  std::uint64_t episodes = 0;
  double mean_episode_return = 0.0;
};

struct RunLog {
  std::uint64_t seed = 0;
  std::vector<EvalPoint> evals;
  std::vector<LossSummary> losses;
  std::vector<std::string> warnings;
  std::optional<std::uint64_t> first_qreg_step;
  std::optional<std::string> abort_reason;
  std::uint64_t rrb_entries_added = 0;
  nlohmann::json config;  // resolved config snapshot, filled by the caller

  [[nodiscard]] bool complete(const SchedulePlan& plan) const;
};

nlohmann::json to_json(const RunLog& log);
RunLog runlog_from_json(const nlohmann::json& j);

/// Greedy (or eval_epsilon) rollouts on fresh environments seeded from
/// `seed`; never touches training state.
EvalRecord evaluate(const MlpNetwork& net, const TaskSpec& spec, int frame_skip, int frame_stack, int episodes,
                    std::uint64_t seed, double epsilon = 0.0);

/// Mean L2 norm of the Q-vector over the probe states; 0 for an empty set.
double q_norm_probe(const MlpNetwork& net, const std::vector<Observation>& probe_states);

/// Mutable state carried across every phase of a run. Nothing here is reset
/// at task or cycle boundaries.
struct TrainerState {
  std::uint64_t global_step = 0;
  std::size_t next_phase = 0;
  Rng rng;
  DqnAgent agent;
  RingBuffer buffer{1};
  RehearsalBuffer rrb{1};
  std::vector<Observation> probe_states;
  RunLog log;
};

struct TrainEvent {
  std::uint64_t global_step = 0;
  Phase phase;
  bool qreg_active = false;
  StepReport report;
};

struct RrbEvent {
  enum class Kind { update, add };
  Kind kind = Kind::add;
  std::uint64_t global_step = 0;
  int task_id = 1;
  std::size_t count = 0;
};

/// Optional instrumentation hooks; default implementations do nothing.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_train_step(const TrainEvent&, const TrainerState&) {}
  virtual void on_rrb_event(const RrbEvent&, const TrainerState&) {}
  virtual void on_target_sync(std::uint64_t /*global_step*/, const TrainerState&) {}
  virtual void on_phase_end(std::size_t /*phase_index*/, const TrainerState&) {}
  virtual void on_phase_start(std::size_t /*phase_index*/, const TrainerState&) {}
};

/// Runs the multi-cyclic training loop for one seed. Within each global step
/// the order is: act, store, target sync, RRB update, RRB add, train, evaluate.
class ContinualTrainer {
 public:
  ContinualTrainer(RunConfig config, std::uint64_t seed);

  [[nodiscard]] const RunConfig& config() const noexcept { return config_; }
  [[nodiscard]] const SchedulePlan& plan() const noexcept { return plan_; }
  [[nodiscard]] const TrainerState& state() const noexcept { return state_; }
  [[nodiscard]] TrainerState& state() noexcept { return state_; }
  [[nodiscard]] bool finished() const noexcept {
    return state_.next_phase >= plan_.phases.size() || state_.log.abort_reason.has_value();
  }

  /// Runs the next phase. Returns false once the run is finished.
  bool run_phase(RunObserver* observer = nullptr);
  RunLog run(RunObserver* observer = nullptr);

  [[nodiscard]] TaskSpec task_spec(int task) const;
  [[nodiscard]] bool qreg_active(Phase phase) const;

  void save_checkpoint(const std::string& path) const;
  static ContinualTrainer load_checkpoint(const std::string& path, RunConfig config);

 private:
  void initialise();
  void evaluate_point(std::size_t phase_index, std::uint64_t eval_index, bool terminal);
  void flush_losses();

  RunConfig config_;
  SchedulePlan plan_;
  std::uint64_t seed_ = 0;
  TrainerState state_;

  // Loss accumulators for the current evaluation window.
  LossSummary window_;
  double episode_return_ = 0.0;
};

RunLog run_experiment(const RunConfig& config, std::uint64_t seed, RunObserver* observer = nullptr);

}  // namespace cyclerl
