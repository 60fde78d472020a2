#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyclerl/adam.hpp"
#include "cyclerl/mlp.hpp"
#include "cyclerl/replay.hpp"

namespace cyclerl {

enum class TdLossKind { mse, huber };
enum class QregReduction { full_vector, taken_action };
enum class WeightRegKind { none, l2, ewc };

std::string to_string(TdLossKind kind);
std::string to_string(QregReduction reduction);
std::string to_string(WeightRegKind kind);
TdLossKind parse_td_loss(const std::string& name);
QregReduction parse_qreg_reduction(const std::string& name);
WeightRegKind parse_weight_reg(const std::string& name);

/// Q-value regularization with rehearsal. `live`, `updates` and `no_wait`
/// select the L, U and NW strategies; the frequencies are in global steps.
struct QregConfig {
  bool enabled = false;
  double lambda = 1.0;
  std::size_t n_rbs = 256;
  bool live = false;
  bool updates = false;
  bool no_wait = false;
  std::uint64_t f_raf = 1;
  std::uint64_t f_ruf = 1;
  std::size_t n_rass = 64;
  std::size_t n_rah = 2000;
  std::size_t n_rrb = 100000;
  QregReduction reduction = QregReduction::full_vector;
  bool operator==(const QregConfig&) const = default;
};

struct WeightRegConfig {
  WeightRegKind kind = WeightRegKind::none;
  double coefficient = 0.0;
  std::size_t fisher_samples = 1000;
  bool operator==(const WeightRegConfig&) const = default;
};

struct AgentConfig {
  double gamma = 0.99;
  double epsilon = 0.05;
  std::uint64_t f_train = 4;
  std::uint64_t f_tnu = 10000;
  std::size_t batch_size = 32;
  std::size_t n_rb = 50000;
  bool double_q = false;
  TdLossKind td_loss = TdLossKind::mse;
  double huber_delta = 1.0;
  double reward_clip = 1.0;
  AdamOptions adam;
  std::vector<std::size_t> hidden{64, 64};
  QregConfig qreg;
  WeightRegConfig weight_reg;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
  bool operator==(const AgentConfig&) const = default;
};

struct LossGrad {
  double loss = 0.0;
  GradientSet grads;
};

/// Index of the largest Q-value; ties go to the lowest index.
int greedy_action(std::span<const double> q_values);

/// Epsilon-greedy. Draws from `rng` only when epsilon > 0.
int select_action(const MlpNetwork& net, std::span<const double> observation, double epsilon, Rng& rng);

/// r for terminal transitions, otherwise r + gamma * Q_target(s', a*) with
/// a* = argmax Q_target (DQN) or argmax Q_online (double DQN).
std::vector<double> td_targets(std::span<const Transition* const> batch, const MlpNetwork& online,
                               const MlpNetwork& target, double gamma, bool double_q);

LossGrad td_loss(const MlpNetwork& net, std::span<const Transition* const> batch, std::span<const double> targets,
                 TdLossKind kind, double huber_delta = 1.0);

/// lambda/|B| * sum_i mean_a (Q(s_i, a) - Q_RRB,i,a)^2 for full_vector, or the
/// stored-argmax component only for taken_action. Empty input gives zero.
LossGrad qreg_loss(const MlpNetwork& net, std::span<const RehearsalEntry* const> entries, double lambda,
                   QregReduction reduction);

/// Anchor parameters theta* plus, for EWC, the diagonal Fisher estimate.
struct FisherState {
  std::vector<Tensor> anchor;
  std::vector<Tensor> fisher;  // empty for L2
  double coefficient = 0.0;
  bool operator==(const FisherState&) const = default;
};

/// L2: (c/2) sum_encoder (theta - theta*)^2. EWC: (c/2) sum F (theta - theta*)^2.
/// Without an anchor the penalty is zero.
LossGrad weight_penalty(const MlpNetwork& net, const WeightRegConfig& reg, const FisherState* anchor);

/// Mean of element-wise squared gradients.
std::vector<Tensor> fisher_from_gradients(std::span<const GradientSet> per_sample);

/// Squared-gradient Fisher proxy of the taken-action Q over `n_samples`
/// transitions drawn from `buffer`. The anchor is the current parameters.
FisherState estimate_fisher(const MlpNetwork& net, const RingBuffer& buffer, std::size_t n_samples, Rng& rng);

/// Fixed inputs of one update, so the loss can be re-evaluated at perturbed
/// parameters.
struct TrainBatch {
  std::vector<const Transition*> transitions;
  std::vector<double> targets;
  std::vector<const RehearsalEntry*> rehearsal;
};

struct LossBreakdown {
  double td = 0.0;
  double qreg = 0.0;
  double penalty = 0.0;
  GradientSet grads;
  [[nodiscard]] double total() const { return td + qreg + penalty; }
};

struct StepReport {
  bool performed = false;
  double td_loss = 0.0;
  double qreg_loss = 0.0;
  double penalty = 0.0;
  double grad_norm = 0.0;
  std::size_t rehearsal_batch = 0;
};

/// Online/target networks, optimizer and regularization anchor of one run.
class DqnAgent {
 public:
  DqnAgent() = default;
  DqnAgent(AgentConfig config, std::size_t observation_size, int action_count, Rng& init_rng);

  [[nodiscard]] const AgentConfig& config() const noexcept { return config_; }
  [[nodiscard]] MlpNetwork& online() noexcept { return online_; }
  [[nodiscard]] const MlpNetwork& online() const noexcept { return online_; }
  [[nodiscard]] MlpNetwork& target() noexcept { return target_; }
  [[nodiscard]] const MlpNetwork& target() const noexcept { return target_; }
  [[nodiscard]] AdamState& optimizer() noexcept { return adam_; }
  [[nodiscard]] const AdamState& optimizer() const noexcept { return adam_; }
  [[nodiscard]] const std::optional<FisherState>& anchor() const noexcept { return anchor_; }
  void set_anchor(std::optional<FisherState> anchor) { anchor_ = std::move(anchor); }

  void sync_target() { target_ = copy_parameters(online_); }
  [[nodiscard]] int act(std::span<const double> observation, double epsilon, Rng& rng) const {
    return select_action(online_, observation, epsilon, rng);
  }
  [[nodiscard]] QFunction q_function() const;

  /// Samples the TD batch and, when `rrb` is given and nonempty, the rehearsal
  /// batch, then computes targets.
  TrainBatch sample_batch(const RingBuffer& buffer, const RehearsalBuffer* rrb, Rng& rng) const;

  /// TD + Qreg + weight penalty at parameters `net` for a fixed batch.
  [[nodiscard]] LossBreakdown evaluate_loss(const MlpNetwork& net, const TrainBatch& batch) const;

  /// One Adam step on the summed loss. Skipped (performed=false) until the
  /// buffer holds a full batch. Pass `rrb` only while Qreg is active.
  StepReport train_step(const RingBuffer& buffer, const RehearsalBuffer* rrb, Rng& rng);

  /// Re-anchors L2/EWC at a task boundary (EWC also re-estimates Fisher).
  void on_task_boundary(const RingBuffer& buffer, Rng& rng);

 private:
  AgentConfig config_;
  MlpNetwork online_;
  MlpNetwork target_;
  AdamState adam_;
  std::optional<FisherState> anchor_;
};

}  // namespace cyclerl
