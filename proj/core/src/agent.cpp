#include "cyclerl/agent.hpp"

#include <algorithm>
#include <cmath>

#include "cyclerl/errors.hpp"

namespace cyclerl {

std::string to_string(TdLossKind kind) { return kind == TdLossKind::mse ? "mse" : "huber"; }

std::string to_string(QregReduction reduction) {
  return reduction == QregReduction::full_vector ? "full_vector" : "taken_action";
}

std::string to_string(WeightRegKind kind) {
  switch (kind) {
    case WeightRegKind::none: return "none";
    case WeightRegKind::l2: return "l2";
    case WeightRegKind::ewc: return "ewc";
  }
  return "none";
}

TdLossKind parse_td_loss(const std::string& name) {
  if (name == "mse") return TdLossKind::mse;
  if (name == "huber") return TdLossKind::huber;
  throw ConfigError("unknown td_loss '" + name + "' (expected mse or huber)");
}

QregReduction parse_qreg_reduction(const std::string& name) {
  if (name == "full_vector") return QregReduction::full_vector;
  if (name == "taken_action") return QregReduction::taken_action;
  throw ConfigError("unknown Qreg reduction '" + name + "' (expected full_vector or taken_action)");
}

WeightRegKind parse_weight_reg(const std::string& name) {
  if (name == "none") return WeightRegKind::none;
  if (name == "l2") return WeightRegKind::l2;
  if (name == "ewc") return WeightRegKind::ewc;
  throw ConfigError("unknown weight_reg kind '" + name + "' (expected none, l2 or ewc)");
}

void AgentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(gamma >= 0.0 && gamma <= 1.0, "agent.gamma must lie in [0, 1]");
  require(epsilon >= 0.0 && epsilon <= 1.0, "agent.epsilon must lie in [0, 1]");
  require(f_train >= 1, "agent.F_Train must be at least 1");
  require(f_tnu >= 1, "agent.F_TNU must be at least 1");
  require(batch_size >= 1, "agent.N_BS must be at least 1");
  require(n_rb >= 1, "agent.N_RB must be at least 1");
  require(reward_clip > 0.0, "agent.reward_clip must be positive");
  require(huber_delta > 0.0, "agent.huber_delta must be positive");
  require(adam.learning_rate >= 0.0, "agent.learning_rate must be non-negative");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0, "agent.adam_beta1 must lie in [0, 1)");
  require(adam.beta2 >= 0.0 && adam.beta2 < 1.0, "agent.adam_beta2 must lie in [0, 1)");
  require(adam.epsilon > 0.0, "agent.adam_epsilon must be positive");
  for (auto h : hidden) require(h >= 1, "agent.hidden sizes must be at least 1");
  if (qreg.enabled) {
    require(qreg.lambda >= 0.0, "agent.qreg.lambda must be non-negative");
    require(qreg.n_rbs >= 1, "agent.qreg.N_RBS must be at least 1");
    require(qreg.f_raf >= 1, "agent.qreg.F_RAF must be at least 1");
    require(qreg.f_ruf >= 1, "agent.qreg.F_RUF must be at least 1");
    require(qreg.n_rass >= 1, "agent.qreg.N_RASS must be at least 1");
    require(qreg.n_rah >= 1, "agent.qreg.N_RAH must be at least 1");
    require(qreg.n_rrb >= 1, "agent.qreg.N_RRB must be at least 1");
    require(!qreg.no_wait || qreg.live, "agent.qreg.no_wait requires live rehearsal sampling");
  }
  require(weight_reg.coefficient >= 0.0, "agent.weight_reg.coef must be non-negative");
  if (weight_reg.kind == WeightRegKind::ewc) {
    require(weight_reg.fisher_samples >= 1, "agent.weight_reg.fisher_samples must be at least 1");
  }
}

int greedy_action(std::span<const double> q_values) {
  int best = 0;
  for (std::size_t a = 1; a < q_values.size(); ++a)
    if (q_values[a] > q_values[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
  return best;
}

int select_action(const MlpNetwork& net, std::span<const double> observation, double epsilon, Rng& rng) {
  if (epsilon > 0.0 && uniform01(rng) < epsilon) {
    return static_cast<int>(uniform_index(rng, net.output_dim()));
  }
  const auto q = net.q_values(observation);
  return greedy_action(q);
}

namespace {

Tensor batch_of(std::span<const Transition* const> batch, bool next) {
  std::vector<Observation> rows;
  rows.reserve(batch.size());
  for (const auto* t : batch) rows.push_back(next ? t->next_state : t->state);
  return stack_rows(rows);
}

}  // namespace

std::vector<double> td_targets(std::span<const Transition* const> batch, const MlpNetwork& online,
                               const MlpNetwork& target, double gamma, bool double_q) {
  std::vector<double> y(batch.size());
  if (batch.empty()) return y;
  const Tensor next = batch_of(batch, true);
  const Tensor q_target = target.forward(next);
  Tensor q_online;
  if (double_q) q_online = online.forward(next);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    if (t.done) {
      y[i] = t.reward;
      continue;
    }
    const auto row = q_target.row(i);
    const int a_star = double_q ? greedy_action(q_online.row(i)) : greedy_action(row);
    y[i] = t.reward + gamma * row[static_cast<std::size_t>(a_star)];
  }
  return y;
}

LossGrad td_loss(const MlpNetwork& net, std::span<const Transition* const> batch, std::span<const double> targets,
                 TdLossKind kind, double huber_delta) {
  LossGrad out{0.0, net.zero_gradients()};
  if (batch.empty()) return out;
  if (targets.size() != batch.size()) throw DimensionError("td_loss: targets and batch differ in length");
  ForwardCache cache;
  const Tensor q = net.forward(batch_of(batch, false), cache);
  Tensor grad = Tensor::matrix(q.rows(), q.cols());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto a = static_cast<std::size_t>(batch[i]->action);
    if (a >= q.cols()) throw DimensionError("td_loss: action index out of range");
    const double d = q(i, a) - targets[i];
    if (kind == TdLossKind::mse) {
      out.loss += d * d * inv_b;
      grad(i, a) = 2.0 * d * inv_b;
    } else if (std::abs(d) <= huber_delta) {
      out.loss += 0.5 * d * d * inv_b;
      grad(i, a) = d * inv_b;
    } else {
      out.loss += huber_delta * (std::abs(d) - 0.5 * huber_delta) * inv_b;
      grad(i, a) = (d > 0 ? huber_delta : -huber_delta) * inv_b;
    }
  }
  out.grads = net.backward(cache, grad);
  return out;
}

LossGrad qreg_loss(const MlpNetwork& net, std::span<const RehearsalEntry* const> entries, double lambda,
                   QregReduction reduction) {
  LossGrad out{0.0, net.zero_gradients()};
  if (entries.empty()) return out;
  const std::size_t actions = net.output_dim();
  std::vector<Observation> states;
  states.reserve(entries.size());
  for (const auto* e : entries) {
    if (e->q_values.size() != actions) {
      throw DimensionError("rehearsal entry holds " + std::to_string(e->q_values.size()) +
                           " Q-values, network has " + std::to_string(actions) + " actions");
    }
    states.push_back(e->state);
  }
  ForwardCache cache;
  const Tensor q = net.forward(stack_rows(states), cache);
  Tensor grad = Tensor::matrix(q.rows(), q.cols());
  const double scale = lambda / static_cast<double>(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& stored = entries[i]->q_values;
    if (reduction == QregReduction::full_vector) {
      const double w = scale / static_cast<double>(actions);
      for (std::size_t a = 0; a < actions; ++a) {
        const double d = q(i, a) - stored[a];
        out.loss += w * d * d;
        grad(i, a) = 2.0 * w * d;
      }
    } else {
      const auto a = static_cast<std::size_t>(greedy_action(stored));
      const double d = q(i, a) - stored[a];
      out.loss += scale * d * d;
      grad(i, a) = 2.0 * scale * d;
    }
  }
  out.grads = net.backward(cache, grad);
  return out;
}

LossGrad weight_penalty(const MlpNetwork& net, const WeightRegConfig& reg, const FisherState* anchor) {
  LossGrad out{0.0, net.zero_gradients()};
  if (reg.kind == WeightRegKind::none || anchor == nullptr || anchor->anchor.empty()) return out;
  const auto params = net.parameters();
  if (anchor->anchor.size() != params.size()) throw DimensionError("weight anchor does not match the network");
  const bool ewc = reg.kind == WeightRegKind::ewc;
  if (ewc && anchor->fisher.size() != params.size()) throw DimensionError("Fisher estimate does not match the network");
  // L2 constrains the encoder only; the linear Q head stays free.
  const std::size_t limit = ewc ? params.size() : 2 * net.encoder_layer_count();
  const double c = reg.coefficient;
  for (std::size_t p = 0; p < limit; ++p) {
    const auto theta = params[p]->data();
    const auto star = anchor->anchor[p].data();
    auto g = out.grads.tensors[p].data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double d = theta[k] - star[k];
      const double f = ewc ? anchor->fisher[p][k] : 1.0;
      out.loss += 0.5 * c * f * d * d;
      g[k] = c * f * d;
    }
  }
  return out;
}

std::vector<Tensor> fisher_from_gradients(std::span<const GradientSet> per_sample) {
  if (per_sample.empty()) throw StateError("Fisher estimate needs at least one gradient sample");
  std::vector<Tensor> fisher;
  for (const auto& t : per_sample.front().tensors) fisher.emplace_back(t.shape(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(per_sample.size());
  for (const auto& g : per_sample) {
    for (std::size_t p = 0; p < fisher.size(); ++p) {
      auto dst = fisher[p].data();
      auto src = g.tensors[p].data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k] * src[k] * inv_n;
    }
  }
  return fisher;
}

FisherState estimate_fisher(const MlpNetwork& net, const RingBuffer& buffer, std::size_t n_samples, Rng& rng) {
  if (buffer.empty()) throw StateError("cannot estimate Fisher information from an empty buffer");
  const auto sample = buffer.sample_batch(n_samples, rng);
  std::vector<GradientSet> grads;
  grads.reserve(sample.size());
  for (const auto* t : sample) {
    ForwardCache cache;
    const Tensor in({1, t->state.size()}, t->state);
    const Tensor q = net.forward(in, cache);
    Tensor seed = Tensor::matrix(1, q.cols());
    seed(0, static_cast<std::size_t>(t->action)) = 1.0;
    grads.push_back(net.backward(cache, seed));
  }
  FisherState state;
  state.fisher = fisher_from_gradients(grads);
  for (const Tensor* p : net.parameters()) state.anchor.push_back(*p);
  return state;
}

DqnAgent::DqnAgent(AgentConfig config, std::size_t observation_size, int action_count, Rng& init_rng)
    : config_(std::move(config)) {
  config_.validate();
  online_ = MlpNetwork::create(observation_size, config_.hidden, static_cast<std::size_t>(action_count), init_rng);
  target_ = copy_parameters(online_);
  adam_ = AdamState(online_, config_.adam);
}

QFunction DqnAgent::q_function() const {
  return [this](const Tensor& states) { return online_.forward(states); };
}

TrainBatch DqnAgent::sample_batch(const RingBuffer& buffer, const RehearsalBuffer* rrb, Rng& rng) const {
  TrainBatch batch;
  batch.transitions = buffer.sample_batch(config_.batch_size, rng);
  batch.targets = td_targets(batch.transitions, online_, target_, config_.gamma, config_.double_q);
  if (rrb != nullptr) batch.rehearsal = rrb_sample(*rrb, config_.qreg.n_rbs, rng);
  return batch;
}

LossBreakdown DqnAgent::evaluate_loss(const MlpNetwork& net, const TrainBatch& batch) const {
  LossBreakdown out;
  LossGrad td = td_loss(net, batch.transitions, batch.targets, config_.td_loss, config_.huber_delta);
  out.td = td.loss;
  out.grads = std::move(td.grads);
  if (!batch.rehearsal.empty()) {
    LossGrad reg = qreg_loss(net, batch.rehearsal, config_.qreg.lambda, config_.qreg.reduction);
    out.qreg = reg.loss;
    out.grads.add_scaled(reg.grads, 1.0);
  }
  if (config_.weight_reg.kind != WeightRegKind::none && anchor_) {
    LossGrad pen = weight_penalty(net, config_.weight_reg, &*anchor_);
    out.penalty = pen.loss;
    out.grads.add_scaled(pen.grads, 1.0);
  }
  return out;
}

StepReport DqnAgent::train_step(const RingBuffer& buffer, const RehearsalBuffer* rrb, Rng& rng) {
  StepReport report;
  if (buffer.size() < config_.batch_size) return report;
  const TrainBatch batch = sample_batch(buffer, rrb, rng);
  LossBreakdown loss = evaluate_loss(online_, batch);
  if (!std::isfinite(loss.total())) {
    throw NumericError("non-finite loss (td " + std::to_string(loss.td) + ", qreg " + std::to_string(loss.qreg) +
                       ", penalty " + std::to_string(loss.penalty) + ")");
  }
  adam_step(adam_, online_, loss.grads);
  report.performed = true;
  report.td_loss = loss.td;
  report.qreg_loss = loss.qreg;
  report.penalty = loss.penalty;
  report.grad_norm = loss.grads.norm();
  report.rehearsal_batch = batch.rehearsal.size();
  return report;
}

void DqnAgent::on_task_boundary(const RingBuffer& buffer, Rng& rng) {
  const auto& reg = config_.weight_reg;
  if (reg.kind == WeightRegKind::none) return;
  FisherState state;
  if (reg.kind == WeightRegKind::ewc) {
    if (buffer.empty()) return;
    state = estimate_fisher(online_, buffer, reg.fisher_samples, rng);
  } else {
    for (const Tensor* p : online_.parameters()) state.anchor.push_back(*p);
  }
  state.coefficient = reg.coefficient;
  anchor_ = std::move(state);
}

}  // namespace cyclerl
