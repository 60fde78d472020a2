#include <algorithm>
#include <cmath>

#include "cyclerl/continual.hpp"
#include "cyclerl/errors.hpp"

namespace cyclerl {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kTrainEnvStream = 3;
constexpr std::uint64_t kEvalStream = 4;
constexpr std::uint64_t kProbeStream = 5;

}  // namespace

EvalRecord evaluate(const MlpNetwork& net, const TaskSpec& spec, int frame_skip, int frame_stack, int episodes,
                    std::uint64_t seed, double epsilon) {
  if (episodes < 1) throw ConfigError("evaluation needs at least one episode");
  EvalRecord rec;
  rec.eval_task = spec.task_index;
  for (int e = 0; e < episodes; ++e) {
    const auto ep = static_cast<std::uint64_t>(e);
    FrameWrapper env(make_env(spec, derive_seed({seed, ep})), frame_skip, frame_stack);
    Rng action_rng(derive_seed({seed, ep, 0xE95u}));
    Observation obs = env.reset();
    double total = 0.0;
    for (;;) {
      const StepResult r = env.step(select_action(net, obs, epsilon, action_rng));
      total += r.reward;
      if (r.done) break;
      obs = r.observation;
    }
    rec.episode_returns.push_back(total);
  }
  double sum = 0.0;
  for (double r : rec.episode_returns) sum += r;
  rec.mean_return = sum / static_cast<double>(rec.episode_returns.size());
  return rec;
}

double q_norm_probe(const MlpNetwork& net, const std::vector<Observation>& probe_states) {
  if (probe_states.empty()) return 0.0;
  const Tensor q = net.forward(stack_rows(probe_states));
  double acc = 0.0;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double sq = 0.0;
    for (double v : q.row(i)) sq += v * v;
    acc += std::sqrt(sq);
  }
  return acc / static_cast<double>(q.rows());
}

ContinualTrainer::ContinualTrainer(RunConfig config, std::uint64_t seed)
    : config_(std::move(config)), plan_(build_schedule(config_.schedule)), seed_(seed) {
  config_.agent.validate();
  if (config_.env.frame_skip < 1 || config_.env.frame_stack < 1) {
    throw ConfigError("env.frame_skip and env.frame_stack must be at least 1");
  }
  initialise();
}

TaskSpec ContinualTrainer::task_spec(int task) const {
  return make_task_spec(config_.env, task, config_.schedule.n_tasks);
}

bool ContinualTrainer::qreg_active(Phase phase) const {
  const auto& q = config_.agent.qreg;
  if (!q.enabled || state_.rrb.empty()) return false;
  if (q.no_wait) return true;
  return !(phase.cycle == 1 && phase.task == 1);
}

void ContinualTrainer::initialise() {
  const TaskSpec first = task_spec(1);
  for (int j = 1; j <= config_.schedule.n_tasks; ++j) {
    // Every task must share one observation layout so one network serves all.
    if (observation_size(task_spec(j)) != observation_size(first)) {
      throw ConfigError("tasks of one sequence must share an observation size");
    }
  }
  const std::size_t obs_size = observation_size(first) * static_cast<std::size_t>(config_.env.frame_stack);
  const int actions = action_count(first.family);

  state_.rng.seed(derive_seed({seed_, kTrainStream}));
  Rng init_rng(derive_seed({seed_, kInitStream}));
  state_.agent = DqnAgent(config_.agent, obs_size, actions, init_rng);
  state_.buffer = RingBuffer(config_.agent.n_rb);
  state_.rrb = RehearsalBuffer(config_.agent.qreg.enabled ? config_.agent.qreg.n_rrb : 1);
  state_.log.seed = seed_;

  // Fixed probe set for Q-norm tracking: random-policy states on task 1,
  // drawn from their own stream so training randomness is untouched.
  Rng probe_rng(derive_seed({seed_, kProbeStream}));
  std::uint64_t episode = 0;
  while (state_.probe_states.size() < config_.probe_size) {
    FrameWrapper env(make_env(first, derive_seed({seed_, kProbeStream, episode++})), config_.env.frame_skip,
                     config_.env.frame_stack);
    Observation obs = env.reset();
    while (state_.probe_states.size() < config_.probe_size) {
      state_.probe_states.push_back(obs);
      const StepResult r = env.step(static_cast<int>(uniform_index(probe_rng, static_cast<std::size_t>(actions))));
      if (r.done) break;
      obs = r.observation;
    }
  }
  if (state_.probe_states.empty()) state_.log.warnings.push_back("empty Q-norm probe set; q_norm reported as 0");

  evaluate_point(0, 0, false);
}

void ContinualTrainer::evaluate_point(std::size_t phase_index, std::uint64_t eval_index, bool terminal) {
  if (!config_.evaluation) return;
  EvalPoint point;
  point.global_step = state_.global_step;
  if (state_.global_step > 0) {
    const Phase ph = plan_.phases[phase_index];
    point.phase_index = static_cast<int>(phase_index);
    point.cycle = ph.cycle;
    point.task = ph.task;
  }
  point.terminal = terminal;
  point.q_norm = q_norm_probe(state_.agent.online(), state_.probe_states);
  if (!std::isfinite(point.q_norm)) throw NumericError("non-finite Q-norm probe");
  const std::uint64_t phase_tag = state_.global_step == 0 ? 0 : phase_index + 1;
  for (int i = 1; i <= config_.schedule.n_tasks; ++i) {
    const std::uint64_t eval_seed =
        derive_seed({seed_, kEvalStream, phase_tag, eval_index, static_cast<std::uint64_t>(i)});
    point.tasks.push_back(evaluate(state_.agent.online(), task_spec(i), config_.env.frame_skip,
                                   config_.env.frame_stack, config_.schedule.eval_episodes, eval_seed,
                                   config_.schedule.eval_epsilon));
  }
  state_.log.evals.push_back(std::move(point));
}

void ContinualTrainer::flush_losses() {
  window_.global_step = state_.global_step;
  if (window_.train_steps > 0) {
    const double n = static_cast<double>(window_.train_steps);
    window_.mean_td_loss /= n;
    window_.mean_qreg_loss /= n;
    window_.mean_penalty /= n;
    window_.mean_grad_norm /= n;
  }
  if (window_.episodes > 0) window_.mean_episode_return /= static_cast<double>(window_.episodes);
  state_.log.losses.push_back(window_);
  window_ = LossSummary{};
}

bool ContinualTrainer::run_phase(RunObserver* observer) {
  if (finished()) return false;
  const std::size_t phase_index = state_.next_phase;
  const Phase phase = plan_.phases[phase_index];
  const TaskSpec spec = task_spec(phase.task);
  const auto& agent_cfg = config_.agent;
  const auto& q = agent_cfg.qreg;

  if (observer) observer->on_phase_start(phase_index, state_);

  FrameWrapper env(make_env(spec, derive_seed({seed_, kTrainEnvStream, phase_index})), config_.env.frame_skip,
                   config_.env.frame_stack);
  Observation obs = env.reset();
  episode_return_ = 0.0;

  try {
    for (std::uint64_t t = 1; t <= config_.schedule.steps_per_task; ++t) {
      const std::uint64_t g = ++state_.global_step;
      auto& agent = state_.agent;

      const int action = agent.act(obs, agent_cfg.epsilon, state_.rng);
      StepResult res = env.step(action);
      episode_return_ += res.reward;
      const double clipped = std::clamp(res.reward, -agent_cfg.reward_clip, agent_cfg.reward_clip);
      state_.buffer.push(Transition{obs, action, clipped, res.observation, res.done && !res.truncated, phase.task});
      if (res.done) {
        window_.episodes += 1;
        window_.mean_episode_return += episode_return_;
        episode_return_ = 0.0;
        obs = env.reset();
      } else {
        obs = std::move(res.observation);
      }

      if (g % agent_cfg.f_tnu == 0) {
        agent.sync_target();
        if (observer) observer->on_target_sync(g, state_);
      }

      if (q.enabled) {
        if (q.updates && g % q.f_ruf == 0) {
          const std::size_t n = rrb_update(state_.rrb, phase.task, agent.q_function());
          if (observer) observer->on_rrb_event({RrbEvent::Kind::update, g, phase.task, n}, state_);
        }
        if (g % q.f_raf == 0) {
          const auto recent = state_.buffer.recent(q.n_rah);
          const std::size_t n = rrb_add(state_.rrb, recent, q.n_rass, agent.q_function(), phase.task, state_.rng);
          state_.log.rrb_entries_added += n;
          if (observer) observer->on_rrb_event({RrbEvent::Kind::add, g, phase.task, n}, state_);
        }
      }

      if (g % agent_cfg.f_train == 0) {
        const bool active = qreg_active(phase);
        const StepReport report = agent.train_step(state_.buffer, active ? &state_.rrb : nullptr, state_.rng);
        if (report.performed) {
          window_.train_steps += 1;
          window_.mean_td_loss += report.td_loss;
          window_.mean_qreg_loss += report.qreg_loss;
          window_.mean_penalty += report.penalty;
          window_.mean_grad_norm += report.grad_norm;
          window_.max_grad_norm = std::max(window_.max_grad_norm, report.grad_norm);
          if (report.rehearsal_batch > 0) window_.qreg_steps += 1;
          if (report.qreg_loss > 0.0 && !state_.log.first_qreg_step) state_.log.first_qreg_step = g;
        }
        if (observer) observer->on_train_step({g, phase, active, report}, state_);
      }

      if (t % config_.schedule.eval_period == 0) {
        flush_losses();
        const bool terminal = t == config_.schedule.steps_per_task;
        evaluate_point(phase_index, t / config_.schedule.eval_period, terminal);
      }
    }
  } catch (const NumericError& e) {
    flush_losses();
    state_.log.abort_reason = "global step " + std::to_string(state_.global_step) + ": " + e.what();
    return false;
  }

  state_.agent.on_task_boundary(state_.buffer, state_.rng);
  state_.next_phase += 1;
  if (observer) observer->on_phase_end(phase_index, state_);
  return !finished();
}

RunLog ContinualTrainer::run(RunObserver* observer) {
  while (run_phase(observer)) {
  }
  return state_.log;
}

RunLog run_experiment(const RunConfig& config, std::uint64_t seed, RunObserver* observer) {
  ContinualTrainer trainer(config, seed);
  return trainer.run(observer);
}

}  // namespace cyclerl
