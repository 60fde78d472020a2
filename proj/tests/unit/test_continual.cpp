#include <doctest.h>

#include <cmath>

#include "cyclerl/config.hpp"
#include "cyclerl/continual.hpp"
#include "cyclerl/errors.hpp"

using namespace cyclerl;

namespace {

// Two short catcher tasks, small enough to run in well under a second.
RunConfig tiny_run() {
  RunConfig c = default_run_config();
  c.schedule.n_tasks = 2;
  c.schedule.cycles = 2;
  c.schedule.steps_per_task = 400;
  c.schedule.eval_period = 200;
  c.schedule.eval_episodes = 1;
  c.env.episode_cap = 60;
  c.agent.hidden = {16};
  c.agent.batch_size = 8;
  c.agent.n_rb = 300;
  c.agent.f_tnu = 100;
  c.probe_size = 16;
  return c;
}

RunConfig with_variant(RunConfig c, Variant v) {
  apply_variant(v, c.schedule, c.agent);
  return c;
}

}  // namespace

TEST_CASE("schedule is cycle-major") {
  const SchedulePlan plan = build_schedule(2, 2, 100, 50);
  REQUIRE(plan.phases.size() == 4);
  CHECK(plan.phases[0] == Phase{1, 1});
  CHECK(plan.phases[1] == Phase{1, 2});
  CHECK(plan.phases[2] == Phase{2, 1});
  CHECK(plan.phases[3] == Phase{2, 2});
  CHECK(plan.phase_index(Phase{2, 1}) == 2);
}

TEST_CASE("five tasks, four cycles of 300k steps is 20 phases and 6M steps") {
  const SchedulePlan plan = build_schedule(5, 4, 300000, 60000);
  CHECK(plan.phases.size() == 20);
  CHECK(plan.total_steps() == 6000000);
  CHECK(plan.evals_per_phase() == 5);
}

TEST_CASE("eval period must divide the task length") {
  CHECK_THROWS_AS(build_schedule(2, 2, 1000, 300), ConfigError);
  CHECK_THROWS_AS(build_schedule(0, 2, 1000, 100), ConfigError);
}

TEST_CASE("q-norm probe of a zero network is zero and scales with the head") {
  MlpNetwork zero({DenseLayer{Tensor({2, 3}, 0.0), Tensor({2}, 0.0), Activation::identity}});
  const std::vector<Observation> probe{{1, 2, 3}, {-1, 0, 4}};
  CHECK(q_norm_probe(zero, probe) == 0.0);
  CHECK(q_norm_probe(zero, {}) == 0.0);

  MlpNetwork net({DenseLayer{Tensor({2, 3}, {1, 0, 0, 0, 1, 0}), Tensor({2}, 0.0), Activation::identity}});
  // Q = (s0, s1): norms sqrt(5) and 1.
  const double expected = (std::sqrt(5.0) + 1.0) / 2.0;
  CHECK(q_norm_probe(net, probe) == doctest::Approx(expected).epsilon(1e-12));
  for (double& w : net.layers()[0].weight.data()) w *= 2.0;
  CHECK(q_norm_probe(net, probe) == doctest::Approx(2.0 * expected).epsilon(1e-12));
}

TEST_CASE("evaluation mean is the average of episode returns and is reproducible") {
  Rng rng(1);
  const std::vector<std::size_t> hidden{8};
  const MlpNetwork net = MlpNetwork::create(20, hidden, 2, rng);
  EnvSuiteConfig suite;
  suite.episode_cap = 80;
  const TaskSpec spec = make_task_spec(suite, 1, 1);
  const EvalRecord a = evaluate(net, spec, 4, 4, 3, 99);
  const EvalRecord b = evaluate(net, spec, 4, 4, 3, 99);
  REQUIRE(a.episode_returns.size() == 3);
  CHECK(a.episode_returns == b.episode_returns);
  double sum = 0.0;
  for (double r : a.episode_returns) sum += r;
  CHECK(a.mean_return == doctest::Approx(sum / 3.0).epsilon(1e-15));
}

TEST_CASE("a run logs the initial evaluation plus every periodic one") {
  const RunConfig config = tiny_run();
  const RunLog log = run_experiment(config, 3);
  const SchedulePlan plan = build_schedule(config.schedule);
  REQUIRE(log.evals.size() == 1 + plan.phases.size() * plan.evals_per_phase());
  CHECK(log.evals[0].phase_index == -1);
  CHECK(log.evals[0].global_step == 0);
  int terminal = 0;
  for (std::size_t k = 1; k < log.evals.size(); ++k) {
    const EvalPoint& e = log.evals[k];
    CHECK(e.global_step == k * config.schedule.eval_period);
    CHECK(e.tasks.size() == 2);
    if (e.terminal) {
      ++terminal;
      CHECK(e.global_step % config.schedule.steps_per_task == 0);
    }
  }
  CHECK(terminal == 4);
  CHECK(log.complete(plan));
  CHECK_FALSE(log.abort_reason.has_value());
}

TEST_CASE("same seed gives the same run and different seeds differ") {
  const RunConfig config = with_variant(tiny_run(), Variant::qreg_nwlu);
  const RunLog a = run_experiment(config, 5);
  const RunLog b = run_experiment(config, 5);
  const RunLog c = run_experiment(config, 6);
  CHECK(to_json(a) == to_json(b));
  CHECK_FALSE(to_json(a) == to_json(c));
}

TEST_CASE("turning evaluation off does not change the training trajectory") {
  RunConfig on = tiny_run();
  RunConfig off = on;
  off.evaluation = false;
  ContinualTrainer a(on, 4);
  ContinualTrainer b(off, 4);
  a.run();
  b.run();
  CHECK(a.state().agent.online() == b.state().agent.online());
  CHECK(a.state().buffer == b.state().buffer);
  CHECK(b.state().log.evals.empty());
}

TEST_CASE("disabled Qreg reproduces the vanilla path bit for bit") {
  const RunConfig vanilla = tiny_run();
  RunConfig disabled = vanilla;
  disabled.agent.qreg.lambda = 5.0;
  disabled.agent.qreg.f_raf = 17;
  disabled.agent.qreg.enabled = false;
  ContinualTrainer a(vanilla, 2);
  ContinualTrainer b(disabled, 2);
  a.run();
  b.run();
  CHECK(a.state().agent.online() == b.state().agent.online());
  CHECK(b.state().rrb.empty());
}

TEST_CASE("standard Qreg waits for the first task to finish") {
  const RunConfig config = with_variant(tiny_run(), Variant::qreg);
  ContinualTrainer trainer(config, 1);
  trainer.run_phase();
  CHECK_FALSE(trainer.qreg_active(Phase{1, 1}));
  CHECK(trainer.qreg_active(Phase{1, 2}));
  trainer.run();
  CHECK(trainer.state().log.first_qreg_step.value() > config.schedule.steps_per_task);
}

TEST_CASE("no-wait Qreg starts as soon as rehearsal samples exist") {
  RunConfig config = with_variant(tiny_run(), Variant::qreg_nwlu);
  config.agent.qreg.f_raf = 100;
  config.agent.qreg.f_ruf = 100;
  const RunLog log = run_experiment(config, 1);
  REQUIRE(log.first_qreg_step.has_value());
  CHECK(*log.first_qreg_step >= config.agent.qreg.f_raf);
  CHECK(*log.first_qreg_step <= config.agent.qreg.f_raf + config.agent.f_train);
}

TEST_CASE("a diverging run is aborted with a diagnostic") {
  RunConfig config = tiny_run();
  config.agent.adam.learning_rate = 1e300;
  config.agent.reward_clip = 1e300;
  const RunLog log = run_experiment(config, 1);
  REQUIRE(log.abort_reason.has_value());
  CHECK(log.abort_reason->find("non-finite") != std::string::npos);
  CHECK_FALSE(log.complete(build_schedule(config.schedule)));
}

TEST_CASE("run log survives a JSON round trip") {
  const RunLog log = run_experiment(with_variant(tiny_run(), Variant::qreg_nwlu), 8);
  const RunLog back = runlog_from_json(to_json(log));
  CHECK(to_json(back) == to_json(log));
  CHECK_THROWS_AS(runlog_from_json(nlohmann::json::parse(R"({"seed": "x"})")), DataError);
}
