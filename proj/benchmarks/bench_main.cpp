#include <benchmark/benchmark.h>

#include <random>

#include "cyclerl/agent.hpp"
#include "cyclerl/envs.hpp"

using namespace cyclerl;

namespace {

double gauss(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

Transition random_transition(Rng& rng, std::size_t obs, int actions) {
  Transition t;
  for (std::size_t d = 0; d < obs; ++d) {
    t.state.push_back(gauss(rng));
    t.next_state.push_back(gauss(rng));
  }
  t.action = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(actions)));
  t.reward = gauss(rng);
  return t;
}

void BM_ForwardBackward(benchmark::State& state) {
  Rng rng(1);
  const std::vector<std::size_t> hidden{64, 64};
  const MlpNetwork net = MlpNetwork::create(20, hidden, 4, rng);
  const auto batch_size = static_cast<std::size_t>(state.range(0));
  Tensor batch({batch_size, 20});
  for (double& v : batch.data()) v = gauss(rng);
  Tensor grad({batch_size, 4}, 1.0);
  for (auto _ : state) {
    ForwardCache cache;
    benchmark::DoNotOptimize(net.forward(batch, cache));
    benchmark::DoNotOptimize(net.backward(cache, grad));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(256);

void BM_TrainStep(benchmark::State& state) {
  const bool qreg = state.range(0) != 0;
  constexpr std::size_t kObs = 20;
  constexpr int kActions = 4;
  AgentConfig cfg;
  cfg.qreg.enabled = qreg;
  Rng rng(2);
  DqnAgent agent(cfg, kObs, kActions, rng);
  RingBuffer buffer(5000);
  for (int k = 0; k < 5000; ++k) buffer.push(random_transition(rng, kObs, kActions));
  RehearsalBuffer rrb(2000);
  for (int k = 0; k < 2000; ++k) {
    RehearsalEntry e;
    for (std::size_t d = 0; d < kObs; ++d) e.state.push_back(gauss(rng));
    for (int a = 0; a < kActions; ++a) e.q_values.push_back(gauss(rng));
    rrb.push(std::move(e));
  }
  for (auto _ : state) benchmark::DoNotOptimize(agent.train_step(buffer, qreg ? &rrb : nullptr, rng));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1);

void BM_EnvStep(benchmark::State& state) {
  EnvSuiteConfig suite;
  suite.family = static_cast<EnvFamily>(state.range(0));
  const TaskSpec spec = make_task_spec(suite, 1, 1);
  auto env = make_env(spec, 3);
  env->reset();
  const int actions = env->action_count();
  int a = 0;
  for (auto _ : state) {
    const StepResult r = env->step(a);
    a = (a + 1) % actions;
    if (r.done) env->reset();
    benchmark::DoNotOptimize(r.reward);
  }
}
BENCHMARK(BM_EnvStep)->Arg(static_cast<int>(EnvFamily::room))->Arg(static_cast<int>(EnvFamily::flappy))
    ->Arg(static_cast<int>(EnvFamily::catcher));

}  // namespace

BENCHMARK_MAIN();
