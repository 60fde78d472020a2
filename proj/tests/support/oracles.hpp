#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "cyclerl/agent.hpp"
#include "cyclerl/continual.hpp"
#include "cyclerl/mlp.hpp"

namespace cyclerl::testing {

/// Central differences of `loss` with respect to every parameter of `net`.
inline GradientSet finite_difference(MlpNetwork net, const std::function<double(const MlpNetwork&)>& loss,
                                     double h = 1e-5) {
  GradientSet out = net.zero_gradients();
  auto params = net.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p]->data();
    auto g = out.tensors[p].data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + h;
      const double up = loss(net);
      values[k] = saved - h;
      const double down = loss(net);
      values[k] = saved;
      g[k] = (up - down) / (2.0 * h);
    }
  }
  return out;
}

/// Largest element-wise |a - n| / max(|a|, |n|, floor).
inline double max_relative_error(const GradientSet& analytic, const GradientSet& numeric, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t p = 0; p < analytic.tensors.size(); ++p) {
    const auto a = analytic.tensors[p].data();
    const auto n = numeric.tensors[p].data();
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double denom = std::max({std::abs(a[k]), std::abs(n[k]), floor});
      worst = std::max(worst, std::abs(a[k] - n[k]) / denom);
    }
  }
  return worst;
}

/// Smallest |pre-activation| of any hidden relu unit over `inputs`; a finite
/// difference step straddling a kink would otherwise be meaningless.
inline double min_relu_margin(const MlpNetwork& net, const std::vector<std::vector<double>>& inputs) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& x : inputs) {
    std::vector<double> act = x;
    for (const auto& layer : net.layers()) {
      std::vector<double> z(layer.output_dim());
      for (std::size_t o = 0; o < z.size(); ++o) {
        double s = layer.bias[o];
        for (std::size_t i = 0; i < act.size(); ++i) s += layer.weight(o, i) * act[i];
        z[o] = s;
      }
      if (layer.activation == Activation::relu) {
        for (double& v : z) {
          margin = std::min(margin, std::abs(v));
          v = std::max(v, 0.0);
        }
      }
      act = std::move(z);
    }
  }
  return margin;
}

/// Plain nested-vector description of one run's evaluations, from which both
/// a RunLog and the reference metric values are produced.
struct SyntheticRun {
  int n_tasks = 1;
  int cycles = 1;
  int evals_per_phase = 1;
  std::vector<double> initial;                               // [task]
  std::vector<std::vector<std::vector<double>>> returns;     // [phase][eval][task]

  [[nodiscard]] RunLog to_runlog() const {
    RunLog log;
    EvalPoint start;
    for (int i = 0; i < n_tasks; ++i) start.tasks.push_back({i + 1, initial[static_cast<std::size_t>(i)], {}});
    log.evals.push_back(start);
    std::uint64_t step = 0;
    for (std::size_t p = 0; p < returns.size(); ++p) {
      for (std::size_t e = 0; e < returns[p].size(); ++e) {
        EvalPoint pt;
        pt.global_step = ++step;
        pt.phase_index = static_cast<int>(p);
        pt.cycle = static_cast<int>(p) / n_tasks + 1;
        pt.task = static_cast<int>(p) % n_tasks + 1;
        pt.terminal = e + 1 == returns[p].size();
        for (int i = 0; i < n_tasks; ++i) pt.tasks.push_back({i + 1, returns[p][e][static_cast<std::size_t>(i)], {}});
        log.evals.push_back(pt);
      }
    }
    return log;
  }
};

inline SyntheticRun random_synthetic_run(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_dist(1, 4), c_dist(1, 3), e_dist(1, 4);
  std::uniform_real_distribution<double> r_dist(-5.0, 15.0);
  SyntheticRun run;
  run.n_tasks = n_dist(rng);
  run.cycles = c_dist(rng);
  run.evals_per_phase = e_dist(rng);
  std::bernoulli_distribution rare(0.15);
  // Some tasks are all-negative and some never rewarded, to hit the sign and
  // zero-denominator cases.
  std::vector<int> mode(static_cast<std::size_t>(run.n_tasks));
  for (auto& m : mode) m = rare(rng) ? 1 : (rare(rng) ? 2 : 0);
  auto draw = [&](int task) {
    switch (mode[static_cast<std::size_t>(task)]) {
      case 1: return -std::abs(r_dist(rng)) - 0.5;
      case 2: return 0.0;
      default: return r_dist(rng);
    }
  };
  for (int i = 0; i < run.n_tasks; ++i) run.initial.push_back(draw(i));
  run.returns.resize(static_cast<std::size_t>(run.n_tasks * run.cycles));
  for (auto& phase : run.returns) {
    phase.resize(static_cast<std::size_t>(run.evals_per_phase));
    for (auto& ev : phase)
      for (int i = 0; i < run.n_tasks; ++i) ev.push_back(draw(i));
  }
  return run;
}

/// Straight-line transfer metrics over a SyntheticRun.
struct MetricOracle {
  const SyntheticRun& run;

  [[nodiscard]] double denominator(int i) const {
    double m = run.initial[static_cast<std::size_t>(i - 1)];
    for (const auto& phase : run.returns)
      for (const auto& ev : phase) m = std::max(m, ev[static_cast<std::size_t>(i - 1)]);
    return std::abs(m);
  }
  [[nodiscard]] double previous_end(int i, std::size_t phase) const {
    if (phase == 0) return run.initial[static_cast<std::size_t>(i - 1)];
    return run.returns[phase - 1].back()[static_cast<std::size_t>(i - 1)];
  }
  [[nodiscard]] std::size_t phase(int j, int c) const {
    return static_cast<std::size_t>((c - 1) * run.n_tasks + (j - 1));
  }
  [[nodiscard]] double final_transfer(int i, int j, int c) const {
    const double d = denominator(i);
    if (d < 1e-9) return 0.0;
    const std::size_t p = phase(j, c);
    return 10.0 * (run.returns[p].back()[static_cast<std::size_t>(i - 1)] - previous_end(i, p)) / d;
  }
  [[nodiscard]] double worst_transfer(int i, int j, int c) const {
    const double d = denominator(i);
    if (d < 1e-9) return 0.0;
    const std::size_t p = phase(j, c);
    double lo = run.returns[p].front()[static_cast<std::size_t>(i - 1)];
    for (const auto& ev : run.returns[p]) lo = std::min(lo, ev[static_cast<std::size_t>(i - 1)]);
    return 10.0 * (lo - previous_end(i, p)) / d;
  }
  [[nodiscard]] double g_bar(int i) const {
    double total = 0.0;
    for (const auto& phase : run.returns) {
      double s = 0.0;
      for (const auto& ev : phase) s += ev[static_cast<std::size_t>(i - 1)];
      total += s / static_cast<double>(phase.size());
    }
    return total / static_cast<double>(run.returns.size());
  }
  [[nodiscard]] double f_bar(int j) const {
    double s = 0.0;
    for (int c = 1; c <= run.cycles; ++c)
      for (int i = 1; i <= run.n_tasks; ++i) s += final_transfer(i, j, c);
    return s / static_cast<double>(run.cycles * run.n_tasks);
  }
  [[nodiscard]] double w_bar(int j) const {
    double s = 0.0;
    for (int c = 1; c <= run.cycles; ++c)
      for (int i = 1; i <= run.n_tasks; ++i) s += worst_transfer(i, j, c);
    return s / static_cast<double>(run.cycles * run.n_tasks);
  }
};

}  // namespace cyclerl::testing
