#pragma once

#include <cstdint>
#include <vector>

#include "cyclerl/mlp.hpp"

namespace cyclerl {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool operator==(const AdamOptions&) const = default;
};

/// First/second moment estimates mirroring a network's parameter list.
struct AdamState {
  AdamOptions options;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;

  AdamState() = default;
  AdamState(const MlpNetwork& net, AdamOptions opts);
  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update. A non-finite gradient aborts the step
/// before anything is modified and raises NumericError naming the element.
void adam_step(AdamState& state, MlpNetwork& net, const GradientSet& grads);

}  // namespace cyclerl
