#include "cyclerl/adam.hpp"

#include <cmath>

#include "cyclerl/errors.hpp"

namespace cyclerl {

AdamState::AdamState(const MlpNetwork& net, AdamOptions opts) : options(opts) {
  for (const Tensor* p : net.parameters()) {
    m.emplace_back(p->shape(), 0.0);
    v.emplace_back(p->shape(), 0.0);
  }
}

void adam_step(AdamState& state, MlpNetwork& net, const GradientSet& grads) {
  auto params = net.parameters();
  if (grads.tensors.size() != params.size() || state.m.size() != params.size()) {
    throw DimensionError("adam_step: " + std::to_string(grads.tensors.size()) + " gradient tensors for " +
                         std::to_string(params.size()) + " parameters");
  }
  std::size_t flat = 0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!grads.tensors[p].same_shape(*params[p]) || !state.m[p].same_shape(*params[p])) {
      throw DimensionError("adam_step: shape mismatch at " + parameter_name(p));
    }
    const auto g = grads.tensors[p].data();
    for (std::size_t k = 0; k < g.size(); ++k, ++flat) {
      if (!std::isfinite(g[k])) {
        throw NumericError("non-finite gradient at " + parameter_name(p) + "[" + std::to_string(k) +
                           "] (flat parameter index " + std::to_string(flat) + ")");
      }
    }
  }

  const auto& o = state.options;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto theta = params[p]->data();
    auto g = grads.tensors[p].data();
    auto m = state.m[p].data();
    auto v = state.v[p].data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * g[k];
      v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      theta[k] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace cyclerl
