#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cyclerl/rng.hpp"
#include "cyclerl/tensor.hpp"

namespace cyclerl {

enum class Activation { relu, identity };

struct DenseLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]
  Activation activation = Activation::relu;

  [[nodiscard]] std::size_t input_dim() const { return weight.cols(); }
  [[nodiscard]] std::size_t output_dim() const { return weight.rows(); }
  bool operator==(const DenseLayer&) const = default;
};

/// Gradients (or any per-parameter quantity) laid out like the network's
/// parameter list: weight0, bias0, weight1, bias1, ...
struct GradientSet {
  std::vector<Tensor> tensors;

  void add_scaled(const GradientSet& other, double scale);
  void scale(double factor);
  [[nodiscard]] double squared_norm() const;
  [[nodiscard]] double norm() const;
  bool operator==(const GradientSet&) const = default;
};

/// Activations recorded by a training forward pass; consumed by backward().
struct ForwardCache {
  std::vector<Tensor> layer_inputs;
  std::vector<Tensor> pre_activations;

  [[nodiscard]] bool valid() const noexcept { return !layer_inputs.empty(); }
  void clear() {
    layer_inputs.clear();
    pre_activations.clear();
  }
};

/// Feed-forward Q-network. Every layer but the last is the "encoder"; the
/// last is a linear head with identity activation.
class MlpNetwork {
 public:
  MlpNetwork() = default;
  explicit MlpNetwork(std::vector<DenseLayer> layers);

  /// Glorot-uniform weights, zero biases, relu hidden layers.
  static MlpNetwork create(std::size_t input_dim, std::span<const std::size_t> hidden,
                           std::size_t output_dim, Rng& rng);

  [[nodiscard]] std::size_t input_dim() const;
  [[nodiscard]] std::size_t output_dim() const;
  [[nodiscard]] std::size_t layer_count() const noexcept { return layers_.size(); }
  [[nodiscard]] std::size_t encoder_layer_count() const noexcept {
    return layers_.empty() ? 0 : layers_.size() - 1;
  }
  [[nodiscard]] std::size_t parameter_count() const;

  [[nodiscard]] const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::vector<DenseLayer>& layers() noexcept { return layers_; }

  [[nodiscard]] std::vector<Tensor*> parameters();
  [[nodiscard]] std::vector<const Tensor*> parameters() const;
  [[nodiscard]] GradientSet zero_gradients() const;

  [[nodiscard]] Tensor forward(const Tensor& batch) const;
  Tensor forward(const Tensor& batch, ForwardCache& cache) const;
  [[nodiscard]] std::vector<double> q_values(std::span<const double> observation) const;

  /// d(loss)/d(theta) given d(loss)/d(output) for the batch recorded in `cache`.
  [[nodiscard]] GradientSet backward(const ForwardCache& cache, const Tensor& output_grad) const;

  bool operator==(const MlpNetwork&) const = default;

 private:
  void validate() const;
  std::vector<DenseLayer> layers_;
};

[[nodiscard]] MlpNetwork copy_parameters(const MlpNetwork& src);
void assign_parameters(MlpNetwork& dst, const MlpNetwork& src);

/// Name of flat parameter tensor `index`, e.g. "layer 1 bias".
std::string parameter_name(std::size_t index);

}  // namespace cyclerl
