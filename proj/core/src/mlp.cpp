#include "cyclerl/mlp.hpp"

#include <cmath>

#include "cyclerl/errors.hpp"

namespace cyclerl {

void GradientSet::add_scaled(const GradientSet& other, double scale) {
  if (other.tensors.size() != tensors.size()) {
    throw DimensionError("gradient sets have different parameter counts");
  }
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    auto dst = tensors[t].data();
    auto src = other.tensors[t].data();
    if (dst.size() != src.size()) throw DimensionError("gradient shape mismatch at " + parameter_name(t));
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * src[k];
  }
}

void GradientSet::scale(double factor) {
  for (auto& t : tensors)
    for (double& x : t.data()) x *= factor;
}

double GradientSet::squared_norm() const {
  double acc = 0.0;
  for (const auto& t : tensors)
    for (double x : t.data()) acc += x * x;
  return acc;
}

double GradientSet::norm() const { return std::sqrt(squared_norm()); }

std::string parameter_name(std::size_t index) {
  return "layer " + std::to_string(index / 2) + (index % 2 == 0 ? " weight" : " bias");
}

MlpNetwork::MlpNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { validate(); }

void MlpNetwork::validate() const {
  if (layers_.empty()) throw DimensionError("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weight.rank() != 2 || layer.bias.size() != layer.weight.rows()) {
      throw DimensionError("layer " + std::to_string(l) + ": weight " + layer.weight.shape_string() +
                           " and bias " + layer.bias.shape_string() + " disagree");
    }
    if (l > 0 && layers_[l - 1].output_dim() != layer.input_dim()) {
      throw DimensionError("layer " + std::to_string(l) + " expects " +
                           std::to_string(layer.input_dim()) + " inputs but layer " +
                           std::to_string(l - 1) + " produces " +
                           std::to_string(layers_[l - 1].output_dim()));
    }
  }
  if (layers_.back().activation != Activation::identity) {
    throw DimensionError("final layer must be linear (identity activation)");
  }
}

MlpNetwork MlpNetwork::create(std::size_t input_dim, std::span<const std::size_t> hidden,
                              std::size_t output_dim, Rng& rng) {
  std::vector<DenseLayer> layers;
  std::size_t fan_in = input_dim;
  auto make_layer = [&](std::size_t fan_out, Activation act) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Tensor::matrix(fan_out, fan_in), Tensor({fan_out}, 0.0), act};
    for (double& w : layer.weight.data()) w = dist(rng);
    layers.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (std::size_t h : hidden) make_layer(h, Activation::relu);
  make_layer(output_dim, Activation::identity);
  return MlpNetwork(std::move(layers));
}

std::size_t MlpNetwork::input_dim() const { return layers_.empty() ? 0 : layers_.front().input_dim(); }
std::size_t MlpNetwork::output_dim() const { return layers_.empty() ? 0 : layers_.back().output_dim(); }

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<Tensor*> MlpNetwork::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> MlpNetwork::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

GradientSet MlpNetwork::zero_gradients() const {
  GradientSet g;
  for (const auto& l : layers_) {
    g.tensors.emplace_back(l.weight.shape(), 0.0);
    g.tensors.emplace_back(l.bias.shape(), 0.0);
  }
  return g;
}

namespace {

// out[b][o] = bias[o] + sum_i w[o][i] * in[b][i]
Tensor affine(const DenseLayer& layer, const Tensor& in) {
  const std::size_t batch = in.rows();
  const std::size_t n_in = layer.input_dim();
  const std::size_t n_out = layer.output_dim();
  Tensor out = Tensor::matrix(batch, n_out);
  const double* w = layer.weight.data().data();
  const double* b = layer.bias.data().data();
  for (std::size_t r = 0; r < batch; ++r) {
    const double* x = in.data().data() + r * n_in;
    double* y = out.data().data() + r * n_out;
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* wr = w + o * n_in;
      double acc = b[o];
      for (std::size_t i = 0; i < n_in; ++i) acc += wr[i] * x[i];
      y[o] = acc;
    }
  }
  return out;
}

void apply_activation(Tensor& t, Activation act) {
  if (act == Activation::relu)
    for (double& x : t.data()) x = x > 0.0 ? x : 0.0;
}

Tensor as_matrix(const Tensor& batch) {
  if (batch.rank() == 2) return batch;
  if (batch.rank() == 1) return Tensor({1, batch.size()}, std::vector<double>(batch.data().begin(), batch.data().end()));
  throw DimensionError("network input must be a vector or a matrix, got " + batch.shape_string());
}

void check_input(const MlpNetwork& net, const Tensor& batch) {
  if (net.layers().empty()) throw StateError("forward on an empty network");
  if (batch.cols() != net.input_dim()) {
    throw DimensionError("layer 0 expects " + std::to_string(net.input_dim()) +
                         " inputs, batch has width " + std::to_string(batch.cols()));
  }
}

}  // namespace

Tensor MlpNetwork::forward(const Tensor& batch) const {
  check_input(*this, batch);
  Tensor h = as_matrix(batch);
  for (const auto& layer : layers_) {
    h = affine(layer, h);
    apply_activation(h, layer.activation);
  }
  return h;
}

Tensor MlpNetwork::forward(const Tensor& batch, ForwardCache& cache) const {
  check_input(*this, batch);
  cache.clear();
  Tensor h = as_matrix(batch);
  for (const auto& layer : layers_) {
    cache.layer_inputs.push_back(h);
    h = affine(layer, h);
    cache.pre_activations.push_back(h);
    apply_activation(h, layer.activation);
  }
  return h;
}

std::vector<double> MlpNetwork::q_values(std::span<const double> observation) const {
  Tensor in({1, observation.size()}, std::vector<double>(observation.begin(), observation.end()));
  Tensor out = forward(in);
  return {out.data().begin(), out.data().end()};
}

GradientSet MlpNetwork::backward(const ForwardCache& cache, const Tensor& output_grad) const {
  if (!cache.valid() || cache.layer_inputs.size() != layers_.size()) {
    throw StateError("backward called without a cached forward pass");
  }
  const std::size_t batch = cache.layer_inputs.front().rows();
  if (output_grad.rows() != batch || output_grad.cols() != output_dim()) {
    throw DimensionError("output gradient " + output_grad.shape_string() + " does not match [" +
                         std::to_string(batch) + "x" + std::to_string(output_dim()) + "]");
  }

  GradientSet grads = zero_gradients();
  Tensor delta = as_matrix(output_grad);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const std::size_t n_in = layer.input_dim();
    const std::size_t n_out = layer.output_dim();
    const Tensor& pre = cache.pre_activations[l];
    if (layer.activation == Activation::relu) {
      for (std::size_t k = 0; k < delta.size(); ++k)
        if (pre[k] <= 0.0) delta[k] = 0.0;
    }

    const Tensor& in = cache.layer_inputs[l];
    double* dw = grads.tensors[2 * l].data().data();
    double* db = grads.tensors[2 * l + 1].data().data();
    for (std::size_t r = 0; r < batch; ++r) {
      const double* x = in.data().data() + r * n_in;
      const double* d = delta.data().data() + r * n_out;
      for (std::size_t o = 0; o < n_out; ++o) {
        const double g = d[o];
        if (g == 0.0) continue;
        db[o] += g;
        double* row = dw + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) row[i] += g * x[i];
      }
    }

    if (l == 0) break;
    Tensor next = Tensor::matrix(batch, n_in);
    const double* w = layer.weight.data().data();
    for (std::size_t r = 0; r < batch; ++r) {
      const double* d = delta.data().data() + r * n_out;
      double* dx = next.data().data() + r * n_in;
      for (std::size_t o = 0; o < n_out; ++o) {
        const double g = d[o];
        if (g == 0.0) continue;
        const double* wr = w + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) dx[i] += g * wr[i];
      }
    }
    delta = std::move(next);
  }
  return grads;
}

MlpNetwork copy_parameters(const MlpNetwork& src) { return MlpNetwork(src); }

void assign_parameters(MlpNetwork& dst, const MlpNetwork& src) {
  if (dst.layer_count() != src.layer_count()) throw DimensionError("assign_parameters: layer count differs");
  for (std::size_t l = 0; l < src.layer_count(); ++l) {
    if (!dst.layers()[l].weight.same_shape(src.layers()[l].weight)) {
      throw DimensionError("assign_parameters: layer " + std::to_string(l) + " shape differs");
    }
  }
  dst = src;
}

}  // namespace cyclerl
