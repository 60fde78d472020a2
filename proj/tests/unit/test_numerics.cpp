#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cyclerl/adam.hpp"
#include "cyclerl/errors.hpp"
#include "cyclerl/mlp.hpp"
#include "oracles.hpp"

using namespace cyclerl;

namespace {

DenseLayer layer(std::size_t out, std::size_t in, std::vector<double> w, std::vector<double> b, Activation act) {
  return DenseLayer{Tensor({out, in}, std::move(w)), Tensor({out}, std::move(b)), act};
}

MlpNetwork scalar_net(double w, double b) {
  return MlpNetwork({layer(1, 1, {w}, {b}, Activation::identity)});
}

}  // namespace

TEST_CASE("forward with zero weights returns the bias in every row") {
  MlpNetwork net({layer(3, 2, std::vector<double>(6, 0.0), {0.5, -1.0, 2.0}, Activation::identity)});
  const Tensor out = net.forward(Tensor({4, 2}, {1, 2, 3, 4, -5, 6, 7, -8}));
  REQUIRE(out.rows() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(out(r, 0) == 0.5);
    CHECK(out(r, 1) == -1.0);
    CHECK(out(r, 2) == 2.0);
  }
}

TEST_CASE("identity linear layer passes the input through") {
  MlpNetwork net({layer(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, Activation::identity)});
  const Tensor x({1, 3}, {0.25, -7.0, 3.5});
  CHECK(net.forward(x) == x);
}

TEST_CASE("two-layer relu forward matches a hand computation") {
  // z1 = W1 x + b1 = (0.3 - 0.8 + 0.1, 0.15 + 0.8 - 0.2) = (-0.4, 0.75) -> relu (0, 0.75)
  // out = 2*0 + 3*0.75 + 0.5 = 2.75
  MlpNetwork net({layer(2, 2, {1, -2, 0.5, 2}, {0.1, -0.2}, Activation::relu),
                  layer(1, 2, {2, 3}, {0.5}, Activation::identity)});
  const Tensor out = net.forward(Tensor({1, 2}, {0.3, 0.4}));
  CHECK(std::abs(out(0, 0) - 2.75) <= 1e-12);
}

TEST_CASE("forward rejects a wrongly sized input naming the layer") {
  MlpNetwork net({layer(1, 2, {1, 1}, {0}, Activation::identity)});
  try {
    (void)net.forward(Tensor({1, 3}, {1, 2, 3}));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("forward is pure") {
  Rng rng(7);
  const std::vector<std::size_t> hidden{5, 4};
  const MlpNetwork net = MlpNetwork::create(3, hidden, 2, rng);
  const Tensor x({2, 3}, {0.1, 0.2, 0.3, -0.4, 0.5, -0.6});
  CHECK(net.forward(x) == net.forward(x));
}

TEST_CASE("backward of sum(Wx) gives the outer product of ones and x") {
  MlpNetwork net({layer(2, 3, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {0, 0}, Activation::identity)});
  const Tensor x({1, 3}, {1.5, -2.0, 0.25});
  ForwardCache cache;
  (void)net.forward(x, cache);
  const GradientSet g = net.backward(cache, Tensor({1, 2}, 1.0));
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t i = 0; i < 3; ++i) CHECK(g.tensors[0](o, i) == x(0, i));
    CHECK(g.tensors[1][o] == 1.0);
  }
}

TEST_CASE("zero output gradient gives zero parameter gradients") {
  Rng rng(3);
  const std::vector<std::size_t> hidden{6};
  const MlpNetwork net = MlpNetwork::create(4, hidden, 3, rng);
  ForwardCache cache;
  (void)net.forward(Tensor({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8}), cache);
  CHECK(net.backward(cache, Tensor({2, 3}, 0.0)).squared_norm() == 0.0);
}

TEST_CASE("backward without a cached forward pass is a state error") {
  MlpNetwork net = scalar_net(1.0, 0.0);
  ForwardCache empty;
  CHECK_THROWS_AS((void)net.backward(empty, Tensor({1, 1}, 1.0)), StateError);
}

TEST_CASE("backward agrees with central finite differences on random two-layer nets") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; checked < 20 && trial < 200; ++trial) {
    Rng rng(gen());
    const std::vector<std::size_t> hidden{7};
    MlpNetwork net = MlpNetwork::create(4, hidden, 3, rng);
    for (auto* p : net.parameters())
      for (double& v : p->data()) v = 0.5 * normal(gen);
    std::vector<std::vector<double>> rows(5, std::vector<double>(4));
    for (auto& r : rows)
      for (double& v : r) v = normal(gen);
    if (testing::min_relu_margin(net, rows) < 1e-3) continue;
    const Tensor x = stack_rows(rows);
    Tensor weights({5, 3});
    for (double& v : weights.data()) v = normal(gen);
    auto loss = [&](const MlpNetwork& n) {
      const Tensor out = n.forward(x);
      double s = 0.0;
      for (std::size_t k = 0; k < out.size(); ++k) s += weights[k] * out[k] * out[k];
      return s;
    };
    ForwardCache cache;
    const Tensor out = net.forward(x, cache);
    Tensor grad_out({5, 3});
    for (std::size_t k = 0; k < out.size(); ++k) grad_out[k] = 2.0 * weights[k] * out[k];
    const GradientSet analytic = net.backward(cache, grad_out);
    const GradientSet numeric = testing::finite_difference(net, loss);
    CHECK(testing::max_relative_error(analytic, numeric) < 1e-4);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("adam first step with unit gradient moves the parameter by -lr") {
  MlpNetwork net = scalar_net(0.5, 0.0);
  AdamState state(net, AdamOptions{1e-4, 0.9, 0.999, 1e-8});
  GradientSet g = net.zero_gradients();
  g.tensors[0][0] = 1.0;
  adam_step(state, net, g);
  CHECK(std::abs((net.layers()[0].weight[0] - 0.5) + 1e-4) <= 1e-7);
  CHECK(net.layers()[0].bias[0] == 0.0);
  CHECK(state.t == 1);
}

TEST_CASE("adam with zero gradients leaves parameters and counts the step") {
  Rng rng(5);
  const std::vector<std::size_t> hidden{3};
  MlpNetwork net = MlpNetwork::create(2, hidden, 2, rng);
  const MlpNetwork before = net;
  AdamState state(net, AdamOptions{});
  adam_step(state, net, net.zero_gradients());
  CHECK(net == before);
  CHECK(state.t == 1);
}

TEST_CASE("adam rejects a non-finite gradient without touching anything") {
  MlpNetwork net = scalar_net(0.5, 0.1);
  const MlpNetwork before = net;
  AdamState state(net, AdamOptions{});
  const AdamState state_before = state;
  GradientSet g = net.zero_gradients();
  g.tensors[1][0] = std::numeric_limits<double>::quiet_NaN();
  try {
    adam_step(state, net, g);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer 0 bias") != std::string::npos);
  }
  CHECK(net == before);
  CHECK(state == state_before);
}

TEST_CASE("copy_parameters is independent of its source") {
  Rng rng(9);
  const std::vector<std::size_t> hidden{4};
  MlpNetwork src = MlpNetwork::create(3, hidden, 2, rng);
  const MlpNetwork copy = copy_parameters(src);
  CHECK(copy == src);
  src.layers()[0].weight[0] += 1.0;
  CHECK_FALSE(copy == src);
}

TEST_CASE("glorot init gives zero biases and bounded weights") {
  Rng rng(1);
  const std::vector<std::size_t> hidden{8};
  const MlpNetwork net = MlpNetwork::create(4, hidden, 2, rng);
  const double limit = std::sqrt(6.0 / (4 + 8));
  for (double w : net.layers()[0].weight.data()) CHECK(std::abs(w) <= limit);
  for (double b : net.layers()[0].bias.data()) CHECK(b == 0.0);
  CHECK(net.layers().back().activation == Activation::identity);
}
