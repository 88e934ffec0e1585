#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "qindex/errors.hpp"
#include "qindex/kernels.hpp"
#include "qindex/network.hpp"

using namespace qindex;
using qindex::testing::brute_conv2d;
using qindex::testing::random_vector;

namespace {

kernels::ConvGeometry geometry(int64_t cin, int64_t h, int64_t w, int64_t cout, int64_t k,
                               int64_t stride, int64_t pad) {
  kernels::ConvGeometry g;
  g.in_channels = cin;
  g.in_height = h;
  g.in_width = w;
  g.out_channels = cout;
  g.kernel = k;
  g.stride = stride;
  g.padding = pad;
  return g;
}

// conv(3, 3x3, pad 1) + ReLU -> flatten -> fc(4)
NetworkDef tiny_net() {
  NetworkDef net;
  net.input_shape = {2, 5, 5};
  net.num_classes = 4;
  net.layers = {LayerDef::conv2d(3, 3, 1, 1), LayerDef::relu(), LayerDef::flatten(),
                LayerDef::fully_connected(4)};
  return net;
}

Tensor random_batch(Shape shape, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

}  // namespace

TEST(Conv, MatchesBruteForce) {
  for (const auto& g : {geometry(2, 6, 5, 3, 3, 1, 1), geometry(3, 7, 7, 2, 3, 2, 0),
                        geometry(1, 4, 4, 4, 2, 1, 1)}) {
    std::mt19937_64 rng(7);
    const int64_t batch = 2;
    const auto x = random_vector(static_cast<size_t>(batch * g.in_size()), rng);
    const auto w = random_vector(static_cast<size_t>(g.out_channels * g.patch()), rng);
    const auto b = random_vector(static_cast<size_t>(g.out_channels), rng);
    std::vector<double> y(static_cast<size_t>(batch * g.out_size()));
    kernels::conv2d_forward<double>(g, batch, x, w, b, y);
    const auto ref = brute_conv2d(g, batch, x, w, b);
    ASSERT_EQ(y.size(), ref.size());
    for (size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
  }
}

TEST(Gradients, Conv) {
  const auto r = qindex::testing::check_conv_gradients(geometry(2, 5, 5, 3, 3, 1, 1), 2, 1);
  EXPECT_LE(r.worst(), 1e-6);
  const auto s = qindex::testing::check_conv_gradients(geometry(2, 6, 6, 2, 3, 2, 1), 1, 2);
  EXPECT_LE(s.worst(), 1e-6);
}

TEST(Gradients, FullyConnected) {
  EXPECT_LE(qindex::testing::check_fc_gradients(3, 7, 4, 3).worst(), 1e-6);
}

TEST(Gradients, Relu) { EXPECT_LE(qindex::testing::check_relu_gradient(64, 4), 1e-6); }

TEST(Gradients, MaxPool) {
  kernels::PoolGeometry g;
  g.channels = 2;
  g.in_height = 4;
  g.in_width = 6;
  EXPECT_LE(qindex::testing::check_maxpool_gradient(g, 2, 5), 1e-6);
}

TEST(Network, SimpleCnnShapes) {
  const auto net = NetworkDef::simple_cnn({1, 28, 28}, 10);
  const auto shapes = net.output_shapes();
  EXPECT_EQ(shapes.back(), (Shape{10}));
  EXPECT_EQ(net.quantizable_layers().size(), 4u);
  EXPECT_EQ(weight_shape(net, net.quantizable_layers()[2]), (Shape{128, 64 * 7 * 7}));
}

TEST(Network, BadChainNamesLayer) {
  NetworkDef net;
  net.input_shape = {1, 2, 2};
  net.num_classes = 2;
  net.layers = {LayerDef::conv2d(4, 5, 1, 0), LayerDef::flatten(),
                LayerDef::fully_connected(2)};
  try {
    net.output_shapes();
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos) << e.what();
  }
}

TEST(Network, ForwardMatchesDenseReference) {
  const auto net = tiny_net();
  const auto w = init_weights(net, 3);
  const Tensor x = random_batch({2, 2, 5, 5}, 11);
  const Tensor y = forward(net, w, x);
  ASSERT_EQ(y.shape(), (Shape{2, 4}));

  const auto g = geometry(2, 5, 5, 3, 3, 1, 1);
  const auto& cp = w.layers.at(0);
  const std::vector<double> xin(x.data().begin(), x.data().end());
  const std::vector<double> cw(cp.weight.data().begin(), cp.weight.data().end());
  const std::vector<double> cb(cp.bias.data().begin(), cp.bias.data().end());
  auto h = brute_conv2d(g, 2, xin, cw, cb);
  for (auto& v : h) v = std::max(v, 0.0);
  const auto& fp = w.layers.at(3);
  const int64_t in_f = g.out_size();
  for (int64_t n = 0; n < 2; ++n) {
    for (int64_t o = 0; o < 4; ++o) {
      double acc = fp.bias[o];
      for (int64_t i = 0; i < in_f; ++i) acc += fp.weight[o * in_f + i] * h[n * in_f + i];
      EXPECT_NEAR(y[n * 4 + o], acc, 1e-5);
    }
  }
}

TEST(Network, ZeroWeightsGiveZeroLogits) {
  const auto net = NetworkDef::simple_cnn({1, 28, 28}, 10);
  auto w = init_weights(net, 0);
  for (auto& [_, p] : w.layers) {
    for (auto& v : p.weight.data()) v = 0.0f;
    for (auto& v : p.bias.data()) v = 0.0f;
  }
  const Tensor y = forward(net, w, random_batch({3, 1, 28, 28}, 1));
  for (float v : y.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Network, IdentityFullyConnected) {
  NetworkDef net;
  net.input_shape = {1, 1, 3};
  net.num_classes = 3;
  net.layers = {LayerDef::flatten(), LayerDef::fully_connected(3)};
  auto w = init_weights(net, 0);
  auto& p = w.layers.at(1);
  for (int64_t i = 0; i < 9; ++i) p.weight[i] = (i % 4 == 0) ? 1.0f : 0.0f;
  for (auto& v : p.bias.data()) v = 0.0f;
  const Tensor x({1, 1, 1, 3}, std::vector<float>{0.25f, -1.5f, 3.0f});
  const Tensor y = forward(net, w, x);
  EXPECT_EQ(y.storage(), (std::vector<float>{0.25f, -1.5f, 3.0f}));
}

TEST(Network, BatchInvariantAndDeterministic) {
  const auto net = NetworkDef::simple_cnn({1, 28, 28}, 10);
  const auto w = init_weights(net, 5);
  const Tensor x = random_batch({6, 1, 28, 28}, 2);
  const Tensor all = forward(net, w, x);
  EXPECT_EQ(all, forward(net, w, x));
  for (int64_t i = 0; i < 6; ++i) {
    const Tensor one = forward(net, w, x.slice_rows(i, i + 1));
    for (int64_t k = 0; k < 10; ++k) EXPECT_EQ(one[k], all[i * 10 + k]);
  }
}

TEST(Network, LossGradientsMatchFiniteDifferences) {
  NetworkDef net;
  net.input_shape = {1, 6, 6};
  net.num_classes = 3;
  net.layers = {LayerDef::conv2d(2, 3, 1, 1), LayerDef::relu(), LayerDef::max_pool(),
                LayerDef::flatten(), LayerDef::fully_connected(3)};
  auto w = init_weights(net, 9);
  const Tensor x = random_batch({2, 1, 6, 6}, 4);
  const std::vector<int32_t> labels{0, 2};
  const auto analytic = loss_and_gradients(net, w, x, labels);
  EXPECT_TRUE(std::isfinite(analytic.loss));

  const double eps = 1e-3;
  for (auto& [layer, params] : w.layers) {
    for (auto* t : {&params.weight, &params.bias}) {
      const Tensor& grad = t == &params.weight ? analytic.gradients.layers.at(layer).weight
                                               : analytic.gradients.layers.at(layer).bias;
      double diff = 0.0, norm = 0.0;
      for (int64_t i = 0; i < t->numel(); ++i) {
        const float saved = (*t)[i];
        (*t)[i] = saved + static_cast<float>(eps);
        const double up = loss_and_gradients(net, w, x, labels).loss;
        (*t)[i] = saved - static_cast<float>(eps);
        const double down = loss_and_gradients(net, w, x, labels).loss;
        (*t)[i] = saved;
        const double num = (up - down) / (2 * eps);
        diff += (num - grad[i]) * (num - grad[i]);
        norm += num * num;
      }
      EXPECT_LE(std::sqrt(diff), 2e-2 * std::sqrt(norm) + 1e-4) << "layer " << layer;
    }
  }
}

TEST(Network, ArgmaxLowestIndexOnTies) {
  const Tensor logits({2, 3}, std::vector<float>{1, 3, 3, 0, 0, 0});
  EXPECT_EQ(argmax_rows(logits), (std::vector<int32_t>{1, 0}));
}
