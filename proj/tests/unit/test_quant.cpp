#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qindex/dataset.hpp"
#include "qindex/errors.hpp"
#include "qindex/quant.hpp"

using namespace qindex;

namespace {

Tensor random_tensor(int64_t n, uint64_t seed, float scale = 1.0f) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, scale);
  Tensor t({n});
  for (auto& v : t.data()) v = d(rng);
  return t;
}

NetworkDef mnist_net() { return NetworkDef::simple_cnn({1, 28, 28}, 10); }

Dataset blobs(size_t n) {
  BlobSpec spec;
  spec.num_classes = 10;
  spec.samples = n;
  spec.sample_shape = {1, 28, 28};
  spec.seed = 3;
  return synth_gaussian_blobs(spec);
}

}  // namespace

TEST(Quant, SymmetricHandExample) {
  const Tensor w({3}, std::vector<float>{-1.0f, 0.5f, 0.25f});
  const auto q = quantize_weights_symmetric(w, 2);
  EXPECT_EQ(q.scale, 1.0);
  EXPECT_EQ(q.q, (std::vector<int32_t>{-1, 1, 0}));
  EXPECT_EQ(q.dequantized.storage(), (std::vector<float>{-1.0f, 1.0f, 0.0f}));
}

TEST(Quant, SymmetricAllZeros) {
  const auto q = quantize_weights_symmetric(Tensor({5}), 8);
  EXPECT_EQ(q.scale, 0.0);
  for (float v : q.dequantized.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Quant, SymmetricBoundAndGrid) {
  for (int bits : {2, 4, 8, 16}) {
    const Tensor w = random_tensor(4096, static_cast<uint64_t>(bits));
    const auto q = quantize_weights_symmetric(w, bits);
    const int32_t qmax = (1 << (bits - 1)) - 1;
    double max_abs = 0.0;
    for (float v : w.data()) max_abs = std::max(max_abs, std::fabs(double(v)));
    EXPECT_DOUBLE_EQ(q.scale, max_abs / qmax);
    for (int64_t i = 0; i < w.numel(); ++i) {
      EXPECT_LE(std::abs(q.q[i]), qmax);
      EXPECT_LE(std::fabs(double(q.dequantized[i]) - double(w[i])),
                q.scale / 2 + 1e-6 * max_abs);
    }
  }
}

TEST(Quant, RejectsBadBits) {
  EXPECT_THROW(quantize_weights_symmetric(Tensor({2}), 3), DomainError);
  EXPECT_THROW(quantize_weights_symmetric(Tensor({2}), 32), DomainError);
  EXPECT_THROW(affine_params(0.0, 1.0, 5), DomainError);
  EXPECT_THROW(affine_params(1.0, 0.0, 8), DomainError);
}

TEST(Quant, AffineHandExample) {
  const Tensor x({3}, std::vector<float>{0.0f, 0.5f, 1.0f});
  const Tensor y = quantize_activations_affine(x, 0.0, 1.0, 8);
  EXPECT_EQ(y[0], 0.0f);
  EXPECT_FLOAT_EQ(y[1], static_cast<float>(128.0 / 255.0));
  EXPECT_NEAR(y[1], 0.50196, 1e-5);
  EXPECT_FLOAT_EQ(y[2], 1.0f);
}

TEST(Quant, AffineDegenerateAndZeroWidening) {
  const Tensor x({3}, std::vector<float>{0.2f, -3.0f, 7.0f});
  const Tensor flat = quantize_activations_affine(x, 0.0, 0.0, 4);
  for (float v : flat.data()) EXPECT_EQ(v, 0.0f);
  // A strictly positive range still represents 0 exactly.
  const auto p = affine_params(0.5, 2.0, 4);
  EXPECT_EQ(p.zero_point, 0);
  EXPECT_DOUBLE_EQ(p.scale, 2.0 / 15.0);
  Tensor z({1}, std::vector<float>{0.0f});
  fake_quantize_affine(z.data(), p);
  EXPECT_EQ(z[0], 0.0f);
}

TEST(Quant, AffineBoundInsideRange) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  for (int bits : {2, 4, 8, 16}) {
    const auto p = affine_params(-2.0, 3.0, bits);
    Tensor x({2000});
    for (auto& v : x.data()) v = static_cast<float>(u(rng));
    Tensor y = x;
    fake_quantize_affine(y.data(), p);
    for (int64_t i = 0; i < x.numel(); ++i) {
      EXPECT_LE(std::fabs(double(y[i]) - double(x[i])), p.scale / 2 + 1e-6);
    }
  }
}

TEST(Quant, ConfigParsing) {
  EXPECT_EQ(QuantConfig::parse("8-8-8-4").per_layer_bits, (std::vector<int>{8, 8, 8, 4}));
  EXPECT_EQ(QuantConfig::parse("8-8-8-4").to_string(), "8-8-8-4");
  EXPECT_THROW(QuantConfig::parse("8-3"), DomainError);
  EXPECT_THROW(QuantConfig::parse("8-"), DomainError);
  EXPECT_THROW(QuantConfig::parse(""), DomainError);
}

TEST(Quant, Compression) {
  EXPECT_EQ(compression_ratio(QuantConfig::uniform(8, 4), CompressionMode::kUniform), 4.0);
  EXPECT_NEAR(compression_ratio(QuantConfig::parse("8-8-8-4"), CompressionMode::kGeometric),
              32.0 / 7.0, 1e-12);
  EXPECT_EQ(compression_ratio(QuantConfig::uniform(32, 4), CompressionMode::kGeometric), 1.0);
  EXPECT_THROW(compression_ratio(QuantConfig::parse("8-4"), CompressionMode::kUniform),
               DomainError);
  const std::vector<int64_t> params{100, 300};
  EXPECT_NEAR(compression_ratio(QuantConfig::parse("8-4"), CompressionMode::kSizeWeighted,
                                params),
              32.0 * 400 / (800 + 1200), 1e-12);
}

TEST(Quant, CalibrationZeroNetwork) {
  const auto net = mnist_net();
  auto w = init_weights(net, 0);
  for (auto& [_, p] : w.layers) {
    for (auto& v : p.weight.data()) v = 0.0f;
    for (auto& v : p.bias.data()) v = 0.0f;
  }
  const auto stats = calibrate(net, w, blobs(10));
  for (const auto& r : stats.layers) {
    EXPECT_EQ(r.min, 0.0);
    EXPECT_EQ(r.max, 0.0);
  }
}

TEST(Quant, CalibrationReluLayersAreNonNegative) {
  const auto net = mnist_net();
  const auto w = init_weights(net, 1);
  const auto stats = calibrate(net, w, blobs(32));
  ASSERT_EQ(stats.layers.size(), 4u);
  for (size_t i = 0; i < 3; ++i) EXPECT_GE(stats.layers[i].min, 0.0);
  EXPECT_EQ(stats.sample_count, 32);
  EXPECT_THROW(calibrate(net, w, blobs(32).subset({})), DomainError);
}

TEST(Quant, SingleSampleCalibrationMatchesExtrema) {
  const auto net = mnist_net();
  const auto w = init_weights(net, 2);
  const std::vector<size_t> first{0};
  const auto data = blobs(10).subset(first);
  std::vector<LayerRange> seen(4, {1e30, -1e30});
  forward(net, w, data.batch(0, 1), [&](size_t slot, std::span<float> a) {
    for (float v : a) {
      seen[slot].min = std::min(seen[slot].min, double(v));
      seen[slot].max = std::max(seen[slot].max, double(v));
    }
  });
  const auto stats = calibrate(net, w, data);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(stats.layers[i].min, seen[i].min);
    EXPECT_EQ(stats.layers[i].max, seen[i].max);
  }
}

TEST(Quant, All32IsBitIdentical) {
  const auto net = mnist_net();
  const auto w = init_weights(net, 4);
  const auto data = blobs(16);
  const auto stats = calibrate(net, w, data);
  const QuantizedModel m(net, w, QuantConfig::uniform(32, 4), stats);
  EXPECT_EQ(m.forward(data.images), forward(net, w, data.images));
  EXPECT_THROW(QuantizedModel(net, w, QuantConfig::uniform(8, 3), stats), DomainError);
}

TEST(Quant, LowerBitsDeviateMore) {
  const auto net = mnist_net();
  const auto w = init_weights(net, 4);
  const auto data = blobs(16);
  const auto stats = calibrate(net, w, data);
  const Tensor ref = forward(net, w, data.images);
  double prev = -1.0;
  for (int bits : {16, 8, 4, 2}) {
    const Tensor y = QuantizedModel(net, w, QuantConfig::uniform(bits, 4), stats)
                         .forward(data.images);
    double err = 0.0;
    for (int64_t i = 0; i < y.numel(); ++i) err += std::pow(double(y[i]) - ref[i], 2);
    EXPECT_GT(err, prev) << bits;
    prev = err;
  }
}
