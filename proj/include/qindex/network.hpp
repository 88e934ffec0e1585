#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qindex/tensor.hpp"

namespace qindex {

enum class LayerKind { kConv2d, kMaxPool2d, kRelu, kFlatten, kFullyConnected };

const char* layer_kind_name(LayerKind kind);

struct LayerDef {
  LayerKind kind = LayerKind::kRelu;
  int64_t out_channels = 0;  // conv2d
  int64_t kernel = 0;        // conv2d, maxpool2d
  int64_t stride = 1;        // conv2d, maxpool2d
  int64_t padding = 0;       // conv2d
  int64_t units = 0;         // fully_connected

  bool quantizable() const {
    return kind == LayerKind::kConv2d || kind == LayerKind::kFullyConnected;
  }

  static LayerDef conv2d(int64_t filters, int64_t kernel, int64_t stride = 1,
                         int64_t padding = 1);
  static LayerDef max_pool(int64_t kernel = 2, int64_t stride = 2);
  static LayerDef relu();
  static LayerDef flatten();
  static LayerDef fully_connected(int64_t units);
};

struct NetworkDef {
  std::vector<LayerDef> layers;
  Shape input_shape;  // per-sample (channels, height, width)
  int64_t num_classes = 0;

  // conv(32,3x3,pad 1)+ReLU -> maxpool 2x2 -> conv(64,3x3,pad 1)+ReLU ->
  // maxpool 2x2 -> fc(128)+ReLU -> fc(num_classes)
  static NetworkDef simple_cnn(Shape input_shape, int64_t num_classes);

  // Per-sample output shape of every layer. Throws DomainError naming the
  // first layer whose parameters do not chain.
  std::vector<Shape> output_shapes() const;

  // Layer indices of conv2d / fully_connected layers, in order.
  std::vector<size_t> quantizable_layers() const;

  // Canonical text form; its FNV-1a hash identifies weight files.
  std::string architecture_string() const;
  std::string architecture_hash() const;
};

struct LayerParams {
  Tensor weight;
  Tensor bias;
};

// Parameters keyed by layer index.
struct WeightStore {
  std::map<size_t, LayerParams> layers;

  // Checks every quantizable layer has weight/bias of the expected shapes.
  void validate(const NetworkDef& net) const;

  friend bool operator==(const WeightStore& a, const WeightStore& b);
};

// Expected parameter shapes for a quantizable layer.
Shape weight_shape(const NetworkDef& net, size_t layer);
Shape bias_shape(const NetworkDef& net, size_t layer);

// Uniform fan-in initialisation: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for both
// weights and biases, drawn layer by layer from a seeded mt19937_64.
WeightStore init_weights(const NetworkDef& net, uint64_t seed);

// Called once per quantizable layer, in order, with that layer's output. A
// ReLU directly following the layer is fused, so the hook sees the
// post-activation values. The hook may modify the activations in place.
using ActivationHook = std::function<void(size_t slot, std::span<float> activations)>;

// Logits of shape (batch, num_classes).
Tensor forward(const NetworkDef& net, const WeightStore& weights, const Tensor& batch,
               const ActivationHook& hook = {});

using ForwardFn = std::function<Tensor(const Tensor& batch)>;

// Argmax of each row, lowest class index on ties.
std::vector<int32_t> argmax_rows(const Tensor& logits);

struct LossAndGradients {
  double loss = 0.0;  // mean softmax cross-entropy over the batch
  WeightStore gradients;
  int64_t correct = 0;
};

// Forward + backward pass for a labelled batch.
LossAndGradients loss_and_gradients(const NetworkDef& net, const WeightStore& weights,
                                    const Tensor& batch, std::span<const int32_t> labels);

}  // namespace qindex
