#include "qindex/network.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "qindex/errors.hpp"
#include "qindex/hash.hpp"
#include "qindex/kernels.hpp"

namespace qindex {
namespace {

std::string layer_tag(const NetworkDef& net, size_t i) {
  return fmt::format("layer {} ({})", i, layer_kind_name(net.layers[i].kind));
}

kernels::ConvGeometry conv_geometry(const LayerDef& l, const Shape& in) {
  kernels::ConvGeometry g;
  g.in_channels = in[0];
  g.in_height = in[1];
  g.in_width = in[2];
  g.out_channels = l.out_channels;
  g.kernel = l.kernel;
  g.stride = l.stride;
  g.padding = l.padding;
  return g;
}

kernels::PoolGeometry pool_geometry(const LayerDef& l, const Shape& in) {
  kernels::PoolGeometry g;
  g.channels = in[0];
  g.in_height = in[1];
  g.in_width = in[2];
  g.kernel = l.kernel;
  g.stride = l.stride;
  return g;
}

Shape with_batch(int64_t batch, const Shape& s) {
  Shape out{batch};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

void check_batch(const NetworkDef& net, const Tensor& batch) {
  const Shape& s = batch.shape();
  bool ok = s.size() == net.input_shape.size() + 1;
  for (size_t i = 0; ok && i < net.input_shape.size(); ++i) {
    ok = s[i + 1] == net.input_shape[i];
  }
  if (!ok || s.empty() || s[0] <= 0) {
    throw DomainError(fmt::format("layer 0 ({}): input batch shape {} does not match "
                                  "(batch, {})",
                                  net.layers.empty() ? "input" :
                                  layer_kind_name(net.layers[0].kind),
                                  shape_to_string(s),
                                  shape_to_string(net.input_shape).substr(1)));
  }
}

void check_params(const NetworkDef& net, const WeightStore& weights, size_t i) {
  auto it = weights.layers.find(i);
  if (it == weights.layers.end()) {
    throw DomainError(fmt::format("{}: missing parameters", layer_tag(net, i)));
  }
  if (it->second.weight.shape() != weight_shape(net, i) ||
      it->second.bias.shape() != bias_shape(net, i)) {
    throw DomainError(fmt::format(
        "{}: parameter shapes {} / {} do not match expected {} / {}", layer_tag(net, i),
        shape_to_string(it->second.weight.shape()),
        shape_to_string(it->second.bias.shape()), shape_to_string(weight_shape(net, i)),
        shape_to_string(bias_shape(net, i))));
  }
}

}  // namespace

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d:
      return "conv2d";
    case LayerKind::kMaxPool2d:
      return "maxpool2d";
    case LayerKind::kRelu:
      return "relu";
    case LayerKind::kFlatten:
      return "flatten";
    case LayerKind::kFullyConnected:
      return "fully_connected";
  }
  return "?";
}

LayerDef LayerDef::conv2d(int64_t filters, int64_t kernel, int64_t stride,
                          int64_t padding) {
  LayerDef l;
  l.kind = LayerKind::kConv2d;
  l.out_channels = filters;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  return l;
}

LayerDef LayerDef::max_pool(int64_t kernel, int64_t stride) {
  LayerDef l;
  l.kind = LayerKind::kMaxPool2d;
  l.kernel = kernel;
  l.stride = stride;
  return l;
}

LayerDef LayerDef::relu() { return LayerDef{}; }

LayerDef LayerDef::flatten() {
  LayerDef l;
  l.kind = LayerKind::kFlatten;
  return l;
}

LayerDef LayerDef::fully_connected(int64_t units) {
  LayerDef l;
  l.kind = LayerKind::kFullyConnected;
  l.units = units;
  return l;
}

NetworkDef NetworkDef::simple_cnn(Shape input_shape, int64_t num_classes) {
  NetworkDef net;
  net.input_shape = std::move(input_shape);
  net.num_classes = num_classes;
  net.layers = {LayerDef::conv2d(32, 3),    LayerDef::relu(),
                LayerDef::max_pool(2, 2),   LayerDef::conv2d(64, 3),
                LayerDef::relu(),           LayerDef::max_pool(2, 2),
                LayerDef::flatten(),        LayerDef::fully_connected(128),
                LayerDef::relu(),           LayerDef::fully_connected(num_classes)};
  return net;
}

std::vector<Shape> NetworkDef::output_shapes() const {
  if (input_shape.empty()) throw DomainError("network input shape is empty");
  shape_numel(input_shape);
  std::vector<Shape> shapes;
  Shape cur = input_shape;
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerDef& l = layers[i];
    const auto fail = [&](const std::string& why) {
      return DomainError(fmt::format("layer {} ({}): {} (input {})", i,
                                     layer_kind_name(l.kind), why,
                                     shape_to_string(cur)));
    };
    switch (l.kind) {
      case LayerKind::kConv2d: {
        if (cur.size() != 3) throw fail("expects a (channels, height, width) input");
        if (l.out_channels <= 0 || l.kernel <= 0 || l.stride <= 0 || l.padding < 0) {
          throw fail("filters, kernel and stride must be positive");
        }
        const auto g = conv_geometry(l, cur);
        if (g.out_height() <= 0 || g.out_width() <= 0) throw fail("kernel larger than input");
        cur = {l.out_channels, g.out_height(), g.out_width()};
        break;
      }
      case LayerKind::kMaxPool2d: {
        if (cur.size() != 3) throw fail("expects a (channels, height, width) input");
        if (l.kernel <= 0 || l.stride <= 0) throw fail("kernel and stride must be positive");
        const auto g = pool_geometry(l, cur);
        if (g.out_height() <= 0 || g.out_width() <= 0) throw fail("window larger than input");
        cur = {cur[0], g.out_height(), g.out_width()};
        break;
      }
      case LayerKind::kRelu:
        break;
      case LayerKind::kFlatten:
        cur = {shape_numel(cur)};
        break;
      case LayerKind::kFullyConnected:
        if (l.units <= 0) throw fail("output units must be positive");
        cur = {l.units};
        break;
    }
    shapes.push_back(cur);
  }
  if (shapes.empty() || shapes.back() != Shape{num_classes}) {
    throw DomainError(fmt::format("network output {} does not match {} classes",
                                  shapes.empty() ? "()" : shape_to_string(shapes.back()),
                                  num_classes));
  }
  return shapes;
}

std::vector<size_t> NetworkDef::quantizable_layers() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].quantizable()) out.push_back(i);
  }
  return out;
}

std::string NetworkDef::architecture_string() const {
  std::ostringstream s;
  s << "input" << shape_to_string(input_shape) << ";classes=" << num_classes;
  for (const auto& l : layers) {
    s << ';' << layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::kConv2d:
        s << '(' << l.out_channels << ',' << l.kernel << ',' << l.stride << ','
          << l.padding << ')';
        break;
      case LayerKind::kMaxPool2d:
        s << '(' << l.kernel << ',' << l.stride << ')';
        break;
      case LayerKind::kFullyConnected:
        s << '(' << l.units << ')';
        break;
      default:
        break;
    }
  }
  return s.str();
}

std::string NetworkDef::architecture_hash() const {
  return fnv1a_hex(architecture_string());
}

Shape weight_shape(const NetworkDef& net, size_t layer) {
  const auto shapes = net.output_shapes();
  const Shape& in = layer == 0 ? net.input_shape : shapes[layer - 1];
  const LayerDef& l = net.layers.at(layer);
  switch (l.kind) {
    case LayerKind::kConv2d:
      return {l.out_channels, in[0], l.kernel, l.kernel};
    case LayerKind::kFullyConnected:
      return {l.units, shape_numel(in)};
    default:
      throw DomainError(fmt::format("{} has no parameters", layer_tag(net, layer)));
  }
}

Shape bias_shape(const NetworkDef& net, size_t layer) {
  const LayerDef& l = net.layers.at(layer);
  switch (l.kind) {
    case LayerKind::kConv2d:
      return {l.out_channels};
    case LayerKind::kFullyConnected:
      return {l.units};
    default:
      throw DomainError(fmt::format("{} has no parameters", layer_tag(net, layer)));
  }
}

void WeightStore::validate(const NetworkDef& net) const {
  const auto q = net.quantizable_layers();
  for (size_t i : q) check_params(net, *this, i);
  if (layers.size() != q.size()) {
    throw DomainError(fmt::format("weight store has {} layers, network has {} "
                                  "parameterised layers",
                                  layers.size(), q.size()));
  }
}

bool operator==(const WeightStore& a, const WeightStore& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (const auto& [idx, p] : a.layers) {
    auto it = b.layers.find(idx);
    if (it == b.layers.end()) return false;
    if (!(p.weight == it->second.weight) || !(p.bias == it->second.bias)) return false;
  }
  return true;
}

WeightStore init_weights(const NetworkDef& net, uint64_t seed) {
  net.output_shapes();
  std::mt19937_64 rng(seed);
  WeightStore store;
  for (size_t i : net.quantizable_layers()) {
    const Shape ws = weight_shape(net, i);
    const int64_t fan_in = shape_numel(ws) / ws[0];
    const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    std::uniform_real_distribution<float> dist(-bound, bound);
    LayerParams p{Tensor(ws), Tensor(bias_shape(net, i))};
    for (auto& v : p.weight.data()) v = dist(rng);
    for (auto& v : p.bias.data()) v = dist(rng);
    store.layers.emplace(i, std::move(p));
  }
  return store;
}

Tensor forward(const NetworkDef& net, const WeightStore& weights, const Tensor& batch,
               const ActivationHook& hook) {
  const auto shapes = net.output_shapes();
  check_batch(net, batch);
  const int64_t n = batch.dim(0);
  Tensor cur = batch;
  Shape cur_shape = net.input_shape;
  size_t slot = 0;
  long pending = -1;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const LayerDef& l = net.layers[i];
    Tensor next;
    switch (l.kind) {
      case LayerKind::kConv2d: {
        check_params(net, weights, i);
        const auto& p = weights.layers.at(i);
        const auto g = conv_geometry(l, cur_shape);
        next = Tensor(with_batch(n, shapes[i]));
        kernels::conv2d_forward<float>(g, n, cur.data(), p.weight.data(), p.bias.data(),
                                       next.data());
        break;
      }
      case LayerKind::kFullyConnected: {
        check_params(net, weights, i);
        const auto& p = weights.layers.at(i);
        const int64_t in_features = shape_numel(cur_shape);
        next = Tensor(with_batch(n, shapes[i]));
        kernels::fc_forward<float>(n, in_features, l.units, cur.data(), p.weight.data(),
                                   p.bias.data(), next.data());
        break;
      }
      case LayerKind::kMaxPool2d: {
        const auto g = pool_geometry(l, cur_shape);
        next = Tensor(with_batch(n, shapes[i]));
        kernels::maxpool_forward<float>(g, n, cur.data(), next.data(), {});
        break;
      }
      case LayerKind::kRelu:
        next = std::move(cur);
        kernels::relu_forward<float>(next.data());
        break;
      case LayerKind::kFlatten:
        next = cur.reshaped(with_batch(n, shapes[i]));
        break;
    }
    cur = std::move(next);
    cur_shape = shapes[i];
    if (l.quantizable()) {
      const bool fused = i + 1 < net.layers.size() &&
                         net.layers[i + 1].kind == LayerKind::kRelu;
      if (fused) {
        pending = static_cast<long>(slot);
      } else if (hook) {
        hook(slot, cur.data());
      }
      ++slot;
    } else if (l.kind == LayerKind::kRelu && pending >= 0) {
      if (hook) hook(static_cast<size_t>(pending), cur.data());
      pending = -1;
    }
  }
  return cur;
}

std::vector<int32_t> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw DomainError("argmax expects a (batch, classes) tensor");
  const int64_t n = logits.dim(0), k = logits.dim(1);
  std::vector<int32_t> out(static_cast<size_t>(n));
  for (int64_t r = 0; r < n; ++r) {
    int64_t best = 0;
    for (int64_t c = 1; c < k; ++c) {
      if (logits[r * k + c] > logits[r * k + best]) best = c;
    }
    out[static_cast<size_t>(r)] = static_cast<int32_t>(best);
  }
  return out;
}

LossAndGradients loss_and_gradients(const NetworkDef& net, const WeightStore& weights,
                                    const Tensor& batch,
                                    std::span<const int32_t> labels) {
  const auto shapes = net.output_shapes();
  check_batch(net, batch);
  const int64_t n = batch.dim(0);
  if (static_cast<int64_t>(labels.size()) != n) {
    throw DomainError("label count does not match batch size");
  }

  // acts[i] is the input of layer i; acts.back() the logits.
  std::vector<Tensor> acts;
  std::vector<std::vector<int32_t>> pool_index(net.layers.size());
  acts.push_back(batch);
  Shape cur_shape = net.input_shape;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const LayerDef& l = net.layers[i];
    const Tensor& in = acts.back();
    Tensor out(with_batch(n, shapes[i]));
    switch (l.kind) {
      case LayerKind::kConv2d: {
        check_params(net, weights, i);
        const auto& p = weights.layers.at(i);
        kernels::conv2d_forward<float>(conv_geometry(l, cur_shape), n, in.data(),
                                       p.weight.data(), p.bias.data(), out.data());
        break;
      }
      case LayerKind::kFullyConnected: {
        check_params(net, weights, i);
        const auto& p = weights.layers.at(i);
        kernels::fc_forward<float>(n, shape_numel(cur_shape), l.units, in.data(),
                                   p.weight.data(), p.bias.data(), out.data());
        break;
      }
      case LayerKind::kMaxPool2d:
        pool_index[i].resize(static_cast<size_t>(out.numel()));
        kernels::maxpool_forward<float>(pool_geometry(l, cur_shape), n, in.data(),
                                        out.data(), pool_index[i]);
        break;
      case LayerKind::kRelu:
        std::copy(in.data().begin(), in.data().end(), out.data().begin());
        kernels::relu_forward<float>(out.data());
        break;
      case LayerKind::kFlatten:
        out = in.reshaped(with_batch(n, shapes[i]));
        break;
    }
    acts.push_back(std::move(out));
    cur_shape = shapes[i];
  }

  LossAndGradients result;
  const Tensor& logits = acts.back();
  const int64_t k = net.num_classes;
  Tensor grad(logits.shape());
  double loss = 0.0;
  for (int64_t r = 0; r < n; ++r) {
    const int32_t y = labels[static_cast<size_t>(r)];
    if (y < 0 || y >= k) throw DomainError(fmt::format("label {} out of range", y));
    double mx = logits[r * k];
    int64_t best = 0;
    for (int64_t c = 1; c < k; ++c) {
      if (logits[r * k + c] > mx) {
        mx = logits[r * k + c];
        best = c;
      }
    }
    if (best == y) ++result.correct;
    double sum = 0.0;
    for (int64_t c = 0; c < k; ++c) sum += std::exp(logits[r * k + c] - mx);
    const double log_z = mx + std::log(sum);
    loss += log_z - logits[r * k + y];
    for (int64_t c = 0; c < k; ++c) {
      const double prob = std::exp(logits[r * k + c] - log_z);
      grad[r * k + c] = static_cast<float>((prob - (c == y ? 1.0 : 0.0)) / n);
    }
  }
  result.loss = loss / n;

  for (size_t i = net.layers.size(); i-- > 0;) {
    const LayerDef& l = net.layers[i];
    const Tensor& in = acts[i];
    const Shape& in_shape = i == 0 ? net.input_shape : shapes[i - 1];
    const bool need_input_grad = i > 0;
    Tensor in_grad(in.shape());
    switch (l.kind) {
      case LayerKind::kConv2d: {
        const auto& p = weights.layers.at(i);
        LayerParams g{Tensor(p.weight.shape()), Tensor(p.bias.shape())};
        kernels::conv2d_backward<float>(
            conv_geometry(l, in_shape), n, in.data(), p.weight.data(), grad.data(),
            need_input_grad ? in_grad.data() : std::span<float>{}, g.weight.data(),
            g.bias.data());
        result.gradients.layers.emplace(i, std::move(g));
        break;
      }
      case LayerKind::kFullyConnected: {
        const auto& p = weights.layers.at(i);
        LayerParams g{Tensor(p.weight.shape()), Tensor(p.bias.shape())};
        kernels::fc_backward<float>(n, shape_numel(in_shape), l.units, in.data(),
                                    p.weight.data(), grad.data(),
                                    need_input_grad ? in_grad.data() : std::span<float>{},
                                    g.weight.data(), g.bias.data());
        result.gradients.layers.emplace(i, std::move(g));
        break;
      }
      case LayerKind::kMaxPool2d:
        kernels::maxpool_backward<float>(pool_index[i], grad.data(), in_grad.data());
        break;
      case LayerKind::kRelu:
        kernels::relu_backward<float>(acts[i + 1].data(), grad.data(), in_grad.data());
        break;
      case LayerKind::kFlatten:
        in_grad = grad.reshaped(in.shape());
        break;
    }
    if (!need_input_grad) break;
    grad = std::move(in_grad);
  }
  return result;
}

}  // namespace qindex
