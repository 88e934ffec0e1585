#include "qindex/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "qindex/errors.hpp"

namespace qindex {
namespace {

void require_quantized_bits(int bits) {
  if (!is_quantized_bits(bits)) {
    throw DomainError(fmt::format("bit-width {} not in {{2, 4, 8, 16}}", bits));
  }
}

}  // namespace

bool is_quantized_bits(int bits) {
  return bits == 2 || bits == 4 || bits == 8 || bits == 16;
}

bool is_valid_bits(int bits) { return bits == 32 || is_quantized_bits(bits); }

QuantConfig QuantConfig::uniform(int bits, size_t layers) {
  if (!is_valid_bits(bits)) {
    throw DomainError(fmt::format("bit-width {} not in {{2, 4, 8, 16, 32}}", bits));
  }
  return QuantConfig{std::vector<int>(layers, bits)};
}

QuantConfig QuantConfig::parse(const std::string& text) {
  QuantConfig c;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, '-')) {
    size_t used = 0;
    int bits = 0;
    try {
      bits = std::stoi(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size() || !is_valid_bits(bits)) {
      throw DomainError(fmt::format("invalid bit-width '{}' in topology '{}'", part, text));
    }
    c.per_layer_bits.push_back(bits);
  }
  if (c.per_layer_bits.empty() || (!text.empty() && text.back() == '-')) {
    throw DomainError(fmt::format("invalid topology '{}'", text));
  }
  return c;
}

std::string QuantConfig::to_string() const {
  return fmt::format("{}", fmt::join(per_layer_bits, "-"));
}

SymmetricQuantized quantize_weights_symmetric(const Tensor& w, int bits) {
  require_quantized_bits(bits);
  if (!w.all_finite()) throw DomainError("weights contain non-finite values");
  const int64_t qmax = (int64_t{1} << (bits - 1)) - 1;
  double max_abs = 0.0;
  for (float v : w.data()) max_abs = std::max(max_abs, std::fabs(static_cast<double>(v)));

  SymmetricQuantized out;
  out.q.assign(static_cast<size_t>(w.numel()), 0);
  out.dequantized = Tensor(w.shape());
  if (max_abs == 0.0) return out;
  out.scale = max_abs / static_cast<double>(qmax);
  for (int64_t i = 0; i < w.numel(); ++i) {
    const double r = std::round(static_cast<double>(w[i]) / out.scale);
    const int64_t q = std::clamp(static_cast<int64_t>(r), -qmax, qmax);
    out.q[static_cast<size_t>(i)] = static_cast<int32_t>(q);
    out.dequantized[i] = static_cast<float>(static_cast<double>(q) * out.scale);
  }
  return out;
}

AffineParams affine_params(double min, double max, int bits) {
  require_quantized_bits(bits);
  if (!(min <= max)) {
    throw DomainError(fmt::format("activation range [{}, {}] is inverted", min, max));
  }
  AffineParams p;
  p.qmax = (int64_t{1} << bits) - 1;
  p.low = min;
  if (min == max) {
    p.degenerate = true;
    return p;
  }
  const double lo = std::min(min, 0.0);
  const double hi = std::max(max, 0.0);
  p.scale = (hi - lo) / static_cast<double>(p.qmax);
  p.zero_point = std::clamp(static_cast<int64_t>(std::round(-lo / p.scale)), int64_t{0},
                            p.qmax);
  return p;
}

void fake_quantize_affine(std::span<float> x, const AffineParams& p) {
  if (p.degenerate) {
    std::fill(x.begin(), x.end(), static_cast<float>(p.low));
    return;
  }
  const double zp = static_cast<double>(p.zero_point);
  const double qmax = static_cast<double>(p.qmax);
  for (auto& v : x) {
    const double q = std::clamp(std::round(static_cast<double>(v) / p.scale) + zp, 0.0, qmax);
    v = static_cast<float>((q - zp) * p.scale);
  }
}

Tensor quantize_activations_affine(const Tensor& x, double min, double max, int bits) {
  Tensor out = x;
  fake_quantize_affine(out.data(), affine_params(min, max, bits));
  return out;
}

CalibrationStats calibrate(const NetworkDef& net, const WeightStore& weights,
                           const Dataset& calib_set, size_t batch_size) {
  if (calib_set.size() == 0) throw DomainError("calibration set is empty");
  CalibrationStats stats;
  const size_t slots = net.quantizable_layers().size();
  stats.layers.assign(slots, LayerRange{std::numeric_limits<double>::infinity(),
                                        -std::numeric_limits<double>::infinity()});
  const ActivationHook observe = [&](size_t slot, std::span<float> act) {
    auto& r = stats.layers[slot];
    for (float v : act) {
      r.min = std::min(r.min, static_cast<double>(v));
      r.max = std::max(r.max, static_cast<double>(v));
    }
  };
  for (size_t begin = 0; begin < calib_set.size(); begin += batch_size) {
    const size_t end = std::min(begin + batch_size, calib_set.size());
    forward(net, weights, calib_set.batch(begin, end), observe);
  }
  stats.sample_count = static_cast<int64_t>(calib_set.size());
  return stats;
}

QuantizedModel::QuantizedModel(const NetworkDef& net, const WeightStore& weights,
                               QuantConfig config, const CalibrationStats& stats)
    : net_(net), weights_(weights), config_(std::move(config)) {
  const auto layers = net_.quantizable_layers();
  if (config_.per_layer_bits.size() != layers.size()) {
    throw DomainError(fmt::format("config '{}' has {} entries, network has {} "
                                  "quantizable layers",
                                  config_.to_string(), config_.per_layer_bits.size(),
                                  layers.size()));
  }
  weights_.validate(net_);
  weight_scales_.assign(layers.size(), 0.0);
  act_.assign(layers.size(), AffineParams{});
  for (size_t slot = 0; slot < layers.size(); ++slot) {
    const int bits = config_.per_layer_bits[slot];
    if (!is_valid_bits(bits)) {
      throw DomainError(fmt::format("bit-width {} not in {{2, 4, 8, 16, 32}}", bits));
    }
    if (bits == 32) continue;
    if (slot >= stats.layers.size()) {
      throw DomainError(fmt::format("no calibration range for quantizable layer {}", slot));
    }
    auto& p = weights_.layers.at(layers[slot]);
    auto sq = quantize_weights_symmetric(p.weight, bits);
    weight_scales_[slot] = sq.scale;
    p.weight = std::move(sq.dequantized);
    act_[slot] = affine_params(stats.layers[slot].min, stats.layers[slot].max, bits);
  }
}

Tensor QuantizedModel::forward(const Tensor& batch) const {
  const ActivationHook hook = [this](size_t slot, std::span<float> act) {
    if (config_.per_layer_bits[slot] != 32) fake_quantize_affine(act, act_[slot]);
  };
  return qindex::forward(net_, weights_, batch, hook);
}

ForwardFn QuantizedModel::as_forward() const {
  return [this](const Tensor& batch) { return forward(batch); };
}

QuantizedModel apply_quantization(const NetworkDef& net, const WeightStore& weights,
                                  const QuantConfig& config,
                                  const CalibrationStats& stats) {
  return QuantizedModel(net, weights, config, stats);
}

double compression_ratio(const QuantConfig& config, CompressionMode mode) {
  if (mode == CompressionMode::kSizeWeighted) {
    throw DomainError("size-weighted compression needs per-layer parameter counts");
  }
  return compression_ratio(config, mode, {});
}

double compression_ratio(const QuantConfig& config, CompressionMode mode,
                         std::span<const int64_t> layer_params) {
  const auto& bits = config.per_layer_bits;
  if (bits.empty()) throw DomainError("empty quantization config");
  for (int b : bits) {
    if (!is_valid_bits(b)) throw DomainError(fmt::format("invalid bit-width {}", b));
  }
  switch (mode) {
    case CompressionMode::kUniform:
      if (std::adjacent_find(bits.begin(), bits.end(), std::not_equal_to<>()) !=
          bits.end()) {
        throw DomainError(fmt::format("uniform compression of heterogeneous config '{}'",
                                      config.to_string()));
      }
      return 32.0 / bits.front();
    case CompressionMode::kGeometric: {
      const double mean = std::accumulate(bits.begin(), bits.end(), 0.0) / bits.size();
      return 32.0 / mean;
    }
    case CompressionMode::kSizeWeighted: {
      if (layer_params.size() != bits.size()) {
        throw DomainError("parameter counts do not match config length");
      }
      double total = 0.0, weighted = 0.0;
      for (size_t i = 0; i < bits.size(); ++i) {
        total += static_cast<double>(layer_params[i]);
        weighted += static_cast<double>(layer_params[i]) * bits[i];
      }
      if (!(total > 0.0)) throw DomainError("parameter counts must be positive");
      return 32.0 * total / weighted;
    }
  }
  throw DomainError("unknown compression mode");
}

std::vector<int64_t> layer_parameter_counts(const NetworkDef& net) {
  std::vector<int64_t> out;
  for (size_t i : net.quantizable_layers()) {
    out.push_back(shape_numel(weight_shape(net, i)) + shape_numel(bias_shape(net, i)));
  }
  return out;
}

}  // namespace qindex
