#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qindex/dataset.hpp"
#include "qindex/network.hpp"

namespace qindex {

// Per-layer bit-widths for the quantizable layers, in network order. 32 is
// full-precision pass-through; 16/8/4/2 are simulated integer grids.
struct QuantConfig {
  std::vector<int> per_layer_bits;

  static QuantConfig uniform(int bits, size_t layers);
  // Parses the "b1-b2-...-bL" topology notation, e.g. "8-8-8-4".
  static QuantConfig parse(const std::string& text);
  std::string to_string() const;

  bool operator==(const QuantConfig&) const = default;
};

bool is_quantized_bits(int bits);  // {2, 4, 8, 16}
bool is_valid_bits(int bits);      // {2, 4, 8, 16, 32}

struct SymmetricQuantized {
  std::vector<int32_t> q;  // integer grid values in [-qmax, qmax]
  double scale = 0.0;
  Tensor dequantized;
};

// scale = max|w| / (2^(b-1) - 1), q = clamp(round(w / scale), -qmax, qmax),
// rounding half away from zero. All-zero input gives scale 0 and q = 0.
SymmetricQuantized quantize_weights_symmetric(const Tensor& w, int bits);

struct AffineParams {
  double scale = 0.0;
  int64_t zero_point = 0;
  int64_t qmax = 0;    // 2^b - 1
  double low = 0.0;    // calibrated minimum
  bool degenerate = false;
};

// Range is widened to include zero so that 0 is exactly representable.
// scale = (max - min) / (2^b - 1), zero_point = round(-min / scale).
AffineParams affine_params(double min, double max, int bits);

// Fake-quantizes in place: (clamp(round(x / scale) + zp, 0, qmax) - zp) * scale.
// A degenerate range (min == max) maps everything to min.
void fake_quantize_affine(std::span<float> x, const AffineParams& params);

Tensor quantize_activations_affine(const Tensor& x, double min, double max, int bits);

struct LayerRange {
  double min = 0.0;
  double max = 0.0;
};

// Activation ranges at each quantizable layer's output (after a fused ReLU).
struct CalibrationStats {
  std::vector<LayerRange> layers;
  int64_t sample_count = 0;
};

CalibrationStats calibrate(const NetworkDef& net, const WeightStore& weights,
                           const Dataset& calib_set, size_t batch_size = 128);

// Immutable fake-quantized model.
class QuantizedModel {
 public:
  QuantizedModel(const NetworkDef& net, const WeightStore& weights, QuantConfig config,
                 const CalibrationStats& stats);

  Tensor forward(const Tensor& batch) const;
  ForwardFn as_forward() const;

  const NetworkDef& network() const { return net_; }
  const WeightStore& weights() const { return weights_; }
  const QuantConfig& config() const { return config_; }
  // Scale of each layer's weight grid (0 for pass-through layers).
  const std::vector<double>& weight_scales() const { return weight_scales_; }
  const std::vector<AffineParams>& activation_params() const { return act_; }

 private:
  NetworkDef net_;
  WeightStore weights_;
  QuantConfig config_;
  std::vector<double> weight_scales_;
  std::vector<AffineParams> act_;
};

QuantizedModel apply_quantization(const NetworkDef& net, const WeightStore& weights,
                                  const QuantConfig& config,
                                  const CalibrationStats& stats);

enum class CompressionMode {
  kUniform,    // 32 / b, all layers equal
  kGeometric,  // 32 / mean(bits), unweighted across layers
  kSizeWeighted,  // 32 / parameter-count-weighted mean bits
};

double compression_ratio(const QuantConfig& config, CompressionMode mode);

// kSizeWeighted needs the per-layer parameter counts.
double compression_ratio(const QuantConfig& config, CompressionMode mode,
                         std::span<const int64_t> layer_params);

std::vector<int64_t> layer_parameter_counts(const NetworkDef& net);

}  // namespace qindex
