#pragma once

// Layer kernels shared by inference, training and gradient checks. They are
// templated on the scalar type so the checks can run in double precision.
// Every output element is accumulated in a fixed order that does not depend
// on the batch size, which keeps batched and per-sample forwards bit-equal.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace qindex::kernels {

struct ConvGeometry {
  int64_t in_channels = 0;
  int64_t in_height = 0;
  int64_t in_width = 0;
  int64_t out_channels = 0;
  int64_t kernel = 0;
  int64_t stride = 1;
  int64_t padding = 0;

  int64_t out_height() const { return (in_height + 2 * padding - kernel) / stride + 1; }
  int64_t out_width() const { return (in_width + 2 * padding - kernel) / stride + 1; }
  int64_t patch() const { return in_channels * kernel * kernel; }
  int64_t positions() const { return out_height() * out_width(); }
  int64_t in_size() const { return in_channels * in_height * in_width; }
  int64_t out_size() const { return out_channels * positions(); }
};

// y += a * x
template <typename T>
inline void axpy(T a, const T* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// col[r][p], r = (c, ky, kx), p = (oy, ox)
template <typename T>
void im2col(const ConvGeometry& g, const T* in, T* col) {
  const int64_t oh = g.out_height(), ow = g.out_width();
  for (int64_t c = 0; c < g.in_channels; ++c) {
    for (int64_t ky = 0; ky < g.kernel; ++ky) {
      for (int64_t kx = 0; kx < g.kernel; ++kx) {
        T* row = col + ((c * g.kernel + ky) * g.kernel + kx) * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * g.stride - g.padding + ky;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * g.stride - g.padding + kx;
            const bool inside = iy >= 0 && iy < g.in_height && ix >= 0 && ix < g.in_width;
            row[oy * ow + ox] =
                inside ? in[(c * g.in_height + iy) * g.in_width + ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, T* in_grad) {
  const int64_t oh = g.out_height(), ow = g.out_width();
  for (int64_t c = 0; c < g.in_channels; ++c) {
    for (int64_t ky = 0; ky < g.kernel; ++ky) {
      for (int64_t kx = 0; kx < g.kernel; ++kx) {
        const T* row = col + ((c * g.kernel + ky) * g.kernel + kx) * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= g.in_height) continue;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * g.stride - g.padding + kx;
            if (ix < 0 || ix >= g.in_width) continue;
            in_grad[(c * g.in_height + iy) * g.in_width + ix] += row[oy * ow + ox];
          }
        }
      }
    }
  }
}

// in: [N, Cin, H, W], weight: [Cout, Cin, K, K], bias: [Cout],
// out: [N, Cout, OH, OW]
template <typename T>
void conv2d_forward(const ConvGeometry& g, int64_t batch, std::span<const T> in,
                    std::span<const T> weight, std::span<const T> bias,
                    std::span<T> out) {
  const int64_t patch = g.patch(), pos = g.positions();
  std::vector<T> col(static_cast<size_t>(patch * pos));
  for (int64_t n = 0; n < batch; ++n) {
    im2col(g, in.data() + n * g.in_size(), col.data());
    T* y = out.data() + n * g.out_size();
    for (int64_t co = 0; co < g.out_channels; ++co) {
      T* yrow = y + co * pos;
      std::fill(yrow, yrow + pos, bias[co]);
      const T* wrow = weight.data() + co * patch;
      for (int64_t r = 0; r < patch; ++r) axpy(wrow[r], col.data() + r * pos, yrow, pos);
    }
  }
}

// Accumulates into weight_grad and bias_grad; overwrites in_grad when given.
template <typename T>
void conv2d_backward(const ConvGeometry& g, int64_t batch, std::span<const T> in,
                     std::span<const T> weight, std::span<const T> out_grad,
                     std::span<T> in_grad, std::span<T> weight_grad,
                     std::span<T> bias_grad) {
  const int64_t patch = g.patch(), pos = g.positions();
  std::vector<T> col(static_cast<size_t>(patch * pos));
  std::vector<T> col_t(static_cast<size_t>(patch * pos));
  std::vector<T> col_grad(static_cast<size_t>(patch * pos));
  if (!in_grad.empty()) std::fill(in_grad.begin(), in_grad.end(), T(0));
  for (int64_t n = 0; n < batch; ++n) {
    im2col(g, in.data() + n * g.in_size(), col.data());
    for (int64_t r = 0; r < patch; ++r) {
      for (int64_t p = 0; p < pos; ++p) col_t[p * patch + r] = col[r * pos + p];
    }
    const T* gy = out_grad.data() + n * g.out_size();
    for (int64_t co = 0; co < g.out_channels; ++co) {
      const T* gyrow = gy + co * pos;
      T* gw = weight_grad.data() + co * patch;
      T bsum = 0;
      for (int64_t p = 0; p < pos; ++p) {
        bsum += gyrow[p];
        axpy(gyrow[p], col_t.data() + p * patch, gw, patch);
      }
      bias_grad[co] += bsum;
    }
    if (in_grad.empty()) continue;
    std::fill(col_grad.begin(), col_grad.end(), T(0));
    for (int64_t co = 0; co < g.out_channels; ++co) {
      const T* wrow = weight.data() + co * patch;
      const T* gyrow = gy + co * pos;
      for (int64_t r = 0; r < patch; ++r) axpy(wrow[r], gyrow, col_grad.data() + r * pos, pos);
    }
    col2im_add(g, col_grad.data(), in_grad.data() + n * g.in_size());
  }
}

// in: [N, I], weight: [O, I], bias: [O], out: [N, O]
template <typename T>
void fc_forward(int64_t batch, int64_t in_features, int64_t out_features,
                std::span<const T> in, std::span<const T> weight,
                std::span<const T> bias, std::span<T> out) {
  std::vector<T> wt(static_cast<size_t>(in_features * out_features));
  for (int64_t o = 0; o < out_features; ++o) {
    for (int64_t i = 0; i < in_features; ++i) {
      wt[i * out_features + o] = weight[o * in_features + i];
    }
  }
  for (int64_t n = 0; n < batch; ++n) {
    T* y = out.data() + n * out_features;
    std::copy(bias.begin(), bias.end(), y);
    const T* x = in.data() + n * in_features;
    for (int64_t i = 0; i < in_features; ++i) {
      if (x[i] != T(0)) axpy(x[i], wt.data() + i * out_features, y, out_features);
    }
  }
}

template <typename T>
void fc_backward(int64_t batch, int64_t in_features, int64_t out_features,
                 std::span<const T> in, std::span<const T> weight,
                 std::span<const T> out_grad, std::span<T> in_grad,
                 std::span<T> weight_grad, std::span<T> bias_grad) {
  if (!in_grad.empty()) std::fill(in_grad.begin(), in_grad.end(), T(0));
  for (int64_t n = 0; n < batch; ++n) {
    const T* x = in.data() + n * in_features;
    const T* gy = out_grad.data() + n * out_features;
    for (int64_t o = 0; o < out_features; ++o) {
      const T go = gy[o];
      bias_grad[o] += go;
      if (go == T(0)) continue;
      axpy(go, x, weight_grad.data() + o * in_features, in_features);
      if (!in_grad.empty()) {
        axpy(go, weight.data() + o * in_features, in_grad.data() + n * in_features,
             in_features);
      }
    }
  }
}

template <typename T>
void relu_forward(std::span<T> x) {
  for (auto& v : x) v = v > T(0) ? v : T(0);
}

// grad_in = grad_out where the forward output was positive.
template <typename T>
void relu_backward(std::span<const T> out, std::span<const T> out_grad,
                   std::span<T> in_grad) {
  for (size_t i = 0; i < out.size(); ++i) {
    in_grad[i] = out[i] > T(0) ? out_grad[i] : T(0);
  }
}

struct PoolGeometry {
  int64_t channels = 0;
  int64_t in_height = 0;
  int64_t in_width = 0;
  int64_t kernel = 2;
  int64_t stride = 2;

  int64_t out_height() const { return (in_height - kernel) / stride + 1; }
  int64_t out_width() const { return (in_width - kernel) / stride + 1; }
  int64_t in_size() const { return channels * in_height * in_width; }
  int64_t out_size() const { return channels * out_height() * out_width(); }
};

// argmax receives the flat input index of each output's winner (first max).
template <typename T>
void maxpool_forward(const PoolGeometry& g, int64_t batch, std::span<const T> in,
                     std::span<T> out, std::span<int32_t> argmax) {
  const int64_t oh = g.out_height(), ow = g.out_width();
  for (int64_t n = 0; n < batch; ++n) {
    for (int64_t c = 0; c < g.channels; ++c) {
      const int64_t plane = (n * g.channels + c) * g.in_height * g.in_width;
      for (int64_t oy = 0; oy < oh; ++oy) {
        for (int64_t ox = 0; ox < ow; ++ox) {
          T best = -std::numeric_limits<T>::infinity();
          int64_t best_idx = -1;
          for (int64_t ky = 0; ky < g.kernel; ++ky) {
            for (int64_t kx = 0; kx < g.kernel; ++kx) {
              const int64_t idx =
                  plane + (oy * g.stride + ky) * g.in_width + ox * g.stride + kx;
              if (best_idx < 0 || in[idx] > best) {
                best = in[idx];
                best_idx = idx;
              }
            }
          }
          const int64_t o = ((n * g.channels + c) * oh + oy) * ow + ox;
          out[o] = best;
          if (!argmax.empty()) argmax[o] = static_cast<int32_t>(best_idx);
        }
      }
    }
  }
}

template <typename T>
void maxpool_backward(std::span<const int32_t> argmax, std::span<const T> out_grad,
                      std::span<T> in_grad) {
  std::fill(in_grad.begin(), in_grad.end(), T(0));
  for (size_t o = 0; o < argmax.size(); ++o) in_grad[argmax[o]] += out_grad[o];
}

}  // namespace qindex::kernels
