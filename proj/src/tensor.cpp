#include "qindex/tensor.hpp"

#include <cmath>
#include <cstring>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "qindex/errors.hpp"

namespace qindex {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw DomainError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

std::string shape_to_string(const Shape& shape) {
  return fmt::format("({})", fmt::join(shape, ", "));
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(std::move(shape)),
      data_(static_cast<size_t>(shape_numel(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<int64_t>(data_.size())) {
    throw DomainError(fmt::format("shape {} does not match {} elements",
                                  shape_to_string(shape_), data_.size()));
  }
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

Tensor Tensor::slice_rows(int64_t begin, int64_t end) const {
  if (shape_.empty() || begin < 0 || end > shape_[0] || begin >= end) {
    throw DomainError(fmt::format("row slice [{}, {}) out of range for {}", begin,
                                  end, shape_to_string(shape_)));
  }
  const int64_t row = numel() / shape_[0];
  Shape s = shape_;
  s[0] = end - begin;
  std::vector<float> d(data_.begin() + begin * row, data_.begin() + end * row);
  return Tensor(std::move(s), std::move(d));
}

bool Tensor::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.shape_ == b.shape_ && a.data_.size() == b.data_.size() &&
         std::memcmp(a.data_.data(), b.data_.data(),
                     a.data_.size() * sizeof(float)) == 0;
}

}  // namespace qindex
