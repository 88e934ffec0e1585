#include "qindex/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "qindex/errors.hpp"

namespace qindex {
namespace {

constexpr uint32_t kImageMagic = 2051;
constexpr uint32_t kLabelMagic = 2049;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("{}: cannot open", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

uint32_t read_be32(const std::vector<unsigned char>& buf, size_t offset,
                   const std::filesystem::path& path) {
  if (buf.size() < offset + 4) {
    throw ParseError(fmt::format("{}: truncated header ({} bytes)", path.string(),
                                 buf.size()));
  }
  return (uint32_t{buf[offset]} << 24) | (uint32_t{buf[offset + 1]} << 16) |
         (uint32_t{buf[offset + 2]} << 8) | uint32_t{buf[offset + 3]};
}

void put_be32(std::ofstream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void check_payload(const std::filesystem::path& path, size_t have, size_t expected) {
  if (have < expected) {
    throw ParseError(fmt::format("{}: truncated payload, expected {} bytes, found {}",
                                 path.string(), expected, have));
  }
  if (have > expected) {
    throw ParseError(fmt::format("{}: {} trailing bytes after {} byte payload",
                                 path.string(), have - expected, expected));
  }
}

}  // namespace

Shape Dataset::sample_shape() const {
  return Shape(images.shape().begin() + 1, images.shape().end());
}

void Dataset::validate() const {
  if (images.rank() < 2) throw DomainError("dataset images need a batch dimension");
  if (images.dim(0) != static_cast<int64_t>(labels.size())) {
    throw DomainError(fmt::format("{} images but {} labels", images.dim(0),
                                  labels.size()));
  }
  if (num_classes <= 0) throw DomainError("dataset needs a positive class count");
  for (int32_t y : labels) {
    if (y < 0 || y >= num_classes) {
      throw DomainError(fmt::format("label {} outside [0, {})", y, num_classes));
    }
  }
  for (float v : images.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw DomainError("pixel value outside [0, 1]");
  }
}

Dataset Dataset::subset(std::span<const size_t> indices) const {
  const int64_t row = images.numel() / std::max<int64_t>(images.dim(0), 1);
  Shape s = images.shape();
  s[0] = static_cast<int64_t>(indices.size());
  Dataset out;
  out.num_classes = num_classes;
  out.split = split;
  std::vector<float> data;
  data.reserve(indices.size() * static_cast<size_t>(row));
  for (size_t idx : indices) {
    if (idx >= size()) throw DomainError(fmt::format("sample index {} out of range", idx));
    const auto src = images.data().subspan(idx * row, static_cast<size_t>(row));
    data.insert(data.end(), src.begin(), src.end());
    out.labels.push_back(labels[idx]);
  }
  if (indices.empty()) {
    out.images = Tensor();
  } else {
    out.images = Tensor(std::move(s), std::move(data));
  }
  return out;
}

Tensor Dataset::batch(size_t begin, size_t end) const {
  return images.slice_rows(static_cast<int64_t>(begin), static_cast<int64_t>(end));
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, int num_classes,
                 std::string split) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  const uint32_t img_magic = read_be32(img, 0, images_path);
  if (img_magic != kImageMagic) {
    throw ParseError(fmt::format("{}: magic {} is not the image magic {}",
                                 images_path.string(), img_magic, kImageMagic));
  }
  const uint32_t lab_magic = read_be32(lab, 0, labels_path);
  if (lab_magic != kLabelMagic) {
    throw ParseError(fmt::format("{}: magic {} is not the label magic {}",
                                 labels_path.string(), lab_magic, kLabelMagic));
  }
  const uint32_t n = read_be32(img, 4, images_path);
  const uint32_t rows = read_be32(img, 8, images_path);
  const uint32_t cols = read_be32(img, 12, images_path);
  const uint32_t n_labels = read_be32(lab, 4, labels_path);
  if (n == 0 || rows == 0 || cols == 0) {
    throw ParseError(fmt::format("{}: empty dimension {}x{}x{}", images_path.string(), n,
                                 rows, cols));
  }
  if (n != n_labels) {
    throw ParseError(fmt::format("image count {} does not match label count {}", n,
                                 n_labels));
  }
  const size_t pixels = size_t{n} * rows * cols;
  check_payload(images_path, img.size() - 16, pixels);
  check_payload(labels_path, lab.size() - 8, n);

  Dataset data;
  data.num_classes = num_classes;
  data.split = std::move(split);
  std::vector<float> px(pixels);
  for (size_t i = 0; i < pixels; ++i) px[i] = static_cast<float>(img[16 + i]) / 255.0f;
  data.images = Tensor({int64_t{n}, 1, int64_t{rows}, int64_t{cols}}, std::move(px));
  data.labels.resize(n);
  for (uint32_t i = 0; i < n; ++i) {
    const int32_t y = lab[8 + i];
    if (y >= num_classes) {
      throw ParseError(fmt::format("{}: label {} at index {} outside [0, {})",
                                   labels_path.string(), y, i, num_classes));
    }
    data.labels[i] = y;
  }
  return data;
}

void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  data.validate();
  const Shape s = data.sample_shape();
  if (s.size() != 3 || s[0] != 1) {
    throw DomainError("IDX export needs single-channel (1, h, w) samples");
  }
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw ParseError("cannot open IDX output files");
  put_be32(img, kImageMagic);
  put_be32(img, static_cast<uint32_t>(data.size()));
  put_be32(img, static_cast<uint32_t>(s[1]));
  put_be32(img, static_cast<uint32_t>(s[2]));
  for (float v : data.images.data()) {
    img.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
  }
  put_be32(lab, kLabelMagic);
  put_be32(lab, static_cast<uint32_t>(data.size()));
  for (int32_t y : data.labels) lab.put(static_cast<char>(y));
}

std::vector<size_t> sample_indices(size_t population, size_t n, uint64_t seed) {
  if (n > population) {
    throw DomainError(fmt::format("cannot draw {} samples from {}", n, population));
  }
  std::vector<size_t> idx(population);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::mt19937_64 rng(seed);
  for (size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<size_t> pick(i, population - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  return idx;
}

Dataset sample_calibration(const Dataset& data, size_t n, uint64_t seed) {
  const auto idx = sample_indices(data.size(), n, seed);
  return data.subset(idx);
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& data, double fraction,
                                          uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw DomainError(fmt::format("holdout fraction {} outside [0, 1)", fraction));
  }
  const auto perm = sample_indices(data.size(), data.size(), seed);
  const size_t held = static_cast<size_t>(std::floor(fraction * data.size()));
  std::span<const size_t> all(perm);
  return {data.subset(all.first(data.size() - held)), data.subset(all.last(held))};
}

Dataset synth_gaussian_blobs(const BlobSpec& spec) {
  if (spec.num_classes < 2) throw DomainError("blobs need at least two classes");
  if (spec.samples < static_cast<size_t>(spec.num_classes)) {
    throw DomainError("blobs need at least one sample per class");
  }
  const int64_t dims = shape_numel(spec.sample_shape);
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> gauss(0.0, spec.noise);
  std::vector<std::vector<double>> centres(static_cast<size_t>(spec.num_classes));
  for (auto& c : centres) {
    c.resize(static_cast<size_t>(dims));
    for (auto& v : c) v = 0.5 + spec.separation * (coin(rng) ? 0.5 : -0.5);
  }
  Dataset data;
  data.num_classes = spec.num_classes;
  data.split = "synthetic";
  std::vector<float> px;
  px.reserve(spec.samples * static_cast<size_t>(dims));
  for (size_t i = 0; i < spec.samples; ++i) {
    const int32_t y = static_cast<int32_t>(i % static_cast<size_t>(spec.num_classes));
    data.labels.push_back(y);
    for (double centre : centres[static_cast<size_t>(y)]) {
      px.push_back(static_cast<float>(std::clamp(centre + gauss(rng), 0.0, 1.0)));
    }
  }
  Shape s{static_cast<int64_t>(spec.samples)};
  s.insert(s.end(), spec.sample_shape.begin(), spec.sample_shape.end());
  data.images = Tensor(std::move(s), std::move(px));
  return data;
}

void augment_crop_flip(Tensor& batch, int64_t pad, std::mt19937_64& rng) {
  if (batch.rank() != 4) throw DomainError("augmentation expects (n, c, h, w)");
  const int64_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  std::uniform_int_distribution<int64_t> shift(-pad, pad);
  std::bernoulli_distribution flip(0.5);
  std::vector<float> tmp(static_cast<size_t>(c * h * w));
  for (int64_t s = 0; s < n; ++s) {
    const int64_t dy = shift(rng), dx = shift(rng);
    const bool mirror = flip(rng);
    float* img = batch.data().data() + s * c * h * w;
    for (int64_t ch = 0; ch < c; ++ch) {
      for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) {
          const int64_t sy = y + dy;
          const int64_t sx0 = x + dx;
          const int64_t sx = mirror ? (w - 1 - sx0) : sx0;
          const bool inside = sy >= 0 && sy < h && sx0 >= 0 && sx0 < w;
          tmp[(ch * h + y) * w + x] = inside ? img[(ch * h + sy) * w + sx] : 0.0f;
        }
      }
    }
    std::copy(tmp.begin(), tmp.end(), img);
  }
}

}  // namespace qindex
