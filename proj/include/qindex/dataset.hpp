#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qindex/tensor.hpp"

namespace qindex {

// Images (n, channels, height, width) with pixels in [0,1] plus labels.
struct Dataset {
  Tensor images;
  std::vector<int32_t> labels;
  int num_classes = 0;
  std::string split;

  size_t size() const { return labels.size(); }
  Shape sample_shape() const;

  // Throws DomainError when the invariants do not hold.
  void validate() const;

  Dataset subset(std::span<const size_t> indices) const;
  // Samples [begin, end) as a batch tensor.
  Tensor batch(size_t begin, size_t end) const;
};

// Parses a big-endian IDX image/label pair (magics 2051 / 2049). Pixels are
// scaled by 1/255. Throws ParseError on malformed input.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, int num_classes = 10,
                 std::string split = "");

// Writes a single-channel dataset as an IDX pair; pixels are rounded back to
// bytes, so a dataset read with load_idx round-trips exactly.
void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

// Uniform sample of n distinct indices, deterministic per seed.
std::vector<size_t> sample_indices(size_t population, size_t n, uint64_t seed);

Dataset sample_calibration(const Dataset& data, size_t n, uint64_t seed);

// Splits off the last `fraction` of a seeded permutation as a held-out set.
std::pair<Dataset, Dataset> split_holdout(const Dataset& data, double fraction,
                                          uint64_t seed);

struct BlobSpec {
  int num_classes = 2;
  size_t samples = 100;
  Shape sample_shape{1, 4, 4};
  double separation = 1.0;
  double noise = 0.1;
  uint64_t seed = 0;
};

// Gaussian clusters around per-class centres 0.5 + separation * u, with u a
// random sign vector scaled to [-0.5, 0.5]; pixels are clamped to [0,1].
// Labels cycle through the classes, so n == K gives one sample per class.
Dataset synth_gaussian_blobs(const BlobSpec& spec);

// Random crop after zero padding, then horizontal flip with probability 1/2.
// Applied per sample in place to a (n, c, h, w) batch.
void augment_crop_flip(Tensor& batch, int64_t pad, std::mt19937_64& rng);

}  // namespace qindex
