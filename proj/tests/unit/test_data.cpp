#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qindex/dataset.hpp"
#include "qindex/errors.hpp"
#include "qindex/weight_io.hpp"

using namespace qindex;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qindex_unit";
  fs::create_directories(dir);
  return dir / name;
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

void write_bytes(const fs::path& p, const std::vector<uint8_t>& bytes) {
  std::ofstream(p, std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
}

std::vector<uint8_t> idx_images(uint32_t magic, uint32_t n, uint32_t rows, uint32_t cols) {
  std::vector<uint8_t> b;
  put_u32(b, magic);
  put_u32(b, n);
  put_u32(b, rows);
  put_u32(b, cols);
  for (uint32_t i = 0; i < n * rows * cols; ++i) b.push_back(static_cast<uint8_t>(i * 7));
  return b;
}

std::vector<uint8_t> idx_labels(uint32_t magic, uint32_t n) {
  std::vector<uint8_t> b;
  put_u32(b, magic);
  put_u32(b, n);
  for (uint32_t i = 0; i < n; ++i) b.push_back(static_cast<uint8_t>(i % 10));
  return b;
}

}  // namespace

TEST(Idx, LoadsWellFormedPair) {
  write_bytes(scratch("ok-img"), idx_images(2051, 3, 2, 2));
  write_bytes(scratch("ok-lbl"), idx_labels(2049, 3));
  const auto d = load_idx(scratch("ok-img"), scratch("ok-lbl"), 10, "train");
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.images.shape(), (Shape{3, 1, 2, 2}));
  EXPECT_FLOAT_EQ(d.images[1], 7.0f / 255.0f);
  EXPECT_EQ(d.labels, (std::vector<int32_t>{0, 1, 2}));
}

TEST(Idx, RejectsSwappedMagic) {
  write_bytes(scratch("m-img"), idx_labels(2049, 3));
  write_bytes(scratch("m-lbl"), idx_labels(2049, 3));
  EXPECT_THROW(load_idx(scratch("m-img"), scratch("m-lbl")), ParseError);
  write_bytes(scratch("m-img"), idx_images(2051, 3, 2, 2));
  write_bytes(scratch("m-lbl"), idx_images(2051, 3, 2, 2));
  EXPECT_THROW(load_idx(scratch("m-img"), scratch("m-lbl")), ParseError);
}

TEST(Idx, RejectsTruncationAndCountMismatch) {
  auto img = idx_images(2051, 3, 2, 2);
  img.pop_back();
  write_bytes(scratch("t-img"), img);
  write_bytes(scratch("t-lbl"), idx_labels(2049, 3));
  EXPECT_THROW(load_idx(scratch("t-img"), scratch("t-lbl")), ParseError);

  write_bytes(scratch("t-img"), idx_images(2051, 3, 2, 2));
  write_bytes(scratch("t-lbl"), idx_labels(2049, 2));
  EXPECT_THROW(load_idx(scratch("t-img"), scratch("t-lbl")), ParseError);

  write_bytes(scratch("t-img"), {0, 0, 8});
  EXPECT_THROW(load_idx(scratch("t-img"), scratch("t-lbl")), ParseError);
  EXPECT_THROW(load_idx(scratch("absent-img"), scratch("t-lbl")), ParseError);
}

TEST(Idx, LabelOutOfRange) {
  write_bytes(scratch("r-img"), idx_images(2051, 10, 1, 1));
  write_bytes(scratch("r-lbl"), idx_labels(2049, 10));
  EXPECT_THROW(load_idx(scratch("r-img"), scratch("r-lbl"), 5), ParseError);
}

TEST(Idx, WriteRoundTrip) {
  write_bytes(scratch("w-img"), idx_images(2051, 4, 3, 5));
  write_bytes(scratch("w-lbl"), idx_labels(2049, 4));
  const auto d = load_idx(scratch("w-img"), scratch("w-lbl"));
  write_idx(d, scratch("w2-img"), scratch("w2-lbl"));
  const auto e = load_idx(scratch("w2-img"), scratch("w2-lbl"));
  EXPECT_EQ(d.images, e.images);
  EXPECT_EQ(d.labels, e.labels);
  EXPECT_EQ(file_hash(scratch("w-img")), file_hash(scratch("w2-img")));
}

TEST(Sampling, DeterministicAndDistinct) {
  const auto a = sample_indices(100, 30, 9);
  EXPECT_EQ(a, sample_indices(100, 30, 9));
  EXPECT_NE(a, sample_indices(100, 30, 10));
  EXPECT_EQ(std::set<size_t>(a.begin(), a.end()).size(), 30u);
  auto all = sample_indices(50, 50, 1);
  std::sort(all.begin(), all.end());
  for (size_t i = 0; i < 50; ++i) EXPECT_EQ(all[i], i);
  EXPECT_THROW(sample_indices(10, 11, 0), DomainError);
}

TEST(Sampling, HoldoutPartitions) {
  BlobSpec spec;
  spec.samples = 40;
  const auto d = synth_gaussian_blobs(spec);
  const auto [train, held] = split_holdout(d, 0.25, 3);
  EXPECT_EQ(train.size(), 30u);
  EXPECT_EQ(held.size(), 10u);
}

TEST(Blobs, OnePerClass) {
  BlobSpec spec;
  spec.num_classes = 4;
  spec.samples = 4;
  const auto d = synth_gaussian_blobs(spec);
  EXPECT_EQ(d.labels, (std::vector<int32_t>{0, 1, 2, 3}));
  d.validate();
  for (float v : d.images.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Augment, PreservesShapeAndIsSeeded) {
  BlobSpec spec;
  spec.samples = 8;
  spec.sample_shape = {3, 8, 8};
  const auto d = synth_gaussian_blobs(spec);
  Tensor a = d.images, b = d.images;
  std::mt19937_64 r1(5), r2(5);
  augment_crop_flip(a, 2, r1);
  augment_crop_flip(b, 2, r2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.shape(), d.images.shape());
}

TEST(Weights, ContainerRoundTripIsBitExact) {
  const auto net = NetworkDef::simple_cnn({1, 28, 28}, 10);
  const auto w = init_weights(net, 17);
  save_weights(w, net.architecture_hash(), scratch("w.qiw"));
  const auto loaded = load_weights(scratch("w.qiw"));
  EXPECT_EQ(loaded.weights, w);
  EXPECT_EQ(loaded.architecture_hash, net.architecture_hash());
  EXPECT_EQ(load_weights_for(net, scratch("w.qiw")), w);
}

TEST(Weights, PairRoundTrip) {
  const auto net = NetworkDef::simple_cnn({1, 28, 28}, 10);
  const auto w = init_weights(net, 18);
  save_weights_pair(w, net.architecture_hash(), scratch("pair"));
  EXPECT_EQ(load_weights(scratch("pair.json")).weights, w);
}

TEST(Weights, TruncatedBlobNamesLengths) {
  const auto net = NetworkDef::simple_cnn({1, 28, 28}, 10);
  save_weights(init_weights(net, 1), net.architecture_hash(), scratch("trunc.qiw"));
  fs::resize_file(scratch("trunc.qiw"), fs::file_size(scratch("trunc.qiw")) - 1);
  try {
    load_weights(scratch("trunc.qiw"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("holds"), std::string::npos) << msg;
    EXPECT_NE(msg.find("needs"), std::string::npos) << msg;
  }
}

TEST(Weights, ArchitectureMismatch) {
  const auto net = NetworkDef::simple_cnn({1, 28, 28}, 10);
  const auto other = NetworkDef::simple_cnn({1, 28, 28}, 100);
  save_weights(init_weights(net, 1), net.architecture_hash(), scratch("arch.qiw"));
  EXPECT_THROW(load_weights_for(other, scratch("arch.qiw")), ParseError);
}

TEST(Weights, InitIsSeeded) {
  const auto net = NetworkDef::simple_cnn({1, 28, 28}, 10);
  EXPECT_EQ(init_weights(net, 3), init_weights(net, 3));
  EXPECT_FALSE(init_weights(net, 3) == init_weights(net, 4));
}
