#pragma once

#include <filesystem>
#include <string>

#include "qindex/network.hpp"

namespace qindex {

// Weight file format, version 1.
//
// A JSON manifest
//   {"format_version": 1, "architecture_hash": "...", "layers": [
//     {"name": "layer0.weight", "layer": 0, "role": "weight",
//      "shape": [...], "offset": 0, "length": 1152}, ...]}
// describes a blob of little-endian float32 values in row-major order;
// offsets and lengths are in bytes. The pair is stored either as one
// container file (u64 little-endian manifest length, manifest bytes, blob)
// or as `<stem>.json` + `<stem>.bin`.
inline constexpr int kWeightFormatVersion = 1;

struct LoadedWeights {
  WeightStore weights;
  std::string architecture_hash;
};

// Writes a single container file.
void save_weights(const WeightStore& weights, const std::string& architecture_hash,
                  const std::filesystem::path& path);

// Writes `<stem>.json` and `<stem>.bin`.
void save_weights_pair(const WeightStore& weights, const std::string& architecture_hash,
                       const std::filesystem::path& stem);

// Reads either layout: a path ending in .json is treated as a manifest with a
// sibling .bin blob; anything else as a container. Throws ParseError on
// version, shape, offset or length inconsistencies.
LoadedWeights load_weights(const std::filesystem::path& path);

// Convenience: load and check against a network definition.
WeightStore load_weights_for(const NetworkDef& net, const std::filesystem::path& path);

// FNV-1a over the file bytes, as hex.
std::string file_hash(const std::filesystem::path& path);

}  // namespace qindex
