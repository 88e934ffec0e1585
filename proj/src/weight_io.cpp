#include "qindex/weight_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "qindex/errors.hpp"
#include "qindex/hash.hpp"

namespace qindex {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "weight blobs are written in host order");

struct Encoded {
  std::string manifest;
  std::vector<char> blob;
};

Encoded encode(const WeightStore& weights, const std::string& architecture_hash) {
  json manifest;
  manifest["format_version"] = kWeightFormatVersion;
  manifest["architecture_hash"] = architecture_hash;
  manifest["layers"] = json::array();
  Encoded out;
  const auto append = [&](size_t layer, const char* role, const Tensor& t) {
    const size_t bytes = static_cast<size_t>(t.numel()) * sizeof(float);
    manifest["layers"].push_back({{"name", fmt::format("layer{}.{}", layer, role)},
                                  {"layer", layer},
                                  {"role", role},
                                  {"shape", t.shape()},
                                  {"offset", out.blob.size()},
                                  {"length", bytes}});
    const auto* p = reinterpret_cast<const char*>(t.data().data());
    out.blob.insert(out.blob.end(), p, p + bytes);
  };
  for (const auto& [layer, params] : weights.layers) {
    append(layer, "weight", params.weight);
    append(layer, "bias", params.bias);
  }
  out.manifest = manifest.dump(2);
  return out;
}

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("{}: cannot open", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& path, const char* data, size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError(fmt::format("{}: cannot open for writing", path.string()));
  out.write(data, static_cast<std::streamsize>(size));
  if (!out) throw ParseError(fmt::format("{}: write failed", path.string()));
}

LoadedWeights decode(const std::string& manifest_text, std::span<const char> blob,
                     const std::string& origin) {
  json manifest;
  try {
    manifest = json::parse(manifest_text);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: manifest is not valid JSON: {}", origin, e.what()));
  }
  LoadedWeights out;
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kWeightFormatVersion) {
      throw ParseError(fmt::format("{}: unknown format version {} (expected {})", origin,
                                   version, kWeightFormatVersion));
    }
    out.architecture_hash = manifest.at("architecture_hash").get<std::string>();
    size_t expected_end = 0;
    for (const auto& entry : manifest.at("layers")) {
      const auto name = entry.at("name").get<std::string>();
      const auto layer = entry.at("layer").get<size_t>();
      const auto role = entry.at("role").get<std::string>();
      const auto shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<size_t>();
      const auto length = entry.at("length").get<size_t>();
      const int64_t numel = shape_numel(shape);
      if (length != static_cast<size_t>(numel) * sizeof(float)) {
        throw ParseError(fmt::format("{}: entry {} has shape {} but length {} bytes",
                                     origin, name, shape_to_string(shape), length));
      }
      if (offset != expected_end) {
        throw ParseError(fmt::format("{}: entry {} starts at byte {}, expected {}", origin,
                                     name, offset, expected_end));
      }
      if (offset + length > blob.size()) {
        throw ParseError(fmt::format(
            "{}: blob holds {} bytes but entry {} needs bytes [{}, {})", origin,
            blob.size(), name, offset, offset + length));
      }
      expected_end = offset + length;
      std::vector<float> values(static_cast<size_t>(numel));
      std::memcpy(values.data(), blob.data() + offset, length);
      Tensor t(shape, std::move(values));
      auto& params = out.weights.layers[layer];
      if (role == "weight") {
        params.weight = std::move(t);
      } else if (role == "bias") {
        params.bias = std::move(t);
      } else {
        throw ParseError(fmt::format("{}: entry {} has unknown role '{}'", origin, name,
                                     role));
      }
    }
    if (expected_end != blob.size()) {
      throw ParseError(fmt::format("{}: blob length mismatch, expected {} bytes, found {}",
                                   origin, expected_end, blob.size()));
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: malformed manifest: {}", origin, e.what()));
  } catch (const DomainError& e) {
    throw ParseError(fmt::format("{}: {}", origin, e.what()));
  }
  for (const auto& [layer, p] : out.weights.layers) {
    if (p.weight.numel() == 0 || p.bias.numel() == 0) {
      throw ParseError(fmt::format("{}: layer {} lacks a weight or bias entry", origin,
                                   layer));
    }
  }
  return out;
}

}  // namespace

void save_weights(const WeightStore& weights, const std::string& architecture_hash,
                  const std::filesystem::path& path) {
  const Encoded e = encode(weights, architecture_hash);
  std::vector<char> buf(8);
  const uint64_t len = e.manifest.size();
  std::memcpy(buf.data(), &len, 8);
  buf.insert(buf.end(), e.manifest.begin(), e.manifest.end());
  buf.insert(buf.end(), e.blob.begin(), e.blob.end());
  write_all(path, buf.data(), buf.size());
}

void save_weights_pair(const WeightStore& weights, const std::string& architecture_hash,
                       const std::filesystem::path& stem) {
  const Encoded e = encode(weights, architecture_hash);
  auto json_path = stem;
  json_path += ".json";
  auto bin_path = stem;
  bin_path += ".bin";
  write_all(json_path, e.manifest.data(), e.manifest.size());
  write_all(bin_path, e.blob.data(), e.blob.size());
}

LoadedWeights load_weights(const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    const auto manifest = read_all(path);
    auto bin_path = path;
    bin_path.replace_extension(".bin");
    const auto blob = read_all(bin_path);
    return decode(std::string(manifest.begin(), manifest.end()), blob, path.string());
  }
  const auto buf = read_all(path);
  if (buf.size() < 8) {
    throw ParseError(fmt::format("{}: truncated container, expected at least 8 bytes, "
                                 "found {}",
                                 path.string(), buf.size()));
  }
  uint64_t len = 0;
  std::memcpy(&len, buf.data(), 8);
  if (len > buf.size() - 8) {
    throw ParseError(fmt::format("{}: manifest length {} exceeds file size {}",
                                 path.string(), len, buf.size()));
  }
  const std::string manifest(buf.begin() + 8, buf.begin() + 8 + static_cast<int64_t>(len));
  std::span<const char> blob(buf.data() + 8 + len, buf.size() - 8 - len);
  return decode(manifest, blob, path.string());
}

WeightStore load_weights_for(const NetworkDef& net, const std::filesystem::path& path) {
  LoadedWeights loaded = load_weights(path);
  if (loaded.architecture_hash != net.architecture_hash()) {
    throw ParseError(fmt::format("{}: architecture hash {} does not match network {}",
                                 path.string(), loaded.architecture_hash,
                                 net.architecture_hash()));
  }
  try {
    loaded.weights.validate(net);
  } catch (const DomainError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return std::move(loaded.weights);
}

std::string file_hash(const std::filesystem::path& path) {
  const auto buf = read_all(path);
  return to_hex(fnv1a({reinterpret_cast<const unsigned char*>(buf.data()), buf.size()}));
}

}  // namespace qindex
