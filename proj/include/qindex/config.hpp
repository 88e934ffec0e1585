#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qindex/bench.hpp"
#include "qindex/search.hpp"
#include "qindex/train.hpp"

namespace qindex {

// Environment variable that replaces dataset.dir when set.
inline constexpr const char* kDataDirEnv = "QINDEX_DATA_DIR";

struct DatasetConfig {
  std::string name = "mnist";  // selects the published reference condition
  std::string dir = "data/mnist5k";
  std::string train_images = "train-images-idx3-ubyte";
  std::string train_labels = "train-labels-idx1-ubyte";
  std::string test_images = "t10k-images-idx3-ubyte";
  std::string test_labels = "t10k-labels-idx1-ubyte";
  int num_classes = 10;
};

struct ThresholdConfig {
  double delta = 0.19;
  // P_FP; measured from the full-precision model when absent.
  std::optional<double> fp_accuracy;
};

enum class LatencyMode { kMeasure, kFixed };

struct SearchConfig {
  GaParams ga;
  // Test samples used for fitness accuracy; 0 means the full test set. The
  // returned best genome is always re-scored on the full test set.
  size_t fitness_samples = 0;
  uint64_t calibration_seed = 0;
  LatencyMode latency = LatencyMode::kMeasure;
  double fixed_latency_ms = 1.0;  // used when latency is kFixed
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::string weights = "runs/simple_cnn.qiw";
  TrainConfig train;
  std::vector<int> bits{32, 16, 8, 4, 2};
  std::vector<uint64_t> seeds{0, 42, 123};
  size_t calibration_samples = 512;
  ThresholdConfig threshold;
  TimingProtocol timing;
  SearchConfig search;
  std::string out_dir = "runs";
};

// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

// Reads a JSON config file; throws ConfigError if unreadable.
ExperimentConfig load_config(const std::filesystem::path& path);

// Value checks (bit-widths, seeds, ranges). Throws ConfigError.
void validate_config(const ExperimentConfig& config);

// Applies the data-directory environment override.
void apply_environment(ExperimentConfig& config);

std::filesystem::path train_images_path(const ExperimentConfig& config);
std::filesystem::path train_labels_path(const ExperimentConfig& config);
std::filesystem::path test_images_path(const ExperimentConfig& config);
std::filesystem::path test_labels_path(const ExperimentConfig& config);

// Throws ConfigError naming the first missing dataset file.
void require_dataset_files(const ExperimentConfig& config);

const char* latency_mode_name(LatencyMode mode);

}  // namespace qindex
