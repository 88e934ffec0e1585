#include "qindex/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "qindex/errors.hpp"
#include "qindex/quant.hpp"

namespace qindex {
namespace {

using nlohmann::json;

// Reads the keys of one JSON object, remembering which were consumed so that
// anything left over can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{} must be an object", where()));
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}: {}", where(key), e.what()));
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(fmt::format("unknown key '{}'", where(it.key())));
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

LatencyMode parse_latency_mode(const std::string& s) {
  if (s == "measure") return LatencyMode::kMeasure;
  if (s == "fixed") return LatencyMode::kFixed;
  throw ConfigError(fmt::format("search.latency must be 'measure' or 'fixed', got '{}'", s));
}

}  // namespace

const char* latency_mode_name(LatencyMode mode) {
  return mode == LatencyMode::kMeasure ? "measure" : "fixed";
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  ObjectReader root(j, "");

  if (const json* d = root.child("dataset")) {
    ObjectReader r(*d, "dataset");
    r.get("name", c.dataset.name);
    r.get("dir", c.dataset.dir);
    r.get("train_images", c.dataset.train_images);
    r.get("train_labels", c.dataset.train_labels);
    r.get("test_images", c.dataset.test_images);
    r.get("test_labels", c.dataset.test_labels);
    r.get("num_classes", c.dataset.num_classes);
    r.finish();
  }
  root.get("weights", c.weights);
  if (const json* t = root.child("train")) {
    ObjectReader r(*t, "train");
    r.get("epochs", c.train.epochs);
    r.get("learning_rate", c.train.learning_rate);
    r.get("batch_size", c.train.batch_size);
    r.get("seed", c.train.seed);
    r.get("weight_decay", c.train.weight_decay);
    r.get("beta1", c.train.beta1);
    r.get("beta2", c.train.beta2);
    r.get("epsilon", c.train.epsilon);
    r.get("validation_fraction", c.train.validation_fraction);
    r.get("augment", c.train.augment);
    r.get("augment_pad", c.train.augment_pad);
    r.finish();
  }
  root.get("bits", c.bits);
  root.get("seeds", c.seeds);
  root.get("calibration_samples", c.calibration_samples);
  if (const json* t = root.child("threshold")) {
    ObjectReader r(*t, "threshold");
    r.get("delta", c.threshold.delta);
    if (const json* fp = r.child("fp_accuracy"); fp && !fp->is_null()) {
      if (!fp->is_number()) throw ConfigError("threshold.fp_accuracy must be a number or null");
      c.threshold.fp_accuracy = fp->get<double>();
    }
    r.finish();
  }
  if (const json* t = root.child("timing")) {
    ObjectReader r(*t, "timing");
    r.get("warmup_iters", c.timing.warmup_iters);
    r.get("timed_iters", c.timing.timed_iters);
    r.get("batch_size", c.timing.batch_size);
    r.get("forward_threads", c.timing.forward_threads);
    r.finish();
  }
  if (const json* s = root.child("search")) {
    ObjectReader r(*s, "search");
    r.get("population", c.search.ga.population);
    r.get("generations", c.search.ga.generations);
    r.get("mutation", c.search.ga.mutation);
    r.get("elite", c.search.ga.elite);
    r.get("seed", c.search.ga.seed);
    r.get("alleles", c.search.ga.alleles);
    r.get("fitness_samples", c.search.fitness_samples);
    r.get("calibration_seed", c.search.calibration_seed);
    std::string mode = latency_mode_name(c.search.latency);
    r.get("latency", mode);
    c.search.latency = parse_latency_mode(mode);
    r.get("fixed_latency_ms", c.search.fixed_latency_ms);
    r.finish();
  }
  root.get("out_dir", c.out_dir);
  root.finish();
  validate_config(c);
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = {{"name", c.dataset.name},
                  {"dir", c.dataset.dir},
                  {"train_images", c.dataset.train_images},
                  {"train_labels", c.dataset.train_labels},
                  {"test_images", c.dataset.test_images},
                  {"test_labels", c.dataset.test_labels},
                  {"num_classes", c.dataset.num_classes}};
  j["weights"] = c.weights;
  j["train"] = {{"epochs", c.train.epochs},
                {"learning_rate", c.train.learning_rate},
                {"batch_size", c.train.batch_size},
                {"seed", c.train.seed},
                {"weight_decay", c.train.weight_decay},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"epsilon", c.train.epsilon},
                {"validation_fraction", c.train.validation_fraction},
                {"augment", c.train.augment},
                {"augment_pad", c.train.augment_pad}};
  j["bits"] = c.bits;
  j["seeds"] = c.seeds;
  j["calibration_samples"] = c.calibration_samples;
  j["threshold"] = {{"delta", c.threshold.delta},
                    {"fp_accuracy", c.threshold.fp_accuracy
                                        ? json(*c.threshold.fp_accuracy)
                                        : json(nullptr)}};
  j["timing"] = {{"warmup_iters", c.timing.warmup_iters},
                 {"timed_iters", c.timing.timed_iters},
                 {"batch_size", c.timing.batch_size},
                 {"forward_threads", c.timing.forward_threads}};
  j["search"] = {{"population", c.search.ga.population},
                 {"generations", c.search.ga.generations},
                 {"mutation", c.search.ga.mutation},
                 {"elite", c.search.ga.elite},
                 {"seed", c.search.ga.seed},
                 {"alleles", c.search.ga.alleles},
                 {"fitness_samples", c.search.fitness_samples},
                 {"calibration_seed", c.search.calibration_seed},
                 {"latency", latency_mode_name(c.search.latency)},
                 {"fixed_latency_ms", c.search.fixed_latency_ms}};
  j["out_dir"] = c.out_dir;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config {}: {}", path.string(), e.what()));
  }
  return config_from_json(j);
}

void validate_config(const ExperimentConfig& c) {
  if (c.dataset.num_classes < 2) throw ConfigError("dataset.num_classes must be at least 2");
  if (c.bits.empty()) throw ConfigError("bits must not be empty");
  for (int b : c.bits) {
    if (!is_valid_bits(b)) {
      throw ConfigError(fmt::format("bit-width {} not in {{2, 4, 8, 16, 32}}", b));
    }
  }
  if (std::set<int>(c.bits.begin(), c.bits.end()).size() != c.bits.size()) {
    throw ConfigError("bits contains duplicates");
  }
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
  if (c.calibration_samples == 0) throw ConfigError("calibration_samples must be positive");
  if (!(c.threshold.delta >= 0.0 && c.threshold.delta <= 1.0)) {
    throw ConfigError(fmt::format("threshold.delta {} outside [0, 1]", c.threshold.delta));
  }
  if (c.threshold.fp_accuracy &&
      !(*c.threshold.fp_accuracy >= 0.0 && *c.threshold.fp_accuracy <= 1.0)) {
    throw ConfigError("threshold.fp_accuracy outside [0, 1]");
  }
  if (c.train.epochs < 0) throw ConfigError("train.epochs must be nonnegative");
  if (!(c.train.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (c.train.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(c.train.validation_fraction >= 0.0 && c.train.validation_fraction < 1.0)) {
    throw ConfigError("train.validation_fraction outside [0, 1)");
  }
  if (c.timing.warmup_iters < 0 || c.timing.timed_iters <= 0 || c.timing.batch_size <= 0) {
    throw ConfigError("timing needs warmup_iters >= 0, timed_iters > 0, batch_size > 0");
  }
  if (c.timing.forward_threads != 1) {
    throw ConfigError("timing.forward_threads must be 1: timed passes are single-threaded");
  }
  try {
    c.search.ga.validate();
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("search: {}", e.what()));
  }
  for (int a : c.search.ga.alleles) {
    if (!is_quantized_bits(a)) {
      throw ConfigError(fmt::format("search allele {} not in {{2, 4, 8, 16}}", a));
    }
  }
  if (!(c.search.fixed_latency_ms > 0.0)) {
    throw ConfigError("search.fixed_latency_ms must be positive");
  }
}

void apply_environment(ExperimentConfig& config) {
  if (const char* dir = std::getenv(kDataDirEnv); dir && *dir) config.dataset.dir = dir;
}

std::filesystem::path train_images_path(const ExperimentConfig& c) {
  return std::filesystem::path(c.dataset.dir) / c.dataset.train_images;
}
std::filesystem::path train_labels_path(const ExperimentConfig& c) {
  return std::filesystem::path(c.dataset.dir) / c.dataset.train_labels;
}
std::filesystem::path test_images_path(const ExperimentConfig& c) {
  return std::filesystem::path(c.dataset.dir) / c.dataset.test_images;
}
std::filesystem::path test_labels_path(const ExperimentConfig& c) {
  return std::filesystem::path(c.dataset.dir) / c.dataset.test_labels;
}

void require_dataset_files(const ExperimentConfig& c) {
  for (const auto& p : {train_images_path(c), train_labels_path(c), test_images_path(c),
                        test_labels_path(c)}) {
    if (!std::filesystem::is_regular_file(p)) {
      throw ConfigError(fmt::format("dataset file {} not found", p.string()));
    }
  }
}

}  // namespace qindex
