#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qindex/metrics.hpp"

namespace qindex {

// One evaluated (configuration, seed) cell with its raw inputs and indices.
struct RecordRow {
  std::string bits;
  std::optional<uint64_t> seed;
  double p = 0.0;
  double c = 1.0;
  double t = 1.0;
  double u = 0.0;
  double i = 0.0;
  double iprime = 0.0;
  double acp = 0.0;
  double als = 0.0;
};

RecordRow make_row(const std::string& bits, std::optional<uint64_t> seed, double p,
                   double c, double t, double threshold);

// Per-configuration aggregate. Indices are computed per seed and then
// averaged; std is the sample (n-1) std, 0 for a single seed.
struct SummaryRow {
  std::string bits;
  int n = 0;
  double p_mean = 0.0;
  double p_std = 0.0;
  double c = 1.0;
  double t_mean = 0.0;
  double t_std = 0.0;
  double i_mean = 0.0;
  double i_std = 0.0;
  double iprime_mean = 0.0;
  double iprime_std = 0.0;
  double acp_mean = 0.0;
  double als_mean = 0.0;
};

// Groups rows by configuration in order of first appearance.
std::vector<SummaryRow> summarize(const std::vector<RecordRow>& rows);

// Configuration with the highest mean I' (ties: higher mean bit-width).
// Empty for an empty summary.
std::string pareto_knee(const std::vector<SummaryRow>& summary);

double sample_std(const std::vector<double>& values);

struct RunRecord {
  std::string run_id;
  std::string timestamp;
  std::string command;
  nlohmann::json config;  // resolved snapshot
  std::vector<uint64_t> seeds;
  ThresholdSpec threshold_spec;
  double threshold = 0.0;
  std::vector<RecordRow> rows;
  std::vector<SummaryRow> summary;
  std::string pareto_knee;
  nlohmann::json environment;
  std::map<std::string, std::string> artifacts;
  nlohmann::json details = nlohmann::json::object();  // command-specific
};

// Fills summary and knee from rows.
void finalize(RunRecord& record);

nlohmann::json record_to_json(const RunRecord& record);
// Throws ParseError on structural problems (does not verify).
RunRecord record_from_json(const nlohmann::json& j);

inline constexpr double kIntegrityTolerance = 1e-9;

// Recomputes every stored index, the threshold, the summary and the knee
// from the stored raw inputs. Throws IntegrityError naming the first field
// that disagrees by more than 1e-9 (relative above magnitude 1).
void verify_record(const RunRecord& record);

void save_record(const RunRecord& record, const std::filesystem::path& path);
// Parses and verifies.
RunRecord load_record(const std::filesystem::path& path);

}  // namespace qindex
