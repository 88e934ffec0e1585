#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qindex {

// One evaluated configuration. P is a fraction in [0,1], T is milliseconds.
struct MetricPoint {
  std::string bits_label;
  double accuracy_p = 0.0;
  double compression_c = 1.0;
  double latency_t_ms = 1.0;
};

// Throws DomainError unless P in [0,1], C > 0 and T > 0.
void validate(const MetricPoint& point);

// Viability floor parameters: max(1/K, P_FP - delta).
struct ThresholdSpec {
  int num_classes_k = 10;
  double fp_accuracy = 0.0;
  double delta = 0.0;
};

struct MetricReport {
  MetricPoint point;
  double threshold = 0.0;
  double spatial_utility_u = 0.0;
  double index_i = 0.0;
  double index_i_prime = 0.0;
  double acp = 0.0;
  double als = 0.0;
};

double spatial_utility(double compression, double accuracy);

// log2(T + 1). Rejects T <= 0: the index is undefined at zero latency.
double latency_penalty(double latency_ms);

double intelligence_index(const MetricPoint& point);
double refined_index(const MetricPoint& point, double threshold);
double acp(const MetricPoint& point);
double als(const MetricPoint& point);

double resolve_threshold(const ThresholdSpec& spec);

// Computes every index for one point under a resolved threshold.
MetricReport make_report(const MetricPoint& point, double threshold);

enum class Metric { kIndex, kRefinedIndex, kAcp, kAls };

const char* metric_name(Metric metric);

// Evaluates `metric` on a point; `threshold` is only read for kRefinedIndex.
double metric_value(Metric metric, const MetricPoint& point, double threshold);

struct RankEntry {
  std::string bits_label;
  double score = 0.0;
  int rank = 0;
};

// Mean bit-width encoded by a label such as "8" or "8-8-8-4".
double label_mean_bits(const std::string& label);

// Ranks precomputed scores descending (rank 1 = highest). Ties go to the
// label with the higher mean bit-width, then to input order. Entries are
// returned in input order.
std::vector<RankEntry> rank_scores(std::span<const std::string> labels,
                                   std::span<const double> scores);

// Ranks points by `metric`. `threshold` is required for kRefinedIndex.
std::vector<RankEntry> rank_configs(std::span<const MetricPoint> points,
                                    Metric metric,
                                    std::optional<double> threshold = {});

struct AblationRow {
  double delta = 0.0;
  double threshold = 0.0;
  std::string argmax_label;
  double peak_index_i_prime = 0.0;
};

// Sweeps delta, re-resolving the threshold (spec.delta is ignored) and
// recording the configuration with the highest refined index at each step.
std::vector<AblationRow> threshold_ablation(std::span<const MetricPoint> points,
                                            const ThresholdSpec& spec,
                                            std::span<const double> delta_grid);

// Half-away-from-zero rounding to `decimals` places, used for table output.
double round_half_away(double value, int decimals);

}  // namespace qindex
