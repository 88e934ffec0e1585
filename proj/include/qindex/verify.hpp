#pragma once

#include <array>
#include <string>
#include <vector>

#include "qindex/fixture.hpp"
#include "qindex/metrics.hpp"

namespace qindex {

// Three seed values with exactly the given mean and sample (n-1) std:
// {mean - std, mean, mean + std}.
std::array<double, 3> seed_values(double mean, double std);

// Mean of a per-seed metric over the 3x3 grid of reconstructed P and T seed
// values. Published index columns average per-seed indices, which differs
// from the index of the column means whenever T varies across seeds.
double seed_grid_mean(const PublishedRow& row, Metric metric, double threshold);

// Metric of the column means.
double index_of_means(const PublishedRow& row, Metric metric, double threshold);

struct ValueCheck {
  std::string group;  // "ptq_sweep" or "llm_sweep"
  std::string condition;
  std::string bits;
  std::string quantity;  // "I" or "Iprime"
  double computed = 0.0;
  double index_of_means = 0.0;
  double reported = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RankCheck {
  std::string dataset;
  std::string metric;  // "I", "Iprime", "ACP", "ALS"
  std::vector<std::string> bits;
  std::vector<int> computed;
  std::vector<int> computed_index_of_means;
  std::vector<int> reported;
  bool pass = false;
};

// Rule threshold against the I'/I ratio of every viable published row.
struct ThresholdCheck {
  std::string condition;
  double threshold = 0.0;
  double max_ratio_error = 0.0;  // max |(1 - thresh / P) - I'/I|
  int rows_checked = 0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<ValueCheck> values;
  std::vector<RankCheck> ranks;
  std::vector<ThresholdCheck> thresholds;

  bool passed() const;
  int failures() const;
};

inline constexpr double kPtqTolerance = 0.05;
inline constexpr double kLlmTolerance = 0.02;
inline constexpr double kRatioTolerance = 0.01;

double rule_threshold(const PublishedCondition& condition);

// Max |(1 - thresh / P) - I'/I| over rows with a positive published I'.
ThresholdCheck check_threshold(const PublishedCondition& condition, double threshold);

VerifyReport verify_published(const PublishedResults& results);

// Row-by-row diff, one line per check, ending with a summary line.
std::string format_verify_report(const VerifyReport& report);

}  // namespace qindex
