#include "qindex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "qindex/errors.hpp"

namespace qindex {
namespace {

void check_accuracy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError(fmt::format("accuracy {} outside [0, 1]", p));
  }
}

void check_compression(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw DomainError(fmt::format("compression ratio {} must be positive", c));
  }
}

void check_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw DomainError(fmt::format("threshold {} outside [0, 1)", threshold));
  }
}

}  // namespace

void validate(const MetricPoint& point) {
  check_accuracy(point.accuracy_p);
  check_compression(point.compression_c);
  if (!(point.latency_t_ms > 0.0) || !std::isfinite(point.latency_t_ms)) {
    throw DomainError(
        fmt::format("latency {} ms must be positive", point.latency_t_ms));
  }
}

double spatial_utility(double compression, double accuracy) {
  check_accuracy(accuracy);
  check_compression(compression);
  return compression * accuracy;
}

double latency_penalty(double latency_ms) {
  if (!(latency_ms > 0.0) || !std::isfinite(latency_ms)) {
    throw DomainError(fmt::format("latency {} ms must be positive", latency_ms));
  }
  return std::log2(latency_ms + 1.0);
}

double intelligence_index(const MetricPoint& point) {
  validate(point);
  return point.compression_c * point.accuracy_p /
         latency_penalty(point.latency_t_ms);
}

double refined_index(const MetricPoint& point, double threshold) {
  validate(point);
  check_threshold(threshold);
  const double margin = std::max(point.accuracy_p - threshold, 0.0);
  return point.compression_c * margin / latency_penalty(point.latency_t_ms);
}

double acp(const MetricPoint& point) {
  return spatial_utility(point.compression_c, point.accuracy_p);
}

double als(const MetricPoint& point) {
  validate(point);
  return point.accuracy_p / latency_penalty(point.latency_t_ms);
}

double resolve_threshold(const ThresholdSpec& spec) {
  if (spec.num_classes_k <= 0) {
    throw DomainError("number of classes must be positive");
  }
  check_accuracy(spec.fp_accuracy);
  if (!(spec.delta >= 0.0 && spec.delta <= 1.0)) {
    throw DomainError(fmt::format("delta {} outside [0, 1]", spec.delta));
  }
  const double chance = 1.0 / spec.num_classes_k;
  return std::max(chance, spec.fp_accuracy - spec.delta);
}

MetricReport make_report(const MetricPoint& point, double threshold) {
  MetricReport report;
  report.point = point;
  report.threshold = threshold;
  report.spatial_utility_u = acp(point);
  report.index_i = intelligence_index(point);
  report.index_i_prime = refined_index(point, threshold);
  report.acp = report.spatial_utility_u;
  report.als = als(point);
  return report;
}

const char* metric_name(Metric metric) {
  switch (metric) {
    case Metric::kIndex:
      return "I";
    case Metric::kRefinedIndex:
      return "Iprime";
    case Metric::kAcp:
      return "ACP";
    case Metric::kAls:
      return "ALS";
  }
  return "?";
}

double metric_value(Metric metric, const MetricPoint& point, double threshold) {
  switch (metric) {
    case Metric::kIndex:
      return intelligence_index(point);
    case Metric::kRefinedIndex:
      return refined_index(point, threshold);
    case Metric::kAcp:
      return acp(point);
    case Metric::kAls:
      return als(point);
  }
  throw DomainError("unknown metric");
}

double label_mean_bits(const std::string& label) {
  std::istringstream in(label);
  std::string part;
  double sum = 0.0;
  int count = 0;
  while (std::getline(in, part, '-')) {
    try {
      size_t used = 0;
      const int bits = std::stoi(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      sum += bits;
      ++count;
    } catch (const std::exception&) {
      throw DomainError(fmt::format("malformed bit-width label '{}'", label));
    }
  }
  if (count == 0) {
    throw DomainError(fmt::format("malformed bit-width label '{}'", label));
  }
  return sum / count;
}

std::vector<RankEntry> rank_scores(std::span<const std::string> labels,
                                   std::span<const double> scores) {
  if (labels.empty()) throw DomainError("cannot rank an empty list");
  if (labels.size() != scores.size()) {
    throw DomainError("labels and scores differ in length");
  }
  std::vector<double> mean_bits(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    mean_bits[i] = label_mean_bits(labels[i]);
  }
  std::vector<size_t> order(labels.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return mean_bits[a] > mean_bits[b];
  });
  std::vector<RankEntry> out(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    out[i].bits_label = labels[i];
    out[i].score = scores[i];
  }
  for (size_t pos = 0; pos < order.size(); ++pos) {
    out[order[pos]].rank = static_cast<int>(pos) + 1;
  }
  return out;
}

std::vector<RankEntry> rank_configs(std::span<const MetricPoint> points,
                                    Metric metric,
                                    std::optional<double> threshold) {
  if (points.empty()) throw DomainError("cannot rank an empty list");
  if (metric == Metric::kRefinedIndex && !threshold) {
    throw DomainError("ranking by I' requires a threshold");
  }
  std::vector<std::string> labels;
  std::vector<double> scores;
  for (const auto& p : points) {
    labels.push_back(p.bits_label);
    scores.push_back(metric_value(metric, p, threshold.value_or(0.0)));
  }
  return rank_scores(labels, scores);
}

std::vector<AblationRow> threshold_ablation(std::span<const MetricPoint> points,
                                            const ThresholdSpec& spec,
                                            std::span<const double> delta_grid) {
  if (points.empty()) throw DomainError("ablation needs at least one point");
  if (delta_grid.empty()) throw DomainError("ablation needs a nonempty delta grid");
  std::vector<AblationRow> rows;
  for (double delta : delta_grid) {
    ThresholdSpec s = spec;
    s.delta = delta;
    AblationRow row;
    row.delta = delta;
    row.threshold = resolve_threshold(s);
    const auto ranks = rank_configs(points, Metric::kRefinedIndex, row.threshold);
    for (const auto& r : ranks) {
      if (r.rank == 1) {
        row.argmax_label = r.bits_label;
        row.peak_index_i_prime = r.score;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double round_half_away(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

}  // namespace qindex
