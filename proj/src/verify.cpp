#include "qindex/verify.hpp"

#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "qindex/errors.hpp"

namespace qindex {
namespace {

constexpr Metric kAllMetrics[] = {Metric::kIndex, Metric::kRefinedIndex, Metric::kAcp,
                                  Metric::kAls};

int published_rank(const PublishedRank& r, Metric metric) {
  switch (metric) {
    case Metric::kIndex:
      return r.i;
    case Metric::kRefinedIndex:
      return r.iprime;
    case Metric::kAcp:
      return r.acp;
    case Metric::kAls:
      return r.als;
  }
  return 0;
}

std::vector<int> ranks_of(const std::vector<std::string>& labels,
                          const std::vector<double>& scores) {
  std::vector<int> out;
  for (const auto& e : rank_scores(labels, scores)) out.push_back(e.rank);
  return out;
}

}  // namespace

std::array<double, 3> seed_values(double mean, double std) {
  return {mean - std, mean, mean + std};
}

double seed_grid_mean(const PublishedRow& row, Metric metric, double threshold) {
  double sum = 0.0;
  for (double p : seed_values(row.p_mean, row.p_std)) {
    for (double t : seed_values(row.t_mean, row.t_std)) {
      sum += metric_value(metric, MetricPoint{row.bits, p, row.c, t}, threshold);
    }
  }
  return sum / 9.0;
}

double index_of_means(const PublishedRow& row, Metric metric, double threshold) {
  return metric_value(metric, MetricPoint{row.bits, row.p_mean, row.c, row.t_mean},
                      threshold);
}

bool VerifyReport::passed() const { return failures() == 0; }

int VerifyReport::failures() const {
  int n = 0;
  for (const auto& v : values) n += !v.pass;
  for (const auto& r : ranks) n += !r.pass;
  for (const auto& t : thresholds) n += !t.pass;
  return n;
}

double rule_threshold(const PublishedCondition& condition) {
  return resolve_threshold(
      ThresholdSpec{condition.num_classes, condition.fp_accuracy(), condition.delta});
}

ThresholdCheck check_threshold(const PublishedCondition& condition, double threshold) {
  ThresholdCheck c;
  c.condition = condition.key;
  c.threshold = threshold;
  for (const auto& r : condition.rows) {
    if (!(r.iprime_mean > 0.0) || !(r.i_mean > 0.0)) continue;
    const double predicted = 1.0 - threshold / r.p_mean;
    c.max_ratio_error =
        std::max(c.max_ratio_error, std::fabs(predicted - r.iprime_mean / r.i_mean));
    ++c.rows_checked;
  }
  c.pass = c.rows_checked > 0 && c.max_ratio_error <= kRatioTolerance;
  return c;
}

VerifyReport verify_published(const PublishedResults& results) {
  VerifyReport report;
  for (const auto& cond : results.ptq_sweep) {
    const double thresh = rule_threshold(cond);
    report.thresholds.push_back(check_threshold(cond, thresh));
    for (const auto& row : cond.rows) {
      for (Metric m : {Metric::kIndex, Metric::kRefinedIndex}) {
        ValueCheck v;
        v.group = "ptq_sweep";
        v.condition = cond.key;
        v.bits = row.bits;
        v.quantity = metric_name(m);
        v.computed = seed_grid_mean(row, m, thresh);
        v.index_of_means = index_of_means(row, m, thresh);
        v.reported = m == Metric::kIndex ? row.i_mean : row.iprime_mean;
        v.tolerance = kPtqTolerance;
        v.pass = std::fabs(v.computed - v.reported) <= v.tolerance;
        report.values.push_back(v);
      }
    }
  }

  const auto& llm = results.llm_sweep;
  for (const auto& row : llm.rows) {
    const MetricPoint point{row.bits, row.p, row.c, row.t};
    for (Metric m : {Metric::kIndex, Metric::kRefinedIndex}) {
      ValueCheck v;
      v.group = "llm_sweep";
      v.condition = row.method;
      v.bits = row.bits;
      v.quantity = metric_name(m);
      v.computed = llm.scale * metric_value(m, point, llm.threshold);
      v.index_of_means = v.computed;
      v.reported = m == Metric::kIndex ? row.i : row.iprime;
      v.tolerance = kLlmTolerance;
      v.pass = std::fabs(v.computed - v.reported) <= v.tolerance;
      report.values.push_back(v);
    }
  }

  for (const auto& ranking : results.rankings) {
    const auto& cond = results.condition(ranking.dataset);
    const double thresh = rule_threshold(cond);
    for (Metric m : kAllMetrics) {
      RankCheck rc;
      rc.dataset = ranking.dataset;
      rc.metric = metric_name(m);
      std::vector<double> grid, means;
      for (const auto& pr : ranking.ranks) {
        const auto& row = cond.row(pr.bits);
        rc.bits.push_back(pr.bits);
        rc.reported.push_back(published_rank(pr, m));
        grid.push_back(seed_grid_mean(row, m, thresh));
        means.push_back(index_of_means(row, m, thresh));
      }
      rc.computed = ranks_of(rc.bits, grid);
      rc.computed_index_of_means = ranks_of(rc.bits, means);
      rc.pass = rc.computed == rc.reported;
      report.ranks.push_back(std::move(rc));
    }
  }
  return report;
}

std::string format_verify_report(const VerifyReport& report) {
  std::string out;
  out += fmt::format("{:<10} {:<18} {:>5} {:<7} {:>10} {:>10} {:>10} {:>9} {:>7}  {}\n",
                     "group", "condition", "bits", "metric", "computed", "of-means",
                     "reported", "diff", "tol", "status");
  for (const auto& v : report.values) {
    out += fmt::format("{:<10} {:<18} {:>5} {:<7} {:>10.4f} {:>10.4f} {:>10.3f} {:>+9.4f} {:>7.3f}  {}\n",
                       v.group, v.condition, v.bits, v.quantity, v.computed,
                       v.index_of_means, v.reported, v.computed - v.reported, v.tolerance,
                       v.pass ? "ok" : "FAIL");
  }
  out += "\n";
  for (const auto& t : report.thresholds) {
    out += fmt::format("threshold {:<18} {:.4f}  max ratio error {:.4f} over {} rows  {}\n",
                       t.condition, t.threshold, t.max_ratio_error, t.rows_checked,
                       t.pass ? "ok" : "FAIL");
  }
  out += "\n";
  for (const auto& r : report.ranks) {
    out += fmt::format("ranks {:<9} {:<7} bits [{}] computed [{}] reported [{}] "
                       "(of-means [{}])  {}\n",
                       r.dataset, r.metric, fmt::join(r.bits, ","), fmt::join(r.computed, ","),
                       fmt::join(r.reported, ","), fmt::join(r.computed_index_of_means, ","),
                       r.pass ? "ok" : "FAIL");
  }
  int values_ok = 0, ranks_ok = 0;
  for (const auto& v : report.values) values_ok += v.pass;
  for (const auto& r : report.ranks) ranks_ok += r.pass;
  out += fmt::format("\nvalues {}/{} ok, rank columns {}/{} ok, thresholds {}/{} ok: {}\n",
                     values_ok, report.values.size(), ranks_ok, report.ranks.size(),
                     report.thresholds.size() - [&] {
                       int n = 0;
                       for (const auto& t : report.thresholds) n += !t.pass;
                       return n;
                     }(),
                     report.thresholds.size(), report.passed() ? "PASS" : "FAIL");
  return out;
}

}  // namespace qindex
