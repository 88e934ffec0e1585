#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qindex/errors.hpp"
#include "qindex/metrics.hpp"

using namespace qindex;

namespace {

MetricPoint pt(double p, double c, double t, std::string label = "x") {
  return MetricPoint{std::move(label), p, c, t};
}

// CIFAR-10 column means: bits, P, C, T.
struct Row {
  const char* bits;
  double p, c, t;
};
constexpr Row kCifar10[] = {
    {"32", 0.7981, 1.0, 0.48}, {"16", 0.7982, 2.0, 0.69}, {"8", 0.7968, 4.0, 1.16},
    {"4", 0.5818, 8.0, 1.11},  {"2", 0.10, 16.0, 1.09},
};

std::vector<MetricPoint> cifar10_points() {
  std::vector<MetricPoint> out;
  for (const auto& r : kCifar10) out.push_back(pt(r.p, r.c, r.t, r.bits));
  return out;
}

std::vector<std::string> by_rank(const std::vector<RankEntry>& ranks) {
  std::vector<std::string> out(ranks.size());
  for (const auto& e : ranks) out[static_cast<size_t>(e.rank - 1)] = e.bits_label;
  return out;
}

}  // namespace

TEST(Metrics, SpatialUtility) {
  EXPECT_NEAR(spatial_utility(4.0, 0.7968), 3.1872, 1e-12);
  EXPECT_EQ(spatial_utility(16.0, 0.0), 0.0);
  EXPECT_EQ(spatial_utility(1.0, 1.0), 1.0);
  EXPECT_THROW(spatial_utility(0.0, 0.5), DomainError);
  EXPECT_THROW(spatial_utility(1.0, 1.5), DomainError);
  EXPECT_THROW(spatial_utility(1.0, -0.1), DomainError);
}

TEST(Metrics, LatencyPenalty) {
  EXPECT_EQ(latency_penalty(1.0), 1.0);
  EXPECT_NEAR(latency_penalty(30.0), std::log(31.0) / std::log(2.0), 1e-12);
  EXPECT_NEAR(latency_penalty(30.0), 4.9542, 5e-5);
  EXPECT_NEAR(latency_penalty(0.48), 0.5656, 5e-5);
  EXPECT_THROW(latency_penalty(0.0), DomainError);
  EXPECT_THROW(latency_penalty(-1.0), DomainError);
}

TEST(Metrics, IntelligenceIndex) {
  EXPECT_NEAR(intelligence_index(pt(0.7968, 4.0, 1.16)), 2.869, 5e-4);
  EXPECT_NEAR(intelligence_index(pt(0.666, 1.0, 30.0)), 0.13444, 1e-5);
  EXPECT_EQ(intelligence_index(pt(0.0, 16.0, 1.0)), 0.0);
  EXPECT_THROW(intelligence_index(pt(0.5, 1.0, 0.0)), DomainError);
}

TEST(Metrics, ResolveThreshold) {
  EXPECT_NEAR(resolve_threshold({10, 0.9921, 0.19}), 0.8021, 1e-12);
  EXPECT_NEAR(resolve_threshold({100, 0.4798, 0.43}), 0.0498, 1e-12);
  EXPECT_EQ(resolve_threshold({10, 0.05, 0.30}), 0.1);
  EXPECT_THROW(resolve_threshold({0, 0.9, 0.1}), DomainError);
}

TEST(Metrics, RefinedIndex) {
  EXPECT_NEAR(refined_index(pt(0.63, 4.0, 24.0), 0.60), 0.02584, 5e-6);
  EXPECT_EQ(refined_index(pt(0.10, 16.0, 1.09), 0.4981), 0.0);
  EXPECT_EQ(refined_index(pt(0.4981, 4.0, 1.0), 0.4981), 0.0);
}

TEST(Metrics, RefinedNeverExceedsIndex) {
  for (double p = 0.0; p <= 1.0; p += 0.05) {
    for (double th : {0.0, 0.1, 0.5, 0.9}) {
      const auto x = pt(p, 4.0, 2.0);
      EXPECT_LE(refined_index(x, th), intelligence_index(x) + 1e-15);
    }
  }
}

TEST(Metrics, Baselines) {
  EXPECT_NEAR(acp(pt(0.5818, 8.0, 1.0)), 4.654, 5e-4);
  EXPECT_EQ(acp(pt(0.0, 1.0, 1.0)), 0.0);
  EXPECT_NEAR(acp(pt(0.10, 16.0, 1.0)), 1.6, 1e-12);
  EXPECT_GT(acp(pt(0.10, 16.0, 1.0)), acp(pt(0.7982, 2.0, 1.0)));
  EXPECT_NEAR(als(pt(0.7981, 1.0, 0.48)), 1.4111, 5e-5);
  EXPECT_EQ(als(pt(0.0, 1.0, 5.0)), 0.0);
  EXPECT_NEAR(als(pt(0.10, 1.0, 1.09)), 0.0940, 5e-5);
}

TEST(Metrics, RanksCifar10) {
  const auto points = cifar10_points();
  EXPECT_EQ(by_rank(rank_configs(points, Metric::kIndex)),
            (std::vector<std::string>{"4", "8", "16", "2", "32"}));
  EXPECT_EQ(by_rank(rank_configs(points, Metric::kRefinedIndex, 0.4981)),
            (std::vector<std::string>{"8", "16", "4", "32", "2"}));
  EXPECT_EQ(by_rank(rank_configs(points, Metric::kAcp))[0], "4");
  const auto als_order = by_rank(rank_configs(points, Metric::kAls));
  EXPECT_EQ(als_order.front(), "32");
  EXPECT_EQ(als_order.back(), "2");
}

TEST(Metrics, RankEdgeCases) {
  const std::vector<MetricPoint> one{pt(0.5, 1.0, 1.0, "8")};
  const auto r = rank_configs(one, Metric::kIndex);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].rank, 1);
  EXPECT_THROW(rank_configs(std::vector<MetricPoint>{}, Metric::kIndex), DomainError);
  EXPECT_THROW(rank_configs(one, Metric::kRefinedIndex), DomainError);
}

TEST(Metrics, RankTiesPreferMoreBits) {
  const std::vector<std::string> labels{"4", "8-8-8-4", "8"};
  const std::vector<double> scores{1.0, 1.0, 1.0};
  const auto r = rank_scores(labels, scores);
  EXPECT_EQ(r[2].rank, 1);
  EXPECT_EQ(r[1].rank, 2);
  EXPECT_EQ(r[0].rank, 3);
}

TEST(Metrics, LabelMeanBits) {
  EXPECT_EQ(label_mean_bits("8"), 8.0);
  EXPECT_EQ(label_mean_bits("8-8-8-4"), 7.0);
}

TEST(Metrics, ThresholdAblation) {
  const auto points = cifar10_points();
  const std::vector<double> grid{0.30};
  const auto rows = threshold_ablation(points, {10, 0.7981, 0.0}, grid);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].argmax_label, "8");

  // MNIST means: the random-chance floor takes over at large delta.
  const std::vector<MetricPoint> mnist{pt(0.9921, 1.0, 0.60, "32"),
                                       pt(0.9921, 2.0, 0.75, "16"),
                                       pt(0.9918, 4.0, 1.25, "8"),
                                       pt(0.9869, 8.0, 1.32, "4"),
                                       pt(0.1015, 16.0, 1.15, "2")};
  const std::vector<double> wide{0.90, 0.95};
  for (const auto& row : threshold_ablation(mnist, {10, 0.9921, 0.0}, wide)) {
    EXPECT_EQ(row.threshold, 0.1);
    EXPECT_EQ(row.argmax_label, "4");
  }

  const std::vector<double> zero{0.0};
  const auto strict = threshold_ablation(points, {10, 0.7981, 0.0}, zero);
  for (const auto& p : points) {
    if (p.accuracy_p < 0.7981) EXPECT_EQ(refined_index(p, strict[0].threshold), 0.0);
  }
}

TEST(Metrics, RoundHalfAway) {
  EXPECT_EQ(round_half_away(2.5, 0), 3.0);
  EXPECT_EQ(round_half_away(-2.5, 0), -3.0);
  EXPECT_NEAR(round_half_away(0.12345, 4), 0.1235, 1e-12);
}
