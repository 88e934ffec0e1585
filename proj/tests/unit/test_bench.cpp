#include <chrono>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "qindex/bench.hpp"
#include "qindex/errors.hpp"

using namespace qindex;

namespace {

ForwardFn sleeper(std::chrono::microseconds d) {
  return [d](const Tensor& x) {
    std::this_thread::sleep_for(d);
    return x;
  };
}

}  // namespace

TEST(Bench, Percentile) {
  const std::vector<double> v{4, 1, 3, 2};
  EXPECT_EQ(percentile(v, 0.0), 1.0);
  EXPECT_EQ(percentile(v, 1.0), 4.0);
  EXPECT_EQ(percentile(v, 0.5), 2.5);
  EXPECT_THROW(percentile({}, 0.5), DomainError);
}

TEST(Bench, SinglePassMedian) {
  TimingProtocol p{0, 1, 2, 1};
  const auto s = measure_latency(sleeper(std::chrono::microseconds(200)), p, Tensor({2, 1}));
  ASSERT_EQ(s.durations_ms.size(), 1u);
  EXPECT_EQ(s.median_ms, s.durations_ms[0]);
  EXPECT_GE(s.median_ms, 0.2);
}

TEST(Bench, ProtocolViolations) {
  const auto f = sleeper(std::chrono::microseconds(1));
  EXPECT_THROW(measure_latency(f, {0, 1, 2, 2}, Tensor({2, 1})), ProtocolError);
  EXPECT_THROW(measure_latency(f, {0, 0, 2, 1}, Tensor({2, 1})), ProtocolError);
  EXPECT_THROW(measure_latency(f, {0, 1, 3, 1}, Tensor({2, 1})), ProtocolError);
}

TEST(Bench, OrderedStatistics) {
  const auto s = measure_latency(sleeper(std::chrono::microseconds(100)), {2, 20, 1, 1},
                                 Tensor({1, 1}));
  EXPECT_EQ(s.durations_ms.size(), 20u);
  EXPECT_LE(s.min_ms, s.p10_ms);
  EXPECT_LE(s.p10_ms, s.median_ms);
  EXPECT_LE(s.median_ms, s.p90_ms);
  EXPECT_LE(s.p90_ms, s.max_ms);
  EXPECT_FALSE(s.environment.timestamp.empty());
  EXPECT_GT(s.environment.clock_resolution_ns, 0.0);
}
