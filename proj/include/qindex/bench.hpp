#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qindex/network.hpp"

namespace qindex {

struct TimingProtocol {
  int warmup_iters = 100;
  int timed_iters = 1000;
  int64_t batch_size = 64;
  // Threads the forward pass may use while being timed. Anything other than
  // 1 is refused.
  int forward_threads = 1;
};

struct EnvironmentInfo {
  std::string host;
  unsigned hardware_threads = 0;
  std::string clock_source;
  double clock_resolution_ns = 0.0;
  std::string timestamp;  // UTC, ISO 8601
};

EnvironmentInfo capture_environment();

struct LatencySample {
  std::vector<double> durations_ms;  // timed passes only, in run order
  double median_ms = 0.0;
  double p10_ms = 0.0;
  double p90_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  EnvironmentInfo environment;
  std::vector<std::string> warnings;
};

// Linear-interpolated percentile (q in [0,1]) of unsorted values.
double percentile(std::vector<double> values, double q);

// Runs warmup passes untimed, then clocks every timed pass individually with
// a steady clock around a synchronous forward call. Throws ProtocolError for
// an invalid protocol or a zero-duration pass.
LatencySample measure_latency(const ForwardFn& model, const TimingProtocol& protocol,
                              const Tensor& input);

}  // namespace qindex
