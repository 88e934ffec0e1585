#include "qindex/bench.hpp"

#include <time.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <thread>

#include <fmt/format.h>

#include "qindex/errors.hpp"

namespace qindex {
namespace {

using Clock = std::chrono::steady_clock;

// Keeps the optimiser from discarding an unused forward result.
volatile float g_sink = 0.0f;

}  // namespace

EnvironmentInfo capture_environment() {
  EnvironmentInfo env;
  char host[256] = {};
  if (gethostname(host, sizeof(host) - 1) == 0) env.host = host;
  env.hardware_threads = std::thread::hardware_concurrency();
  env.clock_source = "std::chrono::steady_clock";
  // steady_clock is CLOCK_MONOTONIC on Linux; report the kernel's resolution,
  // not the nominal tick period.
  timespec res{};
  env.clock_resolution_ns =
      clock_getres(CLOCK_MONOTONIC, &res) == 0
          ? static_cast<double>(res.tv_sec) * 1e9 + static_cast<double>(res.tv_nsec)
          : 1e9 * static_cast<double>(Clock::period::num) / Clock::period::den;
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
  env.timestamp = buf;
  return env;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

LatencySample measure_latency(const ForwardFn& model, const TimingProtocol& protocol,
                              const Tensor& input) {
  if (protocol.forward_threads != 1) {
    throw ProtocolError(fmt::format(
        "timed passes must run single-threaded, {} forward threads requested",
        protocol.forward_threads));
  }
  if (protocol.warmup_iters < 0 || protocol.timed_iters <= 0 || protocol.batch_size <= 0) {
    throw ProtocolError("timing protocol needs timed_iters and batch_size > 0");
  }
  if (input.rank() == 0 || input.dim(0) != protocol.batch_size) {
    throw ProtocolError(fmt::format("input batch {} does not match protocol batch size {}",
                                    input.rank() ? input.dim(0) : 0,
                                    protocol.batch_size));
  }

  LatencySample s;
  s.environment = capture_environment();
  for (int i = 0; i < protocol.warmup_iters; ++i) {
    const Tensor out = model(input);
    g_sink = g_sink + out[0];
  }
  s.durations_ms.reserve(static_cast<size_t>(protocol.timed_iters));
  for (int i = 0; i < protocol.timed_iters; ++i) {
    const auto t0 = Clock::now();
    const Tensor out = model(input);
    const auto t1 = Clock::now();
    g_sink = g_sink + out[0];
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (!(ms > 0.0)) {
      throw ProtocolError(fmt::format("timed pass {} measured zero duration", i));
    }
    s.durations_ms.push_back(ms);
  }
  s.median_ms = percentile(s.durations_ms, 0.5);
  s.p10_ms = percentile(s.durations_ms, 0.1);
  s.p90_ms = percentile(s.durations_ms, 0.9);
  const auto [mn, mx] = std::minmax_element(s.durations_ms.begin(), s.durations_ms.end());
  s.min_ms = *mn;
  s.max_ms = *mx;
  const double resolution_ms = s.environment.clock_resolution_ns * 1e-6;
  if (resolution_ms > 0.01 * s.median_ms) {
    s.warnings.push_back(fmt::format("clock resolution {} ms exceeds 1% of median {} ms",
                                     resolution_ms, s.median_ms));
  }
  return s;
}

}  // namespace qindex
