#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <random>
#include <thread>

#include "quarks/error.hpp"
#include "quarks/harness.hpp"
#include "quarks/log.hpp"

namespace quarks::harness {

namespace {

using Clock = std::chrono::steady_clock;

struct Sample {
  bool send = false;
  bool ok = false;
  double ms = 0;
};

std::int64_t wall_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

double percentile(std::vector<double>& v, double p) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

double median(std::vector<double>& v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

OpStats summarize(const std::vector<Sample>& samples, int which, double seconds) {
  std::vector<double> latencies;
  OpStats s;
  std::size_t ok = 0;
  for (const auto& x : samples) {
    if (which == 0 && !x.send) continue;
    if (which == 1 && x.send) continue;
    if (!x.ok) {
      ++s.failures;
      continue;
    }
    ++ok;
    latencies.push_back(x.ms);
  }
  s.median_ms = median(latencies);
  s.p95_ms = percentile(latencies, 0.95);
  s.throughput_rps = seconds > 0 ? static_cast<double>(ok) / seconds : 0;
  return s;
}

}  // namespace

const OpStats& CycleResult::op(const std::string& name) const {
  auto it = ops.find(name);
  if (it == ops.end()) fail(ErrorKind::not_found, "no statistics for operation " + name);
  return it->second;
}

std::vector<std::size_t> cycle_range(std::size_t first, std::size_t last, std::size_t step) {
  if (first == 0 || step == 0 || last < first) fail(ErrorKind::validation, "invalid cycle range");
  std::vector<std::size_t> out;
  for (auto n = first; n <= last; n += step) out.push_back(n);
  return out;
}

std::vector<std::size_t> parse_cycle_range(const std::string& text) {
  const auto a = text.find(':');
  const auto b = text.find(':', a == std::string::npos ? a : a + 1);
  try {
    if (a == std::string::npos) return cycle_range(std::stoul(text), std::stoul(text), 1);
    const auto first = std::stoul(text.substr(0, a));
    const auto last = std::stoul(text.substr(a + 1, b - a - 1));
    const auto step = b == std::string::npos ? 1 : std::stoul(text.substr(b + 1));
    return cycle_range(first, last, step);
  } catch (const std::logic_error&) {
    fail(ErrorKind::validation, "cycle range must look like first:last:step, got " + text);
  }
}

std::vector<CycleResult> run_cycles(Network& network, SharedChannel& channel,
                                    const std::vector<LoadCycleSpec>& specs, RunOptions options) {
  auto& users = channel.members;
  std::vector<CycleResult> results;
  std::size_t cycle_no = 0;
  for (const auto& spec : specs) {
    if (spec.user_count == 0) fail(ErrorKind::validation, "a cycle needs at least one user");
    if (spec.send_read_ratio <= 0) fail(ErrorKind::validation, "send/read ratio must be positive");
    auto targets = spec.target_nodes;
    if (targets.empty())
      for (std::size_t i = 0; i < network.size(); ++i)
        if (network.alive(i)) targets.push_back(i);

    // Warm-up: registration and membership are not measured.
    while (users.size() < spec.user_count) {
      const auto n = users.size();
      users.push_back(join_user(network, channel, "user" + std::to_string(n), targets[n % targets.size()]));
    }

    const auto count = spec.user_count;
    std::vector<std::vector<Sample>> per_user(count);
    std::barrier start_line(static_cast<std::ptrdiff_t>(count + 1));
    Clock::time_point deadline;
    std::vector<std::thread> threads;
    threads.reserve(count);
    for (std::size_t u = 0; u < count; ++u) {
      threads.emplace_back([&, u] {
        auto& c = *users[u];
        auto& samples = per_user[u];
        std::int64_t since = wall_ns();
        std::size_t sends = 0, reads = 0, seq = 0;
        std::mt19937 rng(static_cast<std::uint32_t>(u * 7919 + count));
        std::uniform_real_distribution<double> think(0.5, 1.5);
        // Alternate the starting operation so users do not move in lockstep.
        bool next_send = u % 2 == 0;
        start_line.arrive_and_wait();
        while (Clock::now() < deadline) {
          const auto t0 = Clock::now();
          bool ok = true;
          try {
            if (next_send) {
              c.send(channel.id, "load " + c.username() + " #" + std::to_string(++seq));
            } else {
              auto r = c.read(channel.id, since);
              for (const auto& m : r.messages) since = std::max(since, m.ledger_timestamp + 1);
              ok = r.failures.empty();
            }
          } catch (const std::exception& e) {
            ok = false;
            log::warn("harness", "request failed", {{"user", c.username()}, {"error", e.what()}});
          }
          const auto t1 = Clock::now();
          if (t1 - t0 > options.request_timeout) ok = false;
          if (t1 <= deadline) samples.push_back({next_send, ok, std::chrono::duration<double, std::milli>(t1 - t0).count()});
          (next_send ? sends : reads)++;
          next_send = static_cast<double>(sends) < spec.send_read_ratio * static_cast<double>(reads + 1);
          if (options.think_time.count() > 0)
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(
                static_cast<double>(options.think_time.count()) * think(rng)));
        }
      });
    }
    deadline = Clock::now() + spec.duration;
    start_line.arrive_and_wait();
    const auto started = Clock::now();
    for (auto& t : threads) t.join();
    const double seconds = std::chrono::duration<double>(std::min(Clock::now(), deadline) - started).count();

    std::vector<Sample> all;
    for (auto& v : per_user) all.insert(all.end(), v.begin(), v.end());
    CycleResult r;
    r.cycle = ++cycle_no;
    r.user_count = count;
    r.ops["send"] = summarize(all, 0, seconds);
    r.ops["read"] = summarize(all, 1, seconds);
    r.ops["all"] = summarize(all, 2, seconds);
    log::info("harness", "cycle finished",
              {{"cycle", r.cycle}, {"users", count}, {"throughput_rps", r.op("all").throughput_rps},
               {"median_ms", r.op("all").median_ms}, {"failures", r.failure_count()}});
    if (options.on_cycle) options.on_cycle(r);
    results.push_back(std::move(r));
  }
  return results;
}

Calibration calibrate_think_time(Network& network, SharedChannel& channel, std::size_t saturate_at,
                                 std::size_t peak_users, std::chrono::milliseconds probe) {
  if (saturate_at == 0 || peak_users < saturate_at) fail(ErrorKind::validation, "invalid calibration populations");
  Calibration c;
  LoadCycleSpec spec{peak_users, probe, 1.0, {}};
  // The first probe only warms connections and caches.
  run_cycles(network, channel, {spec});
  c.closed_loop_rps = run_cycles(network, channel, {spec}).front().op("all").throughput_rps;
  if (c.closed_loop_rps <= 0) fail(ErrorKind::unavailable, "calibration probe completed no requests");
  // Pacing the users to offer the closed-loop rate keeps the request mix close to a paced run,
  // which batches less and so saturates lower than a closed loop.
  RunOptions paced;
  paced.think_time = std::chrono::milliseconds(
      static_cast<long>(1000.0 * static_cast<double>(peak_users) / c.closed_loop_rps));
  c.saturated_rps = run_cycles(network, channel, {spec}, paced).front().op("all").throughput_rps;
  if (c.saturated_rps <= 0) fail(ErrorKind::unavailable, "calibration probe completed no requests");
  c.think_time = std::chrono::milliseconds(
      static_cast<long>(std::lround(1000.0 * static_cast<double>(saturate_at) / c.saturated_rps)));
  log::info("harness", "calibrated think time",
            {{"closed_loop_rps", c.closed_loop_rps}, {"saturated_rps", c.saturated_rps},
             {"think_ms", c.think_time.count()}});
  return c;
}

}  // namespace quarks::harness
