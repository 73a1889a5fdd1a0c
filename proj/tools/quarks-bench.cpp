// quarks-bench: load cycles against an in-process network.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "quarks/error.hpp"
#include "quarks/harness.hpp"
#include "quarks/log.hpp"

using namespace quarks;

int main(int argc, char** argv) {
  CLI::App app{"Quarks load harness"};
  std::size_t nodes = 3;
  std::string cycles = "20:100:20", stress = "110:150:10", out = "results", endpoints, log_level = "warn";
  double duration = 30, ratio = 1.0;
  std::optional<int> think_ms;
  double probe = 5;
  app.add_option("--nodes", nodes, "number of nodes");
  app.add_option("--cycles", cycles, "normal cycles as first:last:step");
  app.add_option("--stress", stress, "stress cycles as first:last:step; empty to skip");
  app.add_option("--duration", duration, "seconds per cycle");
  app.add_option("--ratio", ratio, "sends per read");
  app.add_option("--think-ms", think_ms, "mean pause between a user's requests; calibrated when omitted");
  app.add_option("--probe", probe, "seconds per calibration probe");
  app.add_option("--out", out, "output directory for CSV and charts");
  app.add_option("--export-endpoints", endpoints, "write the endpoint list as JSON to this file and exit");
  app.add_option("--log-level", log_level);
  CLI11_PARSE(app, argc, argv);

  try {
    log::set_level(log::parse_level(log_level));
    auto normal = harness::parse_cycle_range(cycles);
    std::vector<std::size_t> stressed;
    if (!stress.empty()) stressed = harness::parse_cycle_range(stress);
    const std::size_t ceiling = normal.back();

    harness::Network network(nodes);
    auto channel = harness::setup_channel(network, "bench");
    if (!endpoints.empty()) {
      std::ofstream(endpoints) << harness::endpoint_list(network, channel.id).dump(2) << '\n';
      std::cout << "endpoints written to " << endpoints << std::endl;
      return 0;
    }

    std::vector<harness::LoadCycleSpec> specs;
    for (auto n : normal) specs.push_back({n, std::chrono::milliseconds(static_cast<long>(duration * 1000)), ratio, {}});
    for (auto n : stressed) specs.push_back({n, std::chrono::milliseconds(static_cast<long>(duration * 1000)), ratio, {}});

    std::filesystem::create_directories(out);
    std::vector<harness::CycleResult> so_far;
    harness::RunOptions options;
    if (think_ms) {
      options.think_time = std::chrono::milliseconds(*think_ms);
    } else {
      const auto peak = std::max(normal.back(), stressed.empty() ? 0 : stressed.back());
      // The top of the normal range is the population the network is sized for.
      const auto saturate_at = normal.back();
      auto cal = harness::calibrate_think_time(network, channel, saturate_at, peak,
                                               std::chrono::milliseconds(static_cast<long>(probe * 1000)));
      options.think_time = cal.think_time;
      std::cout << "calibration: closed loop " << cal.closed_loop_rps << " rps, paced " << cal.saturated_rps
                << " rps, think time " << cal.think_time.count() << " ms" << std::endl;
    }
    options.on_cycle = [&](const harness::CycleResult& r) {
      so_far.push_back(r);
      harness::write_csv(so_far, std::filesystem::path(out) / "results.csv");
      const auto& all = r.op("all");
      std::cout << "cycle " << r.cycle << ": " << r.user_count << " users, median " << all.median_ms << " ms, p95 "
                << all.p95_ms << " ms, " << all.throughput_rps << " rps, " << all.failures << " failures"
                << std::endl;
    };
    auto results = harness::run_cycles(network, channel, specs, options);
    for (auto& f : harness::emit_plots(results, out, ceiling)) std::cout << "wrote " << f.string() << '\n';

    const auto replicas = harness::check_replicas(network, channel.id);
    auto report = harness::assert_trends(results, {0.10, 0.10, 0.15, ceiling});
    auto j = report.to_json();
    j["replicas"] = {{"consistent", replicas.consistent}, {"detail", replicas.detail}};
    j["degraded"] = std::any_of(results.begin(), results.end(), [](auto& r) { return r.failure_count() > 0; });
    std::cout << j.dump(2) << std::endl;
    return report.pass && replicas.consistent ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << std::endl;
    return exit_code(e.kind());
  }
}
