#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "quarks/client.hpp"
#include "quarks/node.hpp"

namespace quarks::harness {

/// A TCP port that was free at the time of the call.
std::uint16_t free_port();

struct NetworkOptions {
  /// Parent of the per-node data directories; a fresh temporary directory when empty.
  std::filesystem::path root;
  /// Outbound transport for node-to-node traffic, e.g. a capturing one.
  std::shared_ptr<net::Transport> node_transport;
  std::size_t http_threads = 384;
};

/// In-process nodes listening on loopback ports.
class Network {
 public:
  Network(std::size_t node_count, NetworkOptions options = {});
  ~Network();
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  std::size_t size() const { return nodes_.size(); }
  node::Node& node(std::size_t i) { return *nodes_.at(i); }
  const std::string& address(std::size_t i) const { return addresses_.at(i); }
  const std::vector<std::string>& addresses() const { return addresses_; }
  const std::filesystem::path& root() const { return root_; }

  /// Stops node i; its data directory stays in place.
  void kill(std::size_t i);
  bool alive(std::size_t i) const;
  void shutdown();

 private:
  std::filesystem::path root_;
  bool owns_root_ = false;
  std::vector<std::string> addresses_;
  std::vector<std::unique_ptr<node::Node>> nodes_;
};

std::unique_ptr<Network> spawn_network(std::size_t node_count, NetworkOptions options = {});

/// A channel shared by every node of the network, created by a user on node 0.
struct SharedChannel {
  std::string id;
  std::unique_ptr<client::Client> owner;
  /// Simulated users joined so far; load runs reuse and extend this list.
  std::vector<std::unique_ptr<client::Client>> members;
};

/// Phases 1 to 3: the owner registers on node 0, creates `name`, and federates all other nodes.
SharedChannel setup_channel(Network& network, const std::string& name);

/// Phases 1, 4 and 5 for one user: register on node `home`, get added by the owner, fetch the key.
std::unique_ptr<client::Client> join_user(Network& network, SharedChannel& channel,
                                          const std::string& username, std::size_t home);

struct ReplicaCheck {
  bool consistent = false;
  std::string detail;
};

/// Every live node verifies its copy of the channel and all copies reach the same head hash
/// within `wait`.
ReplicaCheck check_replicas(Network& network, const std::string& channel_id,
                            std::chrono::milliseconds wait = std::chrono::milliseconds(5000));

/// REST endpoints of every node for the channel, for driving the network with external tools.
nlohmann::json endpoint_list(const Network& network, const std::string& channel_id);

struct LoadCycleSpec {
  std::size_t user_count = 1;
  std::chrono::milliseconds duration{30000};
  /// Sends per read; 1.0 means one send for every read.
  double send_read_ratio = 1.0;
  /// Node indices users are spread over round-robin; all nodes when empty.
  std::vector<std::size_t> target_nodes;
};

struct OpStats {
  double median_ms = 0;
  double p95_ms = 0;
  double throughput_rps = 0;
  std::size_t failures = 0;

  friend bool operator==(const OpStats&, const OpStats&) = default;
};

/// Per-cycle measurement. Operations are "send", "read" and "all".
struct CycleResult {
  std::size_t cycle = 0;
  std::size_t user_count = 0;
  std::map<std::string, OpStats> ops;

  const OpStats& op(const std::string& name) const;
  std::size_t failure_count() const { return op("all").failures; }

  friend bool operator==(const CycleResult&, const CycleResult&) = default;
};

struct RunOptions {
  /// Mean pause between a user's consecutive requests, drawn uniformly from [0.5, 1.5] times this.
  std::chrono::milliseconds think_time{0};
  std::chrono::milliseconds request_timeout{10000};
  /// Called after each cycle.
  std::function<void(const CycleResult&)> on_cycle;
};

/// Runs each cycle in order. Users needed by a cycle are registered and joined during a
/// warm-up that is excluded from measurement; users persist into later cycles.
std::vector<CycleResult> run_cycles(Network& network, SharedChannel& channel,
                                    const std::vector<LoadCycleSpec>& specs, RunOptions options = {});

struct Calibration {
  /// Closed-loop throughput of `peak_users` users with no think time.
  double closed_loop_rps = 0;
  /// Throughput of `peak_users` users pacing themselves to offer closed_loop_rps.
  double saturated_rps = 0;
  std::chrono::milliseconds think_time{0};
};

/// Picks the think time at which the offered load of `saturate_at` users matches the measured
/// capacity, so smaller populations run below saturation and larger ones at it. Runs three probes
/// of `probe` each with `peak_users` users; probe traffic is not part of any cycle result.
Calibration calibrate_think_time(Network& network, SharedChannel& channel, std::size_t saturate_at,
                                 std::size_t peak_users, std::chrono::milliseconds probe = std::chrono::milliseconds(5000));

/// Cycles from `first` to `last` inclusive in steps of `step`.
std::vector<std::size_t> cycle_range(std::size_t first, std::size_t last, std::size_t step);
/// Parses "first:last:step".
std::vector<std::size_t> parse_cycle_range(const std::string& text);

struct TrendTolerance {
  double throughput_step = 0.10;
  double latency_step = 0.10;
  double plateau = 0.15;
  /// Cycles above this user count are stress cycles.
  std::size_t normal_ceiling = 100;
};

struct TrendCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct TrendReport {
  bool pass = false;
  std::vector<TrendCheck> checks;

  nlohmann::json to_json() const;
};

/// Checks the load curve shape: total throughput non-decreasing over normal cycles, the median
/// latency of send and of read each non-decreasing over normal cycles, a total-throughput plateau
/// over stress cycles, and zero failures. Never throws on a failing series.
TrendReport assert_trends(const std::vector<CycleResult>& results, TrendTolerance tolerance = {});

void write_csv(const std::vector<CycleResult>& results, const std::filesystem::path& file);
std::vector<CycleResult> read_csv(const std::filesystem::path& file);

/// results.csv plus four SVG charts: median latency and throughput, normal and stress.
/// Throws ErrorKind::validation on an empty result set.
std::vector<std::filesystem::path> emit_plots(const std::vector<CycleResult>& results,
                                              const std::filesystem::path& output_dir,
                                              std::size_t normal_ceiling = 100);

}  // namespace quarks::harness
