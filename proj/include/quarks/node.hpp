#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "quarks/certificate.hpp"
#include "quarks/ledger.hpp"
#include "quarks/transport.hpp"

namespace quarks::node {

struct NodeConfig {
  std::string address;  // host:port; both the listen address and the node's identity
  std::filesystem::path data_dir;
  std::vector<std::string> peers;

  /// Queued writes are cut into a block every block_interval, or as soon as max_batch are waiting.
  std::chrono::milliseconds block_interval{100};
  std::size_t max_batch = 50;
  std::chrono::seconds replay_ttl{600};
  std::chrono::seconds pending_add_ttl{300};
  std::size_t http_threads = 128;

  /// Outbound peer traffic. Defaults to plain HTTP.
  std::shared_ptr<net::Transport> transport;
};

/// Applies `key=value` lines (# comments allowed) on top of `base`. Recognized keys:
/// address, data_dir, peers (comma separated), block_interval_ms, max_batch,
/// replay_ttl_s, pending_add_ttl_s, http_threads.
NodeConfig apply_config_file(NodeConfig base, const std::filesystem::path& file);

struct NodeIdentity {
  std::string node_address;
  crypto::KeyPair ca_keypair;
  Certificate node_certificate;
};

struct UserRecord {
  std::string username;
  Certificate certificate;
  std::int64_t registered_at = 0;
};

void to_json(nlohmann::json& j, const UserRecord& r);
void from_json(const nlohmann::json& j, UserRecord& r);

struct ChannelStatus {
  std::string channel_id;
  std::string channel_name;
  std::string sequencer_address;
  std::uint64_t height = 0;
  crypto::Digest head_hash;
  std::size_t message_count = 0;
};

/// A Quarks node: certificate authority, off-chain user registry, channel ledger host,
/// sequencer for the channels it created and replica for the channels it joined.
class Node {
 public:
  explicit Node(NodeConfig config);
  ~Node();
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  /// Binds the HTTP listener and starts background workers.
  void start();
  /// Stops serving and joins all workers. Safe to call repeatedly.
  void stop();
  bool running() const;

  const NodeIdentity& identity() const;
  const std::string& address() const;
  const std::filesystem::path& data_dir() const;

  std::vector<std::string> channel_ids() const;
  std::optional<ChannelStatus> channel_status(const std::string& channel_id) const;
  /// Full chain verification of the in-memory replica.
  bool verify_channel(const std::string& channel_id) const;
  /// All message entries of the local replica, in key order.
  std::vector<ledger::StateEntry> channel_messages(const std::string& channel_id) const;
  ledger::LedgerDirectory channel_directory(const std::string& channel_id) const;
  std::optional<UserRecord> find_user(const std::string& username) const;

  /// Transport-independent request dispatch used by the HTTP listener.
  net::HttpResponse handle(const std::string& method, const std::string& path,
                           const std::string& body, const net::Headers& headers);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace quarks::node
