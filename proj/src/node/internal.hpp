#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "quarks/contract.hpp"
#include "quarks/ledger.hpp"
#include "quarks/node.hpp"
#include "quarks/transport.hpp"

namespace quarks::node::detail {

using Clock = std::chrono::steady_clock;

std::int64_t now_ns();
std::int64_t now_seconds();

std::string nonce_key(const crypto::Nonce& nonce);

/// Seen-nonce set with a time-to-live. Two generations rotate every `ttl`, so a nonce
/// is remembered for at least `ttl` and at most twice that.
class ReplayCache {
 public:
  explicit ReplayCache(std::chrono::seconds ttl) : ttl_(ttl), rotated_(Clock::now()) {}

  /// Records the nonce; false if it was already seen within the window.
  bool check_and_insert(const crypto::Nonce& nonce);

 private:
  std::chrono::seconds ttl_;
  std::mutex mu_;
  Clock::time_point rotated_;
  std::unordered_set<std::string> current_, previous_;
};

/// Off-chain user database: one JSON record per line, append-only.
class UserRegistry {
 public:
  explicit UserRegistry(std::filesystem::path file);

  /// Throws ErrorKind::conflict if the username is taken.
  void add(const UserRecord& record);
  std::optional<UserRecord> find(const std::string& username) const;

 private:
  std::filesystem::path file_;
  mutable std::shared_mutex mu_;
  std::map<std::string, UserRecord> users_;
};

NodeIdentity load_or_create_identity(const std::filesystem::path& file, const std::string& address);

/// Node certificates of peers, learned from their /healthz endpoint and pinned on first use.
class CaDirectory {
 public:
  CaDirectory(std::shared_ptr<net::Transport> transport, Certificate self)
      : transport_(std::move(transport)), self_(std::move(self)) {}

  Certificate resolve(const std::string& address);

  /// Verifies that `cert` was issued by the node named in its node_address.
  bool verify_user_certificate(const Certificate& cert);

  /// Certificate of `username` as stored by the node at `address`; cached.
  Certificate fetch_user_certificate(const std::string& username, const std::string& address);

 private:
  std::shared_ptr<net::Transport> transport_;
  Certificate self_;
  std::mutex mu_;
  std::map<std::string, Certificate> nodes_;
  std::map<std::pair<std::string, std::string>, Certificate> users_;
};

/// Context shared between the two add-member round trips.
class PendingAdds {
 public:
  explicit PendingAdds(std::chrono::seconds ttl) : ttl_(ttl) {}

  void put(const std::string& requester, const std::string& channel, const Certificate& target);
  std::optional<Certificate> find(const std::string& requester, const std::string& channel,
                                  const std::string& target_digest);
  void erase(const std::string& requester, const std::string& channel,
             const std::string& target_digest);

 private:
  using Key = std::tuple<std::string, std::string, std::string>;
  std::chrono::seconds ttl_;
  std::mutex mu_;
  std::map<Key, std::pair<Certificate, Clock::time_point>> entries_;
};

struct Committed {
  std::uint64_t height = 0;
  std::int64_t recorded_at = 0;
};

/// One hosted channel ledger. On the channel's sequencer node it owns the
/// sequencing queue and the replication push loop; elsewhere it is a replica that
/// accepts pushed blocks and snapshots.
class Channel {
 public:
  Channel(ledger::Ledger ledger, ledger::LedgerDirectory dir, const NodeIdentity& self,
          std::shared_ptr<net::Transport> transport, const NodeConfig& config);
  ~Channel();

  const std::string& id() const { return id_; }
  const std::string& name() const { return name_; }
  const std::string& sequencer_address() const { return sequencer_; }
  bool is_sequencer() const { return is_sequencer_; }
  const ledger::LedgerDirectory& directory() const { return dir_; }

  void start();
  void stop();

  /// Sequences one transaction. Blocks until it is committed or rejected.
  Committed submit(ledger::Transaction tx);
  /// Waits until a replication round covering `height` has finished.
  bool wait_replicated(std::uint64_t height, std::chrono::milliseconds timeout);
  std::map<std::string, std::uint64_t> peer_heights() const;

  /// Replica side. Returns the local height afterwards.
  std::uint64_t accept_blocks(const std::vector<ledger::Block>& blocks, const Certificate& sender);
  std::uint64_t import(ledger::Ledger candidate, const Certificate& sender);

  template <typename F>
  auto read(F&& f) const {
    std::shared_lock lock(mu_);
    return f(*ledger_);
  }

  ChannelStatus status() const;
  void persist_state() const;

 private:
  struct Pending {
    ledger::Transaction tx;
    std::promise<Committed> done;
  };
  struct Peer {
    std::optional<std::uint64_t> acked;
    Clock::time_point next_attempt{};
    std::chrono::milliseconds backoff{0};
  };

  void sequencer_loop();
  void process(std::vector<Pending>& batch);
  void replicator_loop();
  void replicate_to(const std::string& address, std::uint64_t target);
  std::uint64_t push_blocks(const std::string& address, std::uint64_t from, std::uint64_t to);
  std::uint64_t push_snapshot(const std::string& address);
  std::vector<std::string> peer_addresses() const;
  void index_nonces();

  std::string id_, name_, sequencer_;
  bool is_sequencer_ = false;
  ledger::LedgerDirectory dir_;
  const NodeIdentity& self_;
  std::shared_ptr<net::Transport> transport_;
  NodeConfig config_;

  mutable std::shared_mutex mu_;
  std::optional<ledger::Ledger> ledger_;
  std::unordered_set<std::string> committed_nonces_;
  std::int64_t last_recorded_at_ = 0;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Pending> queue_;

  mutable std::mutex repl_mu_;
  std::condition_variable repl_cv_, repl_done_cv_;
  bool repl_dirty_ = false;
  std::uint64_t replicated_through_ = 0;
  std::map<std::string, Peer> peers_;

  bool stopping_ = false;
  std::thread sequencer_thread_, replicator_thread_;
};

/// Signed node-to-node request.
net::HttpResponse post_signed(net::Transport& transport, const NodeIdentity& self,
                              const std::string& address, const std::string& path,
                              const nlohmann::json& body);

}  // namespace quarks::node::detail
