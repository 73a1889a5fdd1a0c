#include <algorithm>

#include "internal.hpp"
#include "quarks/error.hpp"
#include "quarks/log.hpp"

namespace quarks::node::detail {

using nlohmann::json;

namespace {

constexpr std::size_t blocks_per_push = 32;
constexpr auto max_backoff = std::chrono::milliseconds(5000);
constexpr auto initial_backoff = std::chrono::milliseconds(100);
constexpr auto submit_timeout = std::chrono::seconds(30);

std::uint64_t height_from(const json& j) {
  if (!j.contains("height") || !j["height"].is_number_unsigned())
    fail(ErrorKind::network, "peer response carries no height");
  return j["height"].get<std::uint64_t>();
}

}  // namespace

Channel::Channel(ledger::Ledger ledger, ledger::LedgerDirectory dir, const NodeIdentity& self,
                 std::shared_ptr<net::Transport> transport, const NodeConfig& config)
    : dir_(std::move(dir)), self_(self), transport_(std::move(transport)), config_(config) {
  id_ = ledger.channel_id();
  name_ = contract::channel_name(ledger.state()).value_or("");
  sequencer_ = ledger.blocks().front().transactions.front().submitter_node_certificate.node_address;
  is_sequencer_ = sequencer_ == self_.node_address;
  ledger_.emplace(std::move(ledger));
  index_nonces();
  replicated_through_ = ledger_->height();
}

Channel::~Channel() { stop(); }

void Channel::index_nonces() {
  committed_nonces_.clear();
  for (const auto& block : ledger_->blocks())
    for (const auto& tx : block.transactions) {
      committed_nonces_.insert(nonce_key(tx.nonce));
      last_recorded_at_ = std::max(last_recorded_at_, tx.recorded_at);
    }
}

void Channel::start() {
  if (!is_sequencer_ || sequencer_thread_.joinable()) return;
  stopping_ = false;
  sequencer_thread_ = std::thread([this] { sequencer_loop(); });
  replicator_thread_ = std::thread([this] { replicator_loop(); });
}

void Channel::stop() {
  {
    std::scoped_lock lock(queue_mu_, repl_mu_);
    if (stopping_ && !sequencer_thread_.joinable()) return;
    stopping_ = true;
  }
  queue_cv_.notify_all();
  repl_cv_.notify_all();
  repl_done_cv_.notify_all();
  if (sequencer_thread_.joinable()) sequencer_thread_.join();
  if (replicator_thread_.joinable()) replicator_thread_.join();
  std::lock_guard lock(queue_mu_);
  for (auto& p : queue_)
    p.done.set_exception(std::make_exception_ptr(Error(ErrorKind::unavailable, "node is stopping")));
  queue_.clear();
}

Committed Channel::submit(ledger::Transaction tx) {
  if (!is_sequencer_) fail(ErrorKind::state, "this node does not sequence channel " + id_);
  std::future<Committed> result;
  {
    std::lock_guard lock(queue_mu_);
    if (stopping_) fail(ErrorKind::unavailable, "node is stopping");
    queue_.push_back(Pending{std::move(tx), {}});
    result = queue_.back().done.get_future();
    if (queue_.size() >= config_.max_batch) queue_cv_.notify_one();
  }
  if (result.wait_for(submit_timeout) != std::future_status::ready)
    fail(ErrorKind::unavailable, "sequencer did not commit in time");
  return result.get();
}

void Channel::sequencer_loop() {
  const auto interval = std::max(config_.block_interval, std::chrono::milliseconds(1));
  auto next_flush = std::chrono::steady_clock::now() + interval;
  for (;;) {
    std::vector<Pending> batch;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait_until(lock, next_flush,
                           [&] { return stopping_ || queue_.size() >= config_.max_batch; });
      if (stopping_) return;
      const auto now = std::chrono::steady_clock::now();
      if (now >= next_flush) {
        next_flush += interval;
        if (next_flush <= now) next_flush = now + interval;
      }
      while (!queue_.empty() && batch.size() < config_.max_batch) {
        batch.push_back(std::move(queue_.front()));
        queue_.pop_front();
      }
    }
    if (!batch.empty()) process(batch);
  }
}

void Channel::process(std::vector<Pending>& batch) {
  std::vector<std::pair<Pending*, Committed>> accepted;
  std::unordered_set<std::string> batch_nonces;
  std::uint64_t height = 0;
  {
    std::unique_lock lock(mu_);
    for (auto& p : batch) {
      auto key = nonce_key(p.tx.nonce);
      if (committed_nonces_.count(key) != 0 || batch_nonces.count(key) != 0) {
        p.done.set_exception(
            std::make_exception_ptr(Error(ErrorKind::replay, "request nonce was already committed")));
        continue;
      }
      const auto recorded_at = std::max(now_ns(), last_recorded_at_ + 1);
      p.tx.recorded_at = recorded_at;
      ledger::finalize(p.tx);
      try {
        ledger_->stage(p.tx);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::forbidden)
          log::warn("contract", "guard rejected transaction",
                    {{"channel", id_}, {"function", p.tx.function_name},
                     {"submitter", p.tx.submitter_certificate.username}});
        p.done.set_exception(std::current_exception());
        continue;
      } catch (const std::exception& e) {
        p.done.set_exception(std::make_exception_ptr(Error(ErrorKind::internal, e.what())));
        continue;
      }
      last_recorded_at_ = recorded_at;
      batch_nonces.insert(std::move(key));
      accepted.push_back({&p, Committed{0, recorded_at}});
    }
    if (accepted.empty()) return;
    const auto& block = ledger_->commit_staged();
    height = block.height;
    for (auto& key : batch_nonces) committed_nonces_.insert(key);
    try {
      dir_.write_block(block);
    } catch (const std::exception& e) {
      log::error("ledger", "failed to persist block", {{"channel", id_}, {"error", e.what()}});
    }
  }
  {
    std::lock_guard lock(repl_mu_);
    repl_dirty_ = true;
  }
  repl_cv_.notify_one();
  for (auto& [p, c] : accepted) {
    c.height = height;
    p->done.set_value(c);
  }
}

bool Channel::wait_replicated(std::uint64_t height, std::chrono::milliseconds timeout) {
  std::unique_lock lock(repl_mu_);
  return repl_done_cv_.wait_for(lock, timeout,
                                [&] { return stopping_ || replicated_through_ >= height; }) &&
         replicated_through_ >= height;
}

std::map<std::string, std::uint64_t> Channel::peer_heights() const {
  std::lock_guard lock(repl_mu_);
  std::map<std::string, std::uint64_t> out;
  for (const auto& [address, peer] : peers_)
    if (peer.acked) out[address] = *peer.acked;
  return out;
}

std::vector<std::string> Channel::peer_addresses() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  const auto& entries = ledger_->state().entries();
  // ACL node entries sort under "acl:node:" followed by a hex digest.
  for (auto it = entries.lower_bound("acl:node:"); it != entries.end(); ++it) {
    if (it->first.rfind("acl:node:", 0) != 0) break;
    auto cert = json::parse(it->second.begin(), it->second.end()).get<Certificate>();
    if (cert.node_address != self_.node_address) out.push_back(cert.node_address);
  }
  return out;
}

void Channel::replicator_loop() {
  for (;;) {
    {
      std::unique_lock lock(repl_mu_);
      auto wake = Clock::now() + std::chrono::seconds(1);
      for (const auto& [address, peer] : peers_)
        if (peer.backoff.count() > 0) wake = std::min(wake, peer.next_attempt);
      repl_cv_.wait_until(lock, wake, [&] { return stopping_ || repl_dirty_; });
      if (stopping_) return;
      repl_dirty_ = false;
    }
    const auto target = read([](const ledger::Ledger& l) { return l.height(); });
    for (const auto& address : peer_addresses()) {
      {
        std::lock_guard lock(repl_mu_);
        auto& peer = peers_[address];
        if (peer.acked && *peer.acked >= target) continue;
        if (peer.backoff.count() > 0 && Clock::now() < peer.next_attempt) continue;
      }
      try {
        replicate_to(address, target);
        std::lock_guard lock(repl_mu_);
        peers_[address].backoff = {};
      } catch (const std::exception& e) {
        std::lock_guard lock(repl_mu_);
        auto& peer = peers_[address];
        peer.backoff = std::min<std::chrono::milliseconds>(
            peer.backoff.count() == 0 ? initial_backoff : peer.backoff * 2, max_backoff);
        peer.next_attempt = Clock::now() + peer.backoff;
        log::warn("replication", "push failed",
                  {{"channel", id_}, {"peer", address}, {"error", e.what()},
                   {"retry_ms", peer.backoff.count()}});
      }
    }
    {
      std::lock_guard lock(repl_mu_);
      replicated_through_ = std::max(replicated_through_, target);
    }
    repl_done_cv_.notify_all();
  }
}

void Channel::replicate_to(const std::string& address, std::uint64_t target) {
  std::optional<std::uint64_t> acked;
  {
    std::lock_guard lock(repl_mu_);
    acked = peers_[address].acked;
  }
  auto record = [&](std::uint64_t h) {
    acked = h;
    std::lock_guard lock(repl_mu_);
    peers_[address].acked = h;
  };
  try {
    // An unknown peer is probed with the head block; a gap answer leads to a snapshot.
    if (!acked) record(push_blocks(address, target, target));
    while (*acked < target) {
      const auto from = *acked + 1;
      const auto reached = push_blocks(address, from, std::min(target, from + blocks_per_push - 1));
      if (reached < from) fail(ErrorKind::network, "peer made no progress");
      record(reached);
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::gap && e.kind() != ErrorKind::not_found) throw;
    log::info("replication", "peer needs a snapshot",
              {{"channel", id_}, {"peer", address}, {"reason", e.what()}});
    record(push_snapshot(address));
  }
}

std::uint64_t Channel::push_blocks(const std::string& address, std::uint64_t from, std::uint64_t to) {
  json blocks = json::array();
  read([&](const ledger::Ledger& l) {
    for (auto h = from; h <= to && h <= l.height(); ++h) blocks.push_back(l.blocks()[h]);
    return 0;
  });
  json body{{"op", "replicate"}, {"channel", id_}, {"blocks", std::move(blocks)}};
  return height_from(net::expect_ok(post_signed(*transport_, self_, address, "/internal/replicate", body)));
}

std::uint64_t Channel::push_snapshot(const std::string& address) {
  auto snapshot = read([](const ledger::Ledger& l) { return l.export_snapshot(); });
  json body{{"op", "snapshot"}, {"channel", id_}, {"snapshot", snapshot}};
  return height_from(net::expect_ok(post_signed(*transport_, self_, address, "/internal/snapshot", body)));
}

std::uint64_t Channel::accept_blocks(const std::vector<ledger::Block>& blocks, const Certificate& sender) {
  std::unique_lock lock(mu_);
  if (is_sequencer_) fail(ErrorKind::forbidden, "the sequencer does not accept pushed blocks");
  if (!contract::is_channel_node(ledger_->state(), sender))
    fail(ErrorKind::forbidden, "pushing node is not a channel node");
  for (const auto& block : blocks) {
    const bool fresh = block.height > ledger_->height();
    try {
      ledger_->accept_block(block);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::integrity)
        log::error("replication", "rejected invalid block",
                   {{"channel", id_}, {"height", block.height}, {"from", sender.node_address},
                    {"error", e.what()}});
      throw;
    }
    if (!fresh) continue;
    dir_.write_block(block);
    for (const auto& tx : block.transactions) {
      committed_nonces_.insert(nonce_key(tx.nonce));
      last_recorded_at_ = std::max(last_recorded_at_, tx.recorded_at);
    }
  }
  return ledger_->height();
}

std::uint64_t Channel::import(ledger::Ledger candidate, const Certificate& sender) {
  std::unique_lock lock(mu_);
  if (is_sequencer_) fail(ErrorKind::forbidden, "the sequencer does not import snapshots");
  const auto& local = ledger_->blocks();
  const auto& incoming = candidate.blocks();
  const auto common = std::min(local.size(), incoming.size());
  for (std::size_t i = 0; i < common; ++i)
    if (local[i].block_hash != incoming[i].block_hash) {
      log::error("replication", "snapshot diverges from local chain",
                 {{"channel", id_}, {"height", i}, {"from", sender.node_address}});
      fail(ErrorKind::integrity, "snapshot diverges from the local chain at height " + std::to_string(i));
    }
  if (incoming.size() > local.size()) {
    ledger_.emplace(std::move(candidate));
    dir_.write_all(ledger_->blocks());
    dir_.write_state(ledger_->state());
    index_nonces();
  }
  return ledger_->height();
}

ChannelStatus Channel::status() const {
  std::shared_lock lock(mu_);
  ChannelStatus s;
  s.channel_id = id_;
  s.channel_name = name_;
  s.sequencer_address = sequencer_;
  s.height = ledger_->height();
  s.head_hash = ledger_->head().block_hash;
  const auto& entries = ledger_->state().entries();
  for (auto it = entries.lower_bound("0"); it != entries.end() && it->first < ":"; ++it) ++s.message_count;
  return s;
}

void Channel::persist_state() const {
  std::shared_lock lock(mu_);
  dir_.write_state(ledger_->state());
}

}  // namespace quarks::node::detail
