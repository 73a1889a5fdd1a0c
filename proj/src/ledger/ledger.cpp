#include "quarks/ledger.hpp"

#include <cctype>
#include <cstdio>

#include "quarks/error.hpp"

namespace quarks::ledger {

namespace {

constexpr std::string_view tx_domain = "quarks/tx/v1";
constexpr std::string_view block_domain = "quarks/block/v1";
constexpr std::size_t timestamp_digits = 19;

}  // namespace

Bytes canonical_body(const Transaction& tx) {
  CanonicalWriter w;
  w.field(tx_domain).field(tx.function_name).u64(tx.args.size());
  for (const auto& arg : tx.args) w.field(arg);
  w.field(canonical_bytes(tx.submitter_certificate))
      .field(canonical_bytes(tx.submitter_node_certificate))
      .field(tx.nonce.view())
      .u64(static_cast<std::uint64_t>(tx.recorded_at))
      .field(tx.submitter_signature.view());
  return std::move(w).bytes();
}

crypto::Digest compute_tx_id(const Transaction& tx) { return crypto::hash(canonical_body(tx)); }

void finalize(Transaction& tx) { tx.tx_id = compute_tx_id(tx); }

crypto::Digest compute_block_hash(const Block& block) {
  CanonicalWriter w;
  w.field(block_domain).u64(block.height).field(block.prev_hash.view()).u64(block.transactions.size());
  for (const auto& tx : block.transactions) w.field(tx.tx_id.view());
  return crypto::hash(w.bytes());
}

bool is_message_key(std::string_view key) {
  return !key.empty() && std::isdigit(static_cast<unsigned char>(key.front()));
}

std::string message_key(std::int64_t timestamp_ns) {
  if (timestamp_ns < 0) fail(ErrorKind::validation, "timestamp must be non-negative");
  char buf[timestamp_digits + 1];
  std::snprintf(buf, sizeof buf, "%019lld", static_cast<long long>(timestamp_ns));
  return buf;
}

// ---- StateStore -----------------------------------------------------------

const Bytes* StateStore::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void StateStore::put(const std::string& key, Bytes value) {
  auto it = entries_.find(key);
  if (it != entries_.end() && is_message_key(key))
    fail(ErrorKind::integrity, "message key " + key + " is write-once");
  if (journaling_)
    journal_.emplace_back(key, it == entries_.end() ? std::nullopt : std::optional<Bytes>(it->second));
  if (it == entries_.end())
    entries_.emplace(key, std::move(value));
  else
    it->second = std::move(value);
}

std::vector<StateEntry> StateStore::range(const std::string& from_key, const std::string& to_key) const {
  std::vector<StateEntry> out;
  if (to_key <= from_key) return out;
  const auto end = entries_.lower_bound(to_key);
  for (auto it = entries_.lower_bound(from_key); it != end; ++it) out.push_back({it->first, it->second});
  return out;
}

void StateStore::begin_journal() {
  journaling_ = true;
  journal_.clear();
}

void StateStore::rollback_to(std::size_t mark) {
  while (journal_.size() > mark) {
    auto& [key, prior] = journal_.back();
    if (prior)
      entries_[key] = std::move(*prior);
    else
      entries_.erase(key);
    journal_.pop_back();
  }
}

void StateStore::end_journal() {
  journaling_ = false;
  journal_.clear();
}

// ---- Ledger ---------------------------------------------------------------

Ledger::Ledger(std::string channel_id, Applier applier)
    : channel_id_(std::move(channel_id)), applier_(std::move(applier)) {
  if (channel_id_.empty()) fail(ErrorKind::validation, "channel id must not be empty");
}

Ledger Ledger::create(std::string channel_id, std::vector<Transaction> genesis, Applier applier) {
  Ledger ledger(std::move(channel_id), std::move(applier));
  if (genesis.empty()) fail(ErrorKind::validation, "genesis block needs at least one transaction");
  ledger.append_block(std::move(genesis));
  return ledger;
}

Ledger Ledger::from_blocks(std::string channel_id, std::vector<Block> blocks, Applier applier) {
  Ledger ledger(std::move(channel_id), std::move(applier));
  if (blocks.empty()) fail(ErrorKind::integrity, "snapshot has no genesis block");
  for (const auto& block : blocks) {
    try {
      ledger.accept_block(block);
    } catch (const std::exception& e) {
      fail(ErrorKind::integrity, "snapshot rejected at height " + std::to_string(block.height) + ": " +
                                     e.what());
    }
  }
  return ledger;
}

const Block& Ledger::append_block(std::vector<Transaction> transactions) {
  if (transactions.empty()) fail(ErrorKind::validation, "block must contain at least one transaction");
  if (!staged_.empty()) fail(ErrorKind::state, "cannot append while transactions are staged");
  for (auto& tx : transactions) {
    try {
      stage(std::move(tx));
    } catch (...) {
      discard_staged();
      throw;
    }
  }
  return commit_staged();
}

void Ledger::stage(Transaction tx) {
  if (staged_.empty()) state_.begin_journal();
  const auto mark = state_.journal_mark();
  try {
    applier_(state_, tx);
  } catch (...) {
    state_.rollback_to(mark);
    if (staged_.empty()) state_.end_journal();
    throw;
  }
  staged_.push_back(std::move(tx));
}

const Block& Ledger::commit_staged() {
  if (staged_.empty()) fail(ErrorKind::validation, "block must contain at least one transaction");
  state_.end_journal();
  return seal(std::exchange(staged_, {}));
}

void Ledger::discard_staged() {
  if (staged_.empty()) return;
  state_.rollback_to(0);
  state_.end_journal();
  staged_.clear();
}

const Block& Ledger::seal(std::vector<Transaction> txs) {
  Block block;
  block.height = blocks_.empty() ? 0 : head().height + 1;
  if (!blocks_.empty()) block.prev_hash = head().block_hash;
  block.transactions = std::move(txs);
  block.block_hash = compute_block_hash(block);
  blocks_.push_back(std::move(block));
  return blocks_.back();
}

const Block& Ledger::accept_block(const Block& block) {
  const std::uint64_t expected = blocks_.empty() ? 0 : head().height + 1;
  if (block.height < expected) {
    if (blocks_[block.height] == block) return blocks_[block.height];
    fail(ErrorKind::integrity, "block at height " + std::to_string(block.height) +
                                   " conflicts with the local chain");
  }
  if (block.height > expected)
    fail(ErrorKind::gap, "block height " + std::to_string(block.height) + " does not extend head " +
                             std::to_string(expected - 1));
  const crypto::Digest expected_prev = blocks_.empty() ? crypto::Digest{} : head().block_hash;
  if (block.prev_hash != expected_prev) fail(ErrorKind::integrity, "block does not link to head");
  if (block.transactions.empty()) fail(ErrorKind::integrity, "empty block");
  for (const auto& tx : block.transactions)
    if (tx.tx_id != compute_tx_id(tx)) fail(ErrorKind::integrity, "transaction id mismatch");
  if (block.block_hash != compute_block_hash(block)) fail(ErrorKind::integrity, "block hash mismatch");
  if (!staged_.empty()) fail(ErrorKind::state, "cannot accept a block while transactions are staged");

  for (const auto& tx : block.transactions) {
    try {
      stage(tx);
    } catch (const std::exception& e) {
      discard_staged();
      fail(ErrorKind::integrity, std::string("replay rejected transaction: ") + e.what());
    }
  }
  state_.end_journal();
  staged_.clear();
  blocks_.push_back(block);
  return blocks_.back();
}

bool verify_blocks(const std::vector<Block>& blocks, const Applier& applier,
                   const StateStore* expected_state) {
  if (blocks.empty()) return false;
  StateStore replay;
  crypto::Digest prev{};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& block = blocks[i];
    if (block.height != i || block.prev_hash != prev || block.transactions.empty()) return false;
    for (const auto& tx : block.transactions) {
      if (tx.tx_id != compute_tx_id(tx)) return false;
      try {
        applier(replay, tx);
      } catch (const std::exception&) {
        return false;
      }
    }
    if (block.block_hash != compute_block_hash(block)) return false;
    prev = block.block_hash;
  }
  return expected_state == nullptr || replay == *expected_state;
}

bool Ledger::verify_chain() const {
  return staged_.empty() && verify_blocks(blocks_, applier_, &state_);
}

Ledger import_snapshot(LedgerSnapshot snapshot, Applier applier) {
  return Ledger::from_blocks(std::move(snapshot.channel_id), std::move(snapshot.blocks),
                             std::move(applier));
}

}  // namespace quarks::ledger
