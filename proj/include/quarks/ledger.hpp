#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "quarks/certificate.hpp"
#include "quarks/crypto.hpp"

namespace quarks::ledger {

/// A contract invocation as recorded on the ledger. The submitter signature covers
/// (nonce, args[0]), where args[0] is the exact request body the member signed.
struct Transaction {
  crypto::Digest tx_id;
  std::string function_name;
  std::vector<Bytes> args;
  Certificate submitter_certificate;
  Certificate submitter_node_certificate;
  crypto::Nonce nonce;
  std::int64_t recorded_at = 0;  // nanoseconds since the Unix epoch
  crypto::Signature submitter_signature;

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

/// Canonical encoding of every field except tx_id.
Bytes canonical_body(const Transaction& tx);
crypto::Digest compute_tx_id(const Transaction& tx);
/// Sets tx_id from the current field values.
void finalize(Transaction& tx);

struct Block {
  std::uint64_t height = 0;
  crypto::Digest prev_hash;
  std::vector<Transaction> transactions;
  crypto::Digest block_hash;

  friend bool operator==(const Block&, const Block&) = default;
};

crypto::Digest compute_block_hash(const Block& block);

struct StateEntry {
  std::string key;
  Bytes value;

  friend bool operator==(const StateEntry&, const StateEntry&) = default;
};

/// Message keys are 19-digit zero-padded nanosecond timestamps, optionally followed
/// by "-" and eight hex characters of the tx id when the timestamp collides.
bool is_message_key(std::string_view key);
std::string message_key(std::int64_t timestamp_ns);

/// Ordered key/value state. Message keys are write-once; every other key may be
/// overwritten. An optional undo journal lets the ledger roll back a rejected transaction.
class StateStore {
 public:
  const Bytes* find(const std::string& key) const;
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, Bytes>& entries() const { return entries_; }

  /// Throws ErrorKind::integrity on an attempt to overwrite a message key.
  void put(const std::string& key, Bytes value);

  /// Entries with from_key <= key < to_key in ascending key order.
  std::vector<StateEntry> range(const std::string& from_key, const std::string& to_key) const;

  void begin_journal();
  std::size_t journal_mark() const { return journal_.size(); }
  void rollback_to(std::size_t mark);
  void end_journal();

  friend bool operator==(const StateStore& a, const StateStore& b) { return a.entries_ == b.entries_; }

 private:
  std::map<std::string, Bytes> entries_;
  bool journaling_ = false;
  std::vector<std::pair<std::string, std::optional<Bytes>>> journal_;
};

inline void put_state(StateStore& state, const std::string& key, Bytes value) {
  state.put(key, std::move(value));
}
inline std::vector<StateEntry> get_state_by_range(const StateStore& state, const std::string& from_key,
                                                  const std::string& to_key) {
  return state.range(from_key, to_key);
}

/// Deterministic state transition: applies one transaction or throws without having
/// modified anything it could not roll back.
using Applier = std::function<void(StateStore&, const Transaction&)>;

struct LedgerSnapshot {
  std::string channel_id;
  std::vector<Block> blocks;
};

/// Append-only hash-chained ledger for one channel. Not thread-safe; the owning
/// channel serializes writers.
class Ledger {
 public:
  /// Builds the genesis block from `genesis`. Throws if any transaction is rejected.
  static Ledger create(std::string channel_id, std::vector<Transaction> genesis, Applier applier);

  /// Rebuilds a ledger from a block list, rejecting it with ErrorKind::integrity
  /// unless the chain verifies and replays cleanly.
  static Ledger from_blocks(std::string channel_id, std::vector<Block> blocks, Applier applier);

  const std::string& channel_id() const { return channel_id_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& head() const { return blocks_.back(); }
  std::uint64_t height() const { return head().height; }
  const StateStore& state() const { return state_; }

  /// Applies all transactions atomically and seals them into a new block.
  const Block& append_block(std::vector<Transaction> transactions);

  /// Applies one transaction to the working state without sealing it. On failure
  /// the state is unchanged and the error propagates.
  void stage(Transaction tx);
  std::size_t staged_count() const { return staged_.size(); }
  const Block& commit_staged();
  void discard_staged();

  /// Appends a block produced elsewhere; throws ErrorKind::gap if it does not
  /// extend the head and ErrorKind::integrity if it fails validation or replay.
  const Block& accept_block(const Block& block);

  /// Chain links, hashes, tx ids, and a full replay reproducing the state store.
  bool verify_chain() const;

  LedgerSnapshot export_snapshot() const { return {channel_id_, blocks_}; }

 private:
  Ledger(std::string channel_id, Applier applier);
  const Block& seal(std::vector<Transaction> txs);

  std::string channel_id_;
  Applier applier_;
  std::vector<Block> blocks_;
  StateStore state_;
  std::vector<Transaction> staged_;
};

inline bool verify_chain(const Ledger& ledger) { return ledger.verify_chain(); }

/// Chain verification over a bare block list. When `expected_state` is given the
/// replayed state must equal it.
bool verify_blocks(const std::vector<Block>& blocks, const Applier& applier,
                   const StateStore* expected_state = nullptr);
inline LedgerSnapshot export_snapshot(const Ledger& ledger) { return ledger.export_snapshot(); }
Ledger import_snapshot(LedgerSnapshot snapshot, Applier applier);

void to_json(nlohmann::json& j, const Transaction& tx);
void from_json(const nlohmann::json& j, Transaction& tx);
void to_json(nlohmann::json& j, const Block& block);
void from_json(const nlohmann::json& j, Block& block);
void to_json(nlohmann::json& j, const LedgerSnapshot& snapshot);
void from_json(const nlohmann::json& j, LedgerSnapshot& snapshot);

/// Canonical on-disk form of a block.
std::string encode_block(const Block& block);
/// Rejects with ErrorKind::integrity any text that is not exactly the canonical
/// encoding of the block it parses to.
Block decode_block(std::string_view text);

/// One directory per channel: blocks/<height>.json plus a state.json rebuilt by replay.
class LedgerDirectory {
 public:
  explicit LedgerDirectory(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path block_path(std::uint64_t height) const;

  void write_block(const Block& block) const;
  void write_state(const StateStore& state) const;
  /// Replaces every block file with `blocks`.
  void write_all(const std::vector<Block>& blocks) const;
  std::vector<Block> load_blocks() const;

 private:
  std::filesystem::path root_;
};

/// Loads and fully verifies a persisted ledger. Any unreadable, non-canonical,
/// or inconsistent byte yields false.
bool verify_persisted(const LedgerDirectory& dir, const std::string& channel_id,
                      const Applier& applier);

}  // namespace quarks::ledger
