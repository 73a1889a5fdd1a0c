#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quarks/certificate.hpp"
#include "quarks/envelope.hpp"
#include "quarks/ledger.hpp"

/// Channel smart contract: certificate-list ACLs, the sealed channel-key vault and
/// message storage. Write functions run as ledger transactions; getChannelSK and
/// readMsg are queries against committed state and never produce transactions.
namespace quarks::contract {

namespace fn {
inline constexpr std::string_view init = "init";
inline constexpr std::string_view add_node = "addNode";
inline constexpr std::string_view add_member = "addMember";
inline constexpr std::string_view send_msg = "sendMsg";
inline constexpr std::string_view get_channel_sk = "getChannelSK";
inline constexpr std::string_view read_msg = "readMsg";
}  // namespace fn

inline constexpr std::size_t max_encrypted_message = 64 * 1024;

/// ChNodes / ChUsers. Membership is by certificate digest.
struct ChannelAcl {
  std::vector<Certificate> channel_nodes;
  std::vector<Certificate> channel_users;

  bool has_node(const Certificate& cert) const;
  bool has_user(const Certificate& cert) const;
};

ChannelAcl load_acl(const ledger::StateStore& state);
bool is_channel_node(const ledger::StateStore& state, const Certificate& node);
bool is_channel_member(const ledger::StateStore& state, const Certificate& member);
std::optional<std::string> channel_id(const ledger::StateStore& state);
std::optional<std::string> channel_name(const ledger::StateStore& state);

/// A member-signed request as received by a node.
struct SignedRequest {
  crypto::Nonce nonce;
  Certificate certificate;
  std::string body;
  crypto::Signature signature;
};

SignedRequest from_envelope(const Envelope& envelope);

/// Builds an unsequenced transaction (recorded_at and tx_id are set by the sequencer).
/// `extra_args` follow the signed body: the new node certificate for addNode and the
/// new member certificate for addMember, each as canonical JSON text.
ledger::Transaction make_transaction(std::string_view function, const SignedRequest& request,
                                     const Certificate& node_certificate,
                                     std::vector<Bytes> extra_args = {});

/// Deterministic state transition for one transaction. Throws ErrorKind::forbidden
/// when a guard fails, ErrorKind::auth on a bad signature, and validation/conflict
/// errors otherwise. Rejected transactions leave the state untouched.
/// Returns the acknowledging nonce.
crypto::Nonce execute(ledger::StateStore& state, const ledger::Transaction& tx);

/// The applier handed to every channel ledger.
ledger::Applier applier();

/// Genesis transactions for a new channel (the init call).
std::vector<ledger::Transaction> init(const SignedRequest& creator_request,
                                      const Certificate& creator_node_certificate,
                                      std::int64_t recorded_at);

/// Sealed channel secret stored for exactly `member`.
Bytes get_channel_sk(const ledger::StateStore& state, const Certificate& node,
                     const Certificate& member);

/// Encrypted messages with keys in [message_key(ts), message_key(now_ns)).
std::vector<ledger::StateEntry> read_msg(const ledger::StateStore& state, const Certificate& node,
                                         const Certificate& member, std::int64_t ts,
                                         std::int64_t now_ns);

/// State key under which a member's sealed secret is stored.
std::string vault_key(const Certificate& member);

}  // namespace quarks::contract
