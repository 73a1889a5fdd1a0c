#include "quarks/contract.hpp"

#include <algorithm>

#include "quarks/error.hpp"

namespace quarks::contract {

using nlohmann::json;
using ledger::StateStore;
using ledger::Transaction;

namespace {

constexpr std::string_view node_prefix = "acl:node:";
constexpr std::string_view user_prefix = "acl:user:";
constexpr const char* key_channel_id = "meta:channel_id";
constexpr const char* key_channel_name = "meta:channel_name";

bool contains_cert(const std::vector<Certificate>& set, const Certificate& cert) {
  const auto d = digest(cert);
  return std::any_of(set.begin(), set.end(), [&](const Certificate& c) { return digest(c) == d; });
}

std::string acl_key(std::string_view prefix, const Certificate& cert) {
  return std::string(prefix) + digest(cert).hex();
}

std::vector<Certificate> load_set(const StateStore& state, std::string_view prefix) {
  std::string end(prefix);
  end.back() = static_cast<char>(end.back() + 1);
  std::vector<Certificate> out;
  for (const auto& entry : state.range(std::string(prefix), end))
    out.push_back(json::parse(entry.value.begin(), entry.value.end()).get<Certificate>());
  return out;
}

/// Set union: the set is unchanged when `cert` is already present.
void insert_cert(StateStore& state, std::string_view prefix, const Certificate& cert) {
  const auto key = acl_key(prefix, cert);
  if (!state.contains(key)) state.put(key, to_bytes(json(cert).dump()));
}

void require_guard(const StateStore& state, const Certificate& node, const Certificate& member) {
  const bool node_ok = state.contains(acl_key(node_prefix, node));
  const bool user_ok = state.contains(acl_key(user_prefix, member));
  if (node_ok && user_ok) return;
  std::string why;
  if (!node_ok) why = "node " + node.node_address + " is not authorized for this channel";
  if (!user_ok) {
    if (!why.empty()) why += "; ";
    why += "user " + member.username + "@" + member.node_address + " is not a channel member";
  }
  fail(ErrorKind::forbidden, why);
}

json signed_body(const Transaction& tx, std::string_view expected_op) {
  if (tx.args.empty()) fail(ErrorKind::validation, "transaction carries no signed request");
  const auto& raw = tx.args.front();
  if (!crypto::verify(tx.submitter_certificate.subject_public_key,
                      envelope_signing_bytes(tx.nonce, to_string(raw)), tx.submitter_signature))
    fail(ErrorKind::auth, "submitter signature does not verify");
  json body = parse_body(to_string(raw));
  if (body.value("op", "") != expected_op)
    fail(ErrorKind::validation, "signed request is not a " + std::string(expected_op) + " request");
  return body;
}

Bytes b64_field(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string())
    fail(ErrorKind::validation, std::string("missing field ") + key);
  return from_base64(body[key].get<std::string>());
}

std::string string_field(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string())
    fail(ErrorKind::validation, std::string("missing field ") + key);
  return body[key].get<std::string>();
}

Certificate cert_arg(const Transaction& tx, std::size_t index) {
  if (tx.args.size() <= index) fail(ErrorKind::validation, "missing certificate argument");
  const auto& raw = tx.args[index];
  json j = json::parse(raw.begin(), raw.end(), nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::validation, "certificate argument is not JSON");
  return j.get<Certificate>();
}

void require_channel(const StateStore& state, const json& body) {
  const auto id = channel_id(state);
  if (!id) fail(ErrorKind::state, "channel is not initialized");
  if (string_field(body, "channel") != *id)
    fail(ErrorKind::validation, "signed request names a different channel");
}

void do_init(StateStore& state, const Transaction& tx) {
  const json body = signed_body(tx, op::create_channel);
  if (state.contains(key_channel_id)) fail(ErrorKind::conflict, "channel is already initialized");
  const auto& node = tx.submitter_node_certificate;
  const auto& creator = tx.submitter_certificate;
  if (!verify_self_issued(node)) fail(ErrorKind::auth, "node certificate is not validly self-issued");
  if (creator.node_address != node.node_address ||
      !verify_certificate(node.subject_public_key, creator))
    fail(ErrorKind::auth, "creator certificate was not issued by the creating node");
  const auto name = string_field(body, "channel_name");
  if (name.empty()) fail(ErrorKind::validation, "channel name must not be empty");
  auto sealed = b64_field(body, "sealed_key");
  if (sealed.empty()) fail(ErrorKind::validation, "sealed key must not be empty");

  state.put(key_channel_id, to_bytes(channel_id_for(creator, name)));
  state.put(key_channel_name, to_bytes(name));
  insert_cert(state, node_prefix, node);
  insert_cert(state, user_prefix, creator);
  state.put(vault_key(creator), std::move(sealed));
}

void do_add_node(StateStore& state, const Transaction& tx) {
  const json body = signed_body(tx, op::add_node);
  require_channel(state, body);
  require_guard(state, tx.submitter_node_certificate, tx.submitter_certificate);
  const auto new_node = cert_arg(tx, 1);
  if (!verify_self_issued(new_node)) fail(ErrorKind::auth, "new node certificate is not self-issued");
  if (string_field(body, "node_address") != new_node.node_address)
    fail(ErrorKind::validation, "new node certificate does not match the requested address");
  insert_cert(state, node_prefix, new_node);
}

void do_add_member(StateStore& state, const Transaction& tx) {
  const json body = signed_body(tx, op::add_member);
  require_channel(state, body);
  require_guard(state, tx.submitter_node_certificate, tx.submitter_certificate);
  const auto member = cert_arg(tx, 1);
  if (string_field(body, "member") != digest(member).hex())
    fail(ErrorKind::validation, "sealed key is bound to a different certificate");
  auto sealed = b64_field(body, "sealed_key");
  if (sealed.empty()) fail(ErrorKind::validation, "sealed key must not be empty");
  state.put(vault_key(member), std::move(sealed));
  insert_cert(state, user_prefix, member);
}

void do_send_msg(StateStore& state, const Transaction& tx) {
  const json body = signed_body(tx, op::send_msg);
  require_channel(state, body);
  require_guard(state, tx.submitter_node_certificate, tx.submitter_certificate);
  auto ciphertext = b64_field(body, "ciphertext");
  if (ciphertext.empty()) fail(ErrorKind::validation, "empty message");
  if (ciphertext.size() > max_encrypted_message)
    fail(ErrorKind::validation, "encrypted message exceeds 64 KiB");
  auto key = ledger::message_key(tx.recorded_at);
  if (state.contains(key)) key += "-" + tx.tx_id.hex().substr(0, 8);
  state.put(key, std::move(ciphertext));
}

}  // namespace

bool ChannelAcl::has_node(const Certificate& cert) const { return contains_cert(channel_nodes, cert); }
bool ChannelAcl::has_user(const Certificate& cert) const { return contains_cert(channel_users, cert); }

ChannelAcl load_acl(const StateStore& state) {
  return {load_set(state, node_prefix), load_set(state, user_prefix)};
}

bool is_channel_node(const StateStore& state, const Certificate& node) {
  return state.contains(acl_key(node_prefix, node));
}

bool is_channel_member(const StateStore& state, const Certificate& member) {
  return state.contains(acl_key(user_prefix, member));
}

std::optional<std::string> channel_id(const StateStore& state) {
  const Bytes* raw = state.find(key_channel_id);
  return raw ? std::optional<std::string>(to_string(*raw)) : std::nullopt;
}

std::optional<std::string> channel_name(const StateStore& state) {
  const Bytes* raw = state.find(key_channel_name);
  return raw ? std::optional<std::string>(to_string(*raw)) : std::nullopt;
}

std::string vault_key(const Certificate& member) { return "sk:" + digest(member).hex(); }

SignedRequest from_envelope(const Envelope& envelope) {
  if (!envelope.certificate) fail(ErrorKind::auth, "request carries no certificate");
  return {envelope.nonce, *envelope.certificate, envelope.body, envelope.signature};
}

Transaction make_transaction(std::string_view function, const SignedRequest& request,
                             const Certificate& node_certificate, std::vector<Bytes> extra_args) {
  Transaction tx;
  tx.function_name = std::string(function);
  tx.args.push_back(to_bytes(request.body));
  for (auto& a : extra_args) tx.args.push_back(std::move(a));
  tx.submitter_certificate = request.certificate;
  tx.submitter_node_certificate = node_certificate;
  tx.nonce = request.nonce;
  tx.submitter_signature = request.signature;
  return tx;
}

crypto::Nonce execute(StateStore& state, const Transaction& tx) {
  try {
    if (tx.function_name == fn::init)
      do_init(state, tx);
    else if (tx.function_name == fn::add_node)
      do_add_node(state, tx);
    else if (tx.function_name == fn::add_member)
      do_add_member(state, tx);
    else if (tx.function_name == fn::send_msg)
      do_send_msg(state, tx);
    else
      fail(ErrorKind::validation, "unknown contract function " + tx.function_name);
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed contract input: ") + e.what());
  }
  return tx.nonce;
}

ledger::Applier applier() {
  return [](StateStore& state, const Transaction& tx) { execute(state, tx); };
}

std::vector<Transaction> init(const SignedRequest& creator_request,
                              const Certificate& creator_node_certificate,
                              std::int64_t recorded_at) {
  auto tx = make_transaction(fn::init, creator_request, creator_node_certificate);
  tx.recorded_at = recorded_at;
  ledger::finalize(tx);
  return {std::move(tx)};
}

Bytes get_channel_sk(const StateStore& state, const Certificate& node, const Certificate& member) {
  require_guard(state, node, member);
  const Bytes* sealed = state.find(vault_key(member));
  if (sealed == nullptr) fail(ErrorKind::not_found, "no sealed key stored for " + member.username);
  return *sealed;
}

std::vector<ledger::StateEntry> read_msg(const StateStore& state, const Certificate& node,
                                         const Certificate& member, std::int64_t ts,
                                         std::int64_t now_ns) {
  require_guard(state, node, member);
  if (ts < 0) fail(ErrorKind::validation, "timestamp must be non-negative");
  return state.range(ledger::message_key(ts), ledger::message_key(now_ns));
}

}  // namespace quarks::contract
