#pragma once

#include <string>

#include "quarks/contract.hpp"
#include "quarks/crypto.hpp"
#include "quarks/envelope.hpp"
#include "quarks/error.hpp"
#include "quarks/ledger.hpp"

namespace quarks::testing {

template <typename Fn>
ErrorKind error_kind(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::internal;
}

struct TestNode {
  crypto::KeyPair ca = crypto::generate_keypair();
  Certificate cert;

  explicit TestNode(const std::string& address)
      : cert(issue_certificate(ca, address, address, ca.public_key, 1)) {}
};

struct TestUser {
  crypto::KeyPair keys = crypto::generate_keypair();
  Certificate cert;

  TestUser(const TestNode& home, const std::string& name)
      : cert(issue_certificate(home.ca, name, home.cert.node_address, keys.public_key, 2)) {}

  contract::SignedRequest request(const nlohmann::json& body) const {
    auto env = make_envelope(keys.private_key, cert, body);
    return contract::from_envelope(env);
  }
};

/// A channel created by `creator` on `node`, with a monotonically advancing
/// transaction clock standing in for the sequencer.
struct TestChannel {
  crypto::ChannelSecret secret = crypto::ChannelSecret::generate();
  std::string id;
  std::int64_t clock = 1'000'000'000;
  ledger::Ledger ledger;

  TestChannel(const TestNode& node, const TestUser& creator, const std::string& name = "general")
      : id(channel_id_for(creator.cert, name)),
        ledger(ledger::Ledger::create(
            id,
            contract::init(creator.request({{"op", op::create_channel},
                                            {"channel_name", name},
                                            {"sealed_key", to_base64(crypto::seal_to_public_key(
                                                               creator.cert.subject_public_key,
                                                               secret.view()))}}),
                           node.cert, clock),
            contract::applier())) {}

  ledger::Transaction tx(std::string_view fn, const contract::SignedRequest& req, const Certificate& node,
                         std::vector<Bytes> extra = {}) {
    auto t = contract::make_transaction(fn, req, node, std::move(extra));
    t.recorded_at = ++clock;
    ledger::finalize(t);
    return t;
  }

  ledger::Transaction send(const TestUser& from, const TestNode& via, std::string_view text) {
    const auto ct = crypto::encrypt_message(secret, to_bytes(text));
    return tx(contract::fn::send_msg,
              from.request({{"op", op::send_msg}, {"channel", id}, {"ciphertext", to_base64(ct)}}), via.cert);
  }

  ledger::Transaction add_node(const TestUser& by, const TestNode& via, const TestNode& added) {
    return tx(contract::fn::add_node,
              by.request({{"op", op::add_node}, {"channel", id}, {"node_address", added.cert.node_address}}),
              via.cert, {to_bytes(nlohmann::json(added.cert).dump())});
  }

  ledger::Transaction add_member(const TestUser& by, const TestNode& via, const TestUser& added) {
    const auto sealed = crypto::seal_to_public_key(added.cert.subject_public_key, secret.view());
    return tx(contract::fn::add_member,
              by.request({{"op", op::add_member},
                          {"channel", id},
                          {"member", digest(added.cert).hex()},
                          {"sealed_key", to_base64(sealed)}}),
              via.cert, {to_bytes(nlohmann::json(added.cert).dump())});
  }
};

}  // namespace quarks::testing
