#include <doctest.h>

#include "fixtures.hpp"

using namespace quarks;
using namespace quarks::contract;
using quarks::testing::error_kind;
using quarks::testing::TestChannel;
using quarks::testing::TestNode;
using quarks::testing::TestUser;

namespace {

constexpr std::int64_t far_future = 4'000'000'000'000'000'000;

struct World {
  TestNode node1{"node1:1"};
  TestNode node2{"node2:2"};
  TestNode node3{"node3:3"};
  TestUser alice{node1, "alice"};
  TestUser bob{node2, "bob"};
  TestUser carol{node1, "carol"};
  TestChannel ch{node1, alice};

  void commit(ledger::Transaction tx) { ch.ledger.append_block({std::move(tx)}); }
};

}  // namespace

TEST_CASE("init") {
  World w;
  const auto acl = load_acl(w.ch.ledger.state());
  CHECK(acl.channel_nodes.size() == 1);
  CHECK(acl.has_node(w.node1.cert));
  CHECK(acl.has_user(w.alice.cert));
  CHECK(channel_id(w.ch.ledger.state()) == w.ch.id);
  CHECK(channel_name(w.ch.ledger.state()) == "general");

  const auto sealed = get_channel_sk(w.ch.ledger.state(), w.node1.cert, w.alice.cert);
  CHECK(crypto::ChannelSecret(crypto::open_with_private_key(w.alice.keys.private_key, sealed)) ==
        w.ch.secret);

  SUBCASE("a second init is rejected") {
    auto again = init(w.alice.request({{"op", op::create_channel},
                                       {"channel_name", "general"},
                                       {"sealed_key", to_base64(Bytes(80, 1))}}),
                      w.node1.cert, 5);
    CHECK(error_kind([&] { w.ch.ledger.append_block(again); }) == ErrorKind::conflict);
  }

  SUBCASE("creator certificate must come from the creating node") {
    auto genesis = init(w.bob.request({{"op", op::create_channel},
                                       {"channel_name", "x"},
                                       {"sealed_key", to_base64(Bytes(80, 1))}}),
                        w.node1.cert, 5);
    CHECK(error_kind([&] { ledger::Ledger::create("x", genesis, applier()); }) == ErrorKind::auth);
  }
}

TEST_CASE("addNode") {
  World w;
  w.commit(w.ch.add_node(w.alice, w.node1, w.node2));
  auto acl = load_acl(w.ch.ledger.state());
  CHECK(acl.channel_nodes.size() == 2);
  CHECK(acl.has_node(w.node2.cert));

  SUBCASE("re-adding is a set union") {
    const auto before = w.ch.ledger.state();
    w.commit(w.ch.add_node(w.alice, w.node1, w.node2));
    CHECK(w.ch.ledger.state() == before);
  }

  SUBCASE("unauthorized node") {
    const auto head = w.ch.ledger.head().block_hash;
    CHECK(error_kind([&] { w.commit(w.ch.add_node(w.alice, w.node3, w.node3)); }) == ErrorKind::forbidden);
    CHECK(w.ch.ledger.head().block_hash == head);
    CHECK_FALSE(load_acl(w.ch.ledger.state()).has_node(w.node3.cert));
  }

  SUBCASE("address must match the new certificate") {
    auto tx = w.ch.tx(fn::add_node,
                      w.alice.request({{"op", op::add_node}, {"channel", w.ch.id}, {"node_address", "elsewhere"}}),
                      w.node1.cert, {to_bytes(nlohmann::json(w.node3.cert).dump())});
    CHECK(error_kind([&] { w.commit(tx); }) == ErrorKind::validation);
  }
}

TEST_CASE("addMember and getChannelSK") {
  World w;
  w.commit(w.ch.add_node(w.alice, w.node1, w.node2));
  w.commit(w.ch.add_member(w.alice, w.node1, w.bob));

  const auto sealed = get_channel_sk(w.ch.ledger.state(), w.node2.cert, w.bob.cert);
  CHECK(crypto::ChannelSecret(crypto::open_with_private_key(w.bob.keys.private_key, sealed)) ==
        w.ch.secret);
  CHECK(error_kind([&] { crypto::open_with_private_key(w.alice.keys.private_key, sealed); }) ==
        ErrorKind::crypto);

  CHECK(error_kind([&] { get_channel_sk(w.ch.ledger.state(), w.node1.cert, w.carol.cert); }) ==
        ErrorKind::forbidden);

  SUBCASE("non-member cannot add") {
    CHECK(error_kind([&] { w.commit(w.ch.add_member(w.carol, w.node1, w.carol)); }) ==
          ErrorKind::forbidden);
  }

  SUBCASE("valid member through an unauthorized node") {
    CHECK(error_kind([&] { w.commit(w.ch.add_member(w.alice, w.node3, w.carol)); }) ==
          ErrorKind::forbidden);
  }

  SUBCASE("sealed key bound to a different certificate") {
    const auto s = crypto::seal_to_public_key(w.carol.cert.subject_public_key, w.ch.secret.view());
    auto tx = w.ch.tx(fn::add_member,
                      w.alice.request({{"op", op::add_member},
                                       {"channel", w.ch.id},
                                       {"member", digest(w.bob.cert).hex()},
                                       {"sealed_key", to_base64(s)}}),
                      w.node1.cert, {to_bytes(nlohmann::json(w.carol.cert).dump())});
    CHECK(error_kind([&] { w.commit(tx); }) == ErrorKind::validation);
  }
}

TEST_CASE("sendMsg and readMsg") {
  World w;
  const auto& state = w.ch.ledger.state();
  CHECK(read_msg(state, w.node1.cert, w.alice.cert, 0, far_future).empty());

  auto t1 = w.ch.send(w.alice, w.node1, "one");
  auto t2 = w.ch.send(w.alice, w.node1, "two");
  auto t3 = w.ch.send(w.alice, w.node1, "three");
  w.ch.ledger.append_block({t1, t2});
  w.commit(t3);

  const auto all = read_msg(state, w.node1.cert, w.alice.cert, 0, far_future);
  REQUIRE(all.size() == 3);
  const char* expected[] = {"one", "two", "three"};
  for (int i = 0; i < 3; ++i)
    CHECK(to_string(crypto::decrypt_message(w.ch.secret, all[i].value)) == expected[i]);

  CHECK(all[0].key == ledger::message_key(t1.recorded_at));
  CHECK(read_msg(state, w.node1.cert, w.alice.cert, t3.recorded_at + 1, far_future).empty());
  CHECK(read_msg(state, w.node1.cert, w.alice.cert, t2.recorded_at, far_future).size() == 2);
  // Half-open upper bound.
  CHECK(read_msg(state, w.node1.cert, w.alice.cert, 0, t3.recorded_at).size() == 2);

  SUBCASE("non-member send is rejected and absent") {
    CHECK(error_kind([&] { w.commit(w.ch.send(w.carol, w.node1, "x")); }) == ErrorKind::forbidden);
    CHECK(read_msg(state, w.node1.cert, w.alice.cert, 0, far_future).size() == 3);
  }

  SUBCASE("colliding timestamps get distinct keys in commit order") {
    auto a = w.ch.send(w.alice, w.node1, "a");
    auto b = w.ch.send(w.alice, w.node1, "b");
    b.recorded_at = a.recorded_at;
    ledger::finalize(b);
    w.ch.ledger.append_block({a, b});
    const auto msgs = read_msg(state, w.node1.cert, w.alice.cert, a.recorded_at, far_future);
    REQUIRE(msgs.size() == 2);
    CHECK(msgs[0].key == ledger::message_key(a.recorded_at));
    CHECK(msgs[1].key == ledger::message_key(a.recorded_at) + "-" + b.tx_id.hex().substr(0, 8));
    CHECK(to_string(crypto::decrypt_message(w.ch.secret, msgs[1].value)) == "b");
  }

  SUBCASE("oversize ciphertext") {
    auto tx = w.ch.tx(fn::send_msg,
                      w.alice.request({{"op", op::send_msg},
                                       {"channel", w.ch.id},
                                       {"ciphertext", to_base64(Bytes(64 * 1024 + 1, 7))}}),
                      w.node1.cert);
    CHECK(error_kind([&] { w.commit(tx); }) == ErrorKind::validation);
  }

  SUBCASE("forged signature") {
    auto tx = w.ch.send(w.alice, w.node1, "forged");
    tx.submitter_signature.value[0] ^= 1;
    ledger::finalize(tx);
    CHECK(error_kind([&] { w.commit(tx); }) == ErrorKind::auth);
  }

  SUBCASE("signed request for another channel") {
    TestChannel other(w.node1, w.alice, "other");
    auto tx = other.send(w.alice, w.node1, "misrouted");
    tx.recorded_at = ++w.ch.clock;
    ledger::finalize(tx);
    CHECK(error_kind([&] { w.commit(tx); }) == ErrorKind::validation);
  }

  SUBCASE("queries do not touch the chain") {
    const auto head = w.ch.ledger.head().block_hash;
    read_msg(state, w.node1.cert, w.alice.cert, 0, far_future);
    get_channel_sk(state, w.node1.cert, w.alice.cert);
    CHECK(w.ch.ledger.head().block_hash == head);
  }
}

TEST_CASE("guard soundness over every negative combination") {
  World w;
  // node3 is not a channel node; carol is not a member.
  struct Combo {
    const char* name;
    const TestNode* node;
    const TestUser* user;
  };
  const Combo combos[] = {{"node bad", &w.node3, &w.alice},
                          {"user bad", &w.node1, &w.carol},
                          {"both bad", &w.node3, &w.carol}};
  for (const auto& c : combos) {
    CAPTURE(c.name);
    const auto head = w.ch.ledger.head().block_hash;
    const auto state = w.ch.ledger.state();
    CHECK(error_kind([&] { w.commit(w.ch.add_node(*c.user, *c.node, w.node2)); }) == ErrorKind::forbidden);
    CHECK(error_kind([&] { w.commit(w.ch.add_member(*c.user, *c.node, w.bob)); }) == ErrorKind::forbidden);
    CHECK(error_kind([&] { w.commit(w.ch.send(*c.user, *c.node, "x")); }) == ErrorKind::forbidden);
    CHECK(error_kind([&] { get_channel_sk(w.ch.ledger.state(), c.node->cert, c.user->cert); }) ==
          ErrorKind::forbidden);
    CHECK(error_kind([&] { read_msg(w.ch.ledger.state(), c.node->cert, c.user->cert, 0, far_future); }) ==
          ErrorKind::forbidden);
    CHECK(w.ch.ledger.head().block_hash == head);
    CHECK(w.ch.ledger.state() == state);
  }
}

TEST_CASE("unknown function names are rejected") {
  World w;
  auto tx = w.ch.send(w.alice, w.node1, "x");
  tx.function_name = "deleteMsg";
  ledger::finalize(tx);
  CHECK(error_kind([&] { w.commit(tx); }) == ErrorKind::validation);
}
