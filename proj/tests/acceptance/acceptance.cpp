// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Optional arguments restrict the run to the named criteria.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "../unit/fixtures.hpp"
#include "../unit/net_fixtures.hpp"

using namespace quarks;
using nlohmann::json;
using quarks::testing::error_kind;
using quarks::testing::node_message;
using quarks::testing::response_kind;
using quarks::testing::TempDir;
using quarks::testing::user_request;
using quarks::testing::wait_until;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::uint64_t seed = std::random_device{}();

/// Collects failed expectations; the first few end up in the detail text.
struct Outcome {
  std::vector<std::string> failures;
  std::string summary;

  bool expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
    return ok;
  }
  bool pass() const { return failures.empty(); }
  std::string detail() const {
    if (pass()) return summary;
    std::string out;
    for (std::size_t i = 0; i < failures.size() && i < 3; ++i) out += (i ? "; " : "") + failures[i];
    if (failures.size() > 3) out += "; +" + std::to_string(failures.size() - 3) + " more";
    return out;
  }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unique_ptr<client::Client> user(const std::string& address, const std::string& name,
                                     std::shared_ptr<net::Transport> transport = net::make_http_transport()) {
  return std::make_unique<client::Client>(client::keygen_and_register(address, name, transport), transport);
}

std::string head_of(node::Node& n, const std::string& id) {
  auto s = n.channel_status(id);
  return s ? std::to_string(s->height) + ":" + s->head_hash.hex() : "absent";
}

// ---- two-node federation scenario ------------------------------------------

struct Scenario {
  std::shared_ptr<net::CapturingTransport> node_traffic =
      std::make_shared<net::CapturingTransport>(net::make_http_transport());
  std::shared_ptr<net::CapturingTransport> client_traffic =
      std::make_shared<net::CapturingTransport>(net::make_http_transport());
  std::unique_ptr<harness::Network> net;
  std::unique_ptr<client::Client> alice, bob;
  std::string id;
  client::ReadResult bob_read;
  double seconds = 0;

  Scenario() {
    const auto start = Clock::now();
    harness::NetworkOptions options;
    options.node_transport = node_traffic;
    net = std::make_unique<harness::Network>(2, options);
    alice = user(net->address(0), "alice", client_traffic);
    id = alice->create_channel("lobby");
    alice->add_node(id, net->address(1));
    bob = user(net->address(1), "bob", client_traffic);
    alice->add_member(id, "bob", net->address(1));
    bob->get_channel_key(id);
    alice->send(id, "hello");
    bob_read = bob->read(id, 0);
    seconds = seconds_since(start);
  }

  Bytes secret() const {
    const auto sk = alice->keystore().channel_keys.at(id);
    return Bytes(sk.view().begin(), sk.view().end());
  }
};

std::unique_ptr<Scenario> scenario_;
Scenario& scenario() {
  if (!scenario_) scenario_ = std::make_unique<Scenario>();
  return *scenario_;
}

Outcome e2e_federation() {
  Outcome o;
  auto& s = scenario();
  const auto& read = s.bob_read;
  if (o.expect(read.messages.size() == 1, "bob read " + std::to_string(read.messages.size()) + " messages")) {
    const auto& m = read.messages[0];
    o.expect(m.plaintext == std::string("hello"), "plaintext differs");
    o.expect(m.plaintext.size() == 5, "plaintext length differs");
    o.expect(m.sender_username == "alice", "sender is " + m.sender_username);
    o.expect(m.channel_id == s.id, "wrong channel id");
  }
  o.expect(read.failures.empty(), "undecryptable entries present");
  o.expect(s.bob->node() == s.net->address(1), "bob did not read through the second node");
  o.expect(s.bob->keystore().channel_keys.at(s.id) == s.alice->keystore().channel_keys.at(s.id),
           "bob opened a different channel key");
  o.expect(s.seconds < 10.0, "took " + std::to_string(s.seconds) + " s");
  o.summary = "\"hello\" read byte-exactly through node 2 in " + std::to_string(s.seconds) + " s";
  return o;
}

Outcome confidentiality() {
  Outcome o;
  auto& s = scenario();
  const auto sk = s.secret();
  const std::vector<std::pair<std::string, std::string>> needles{
      {"plaintext", "hello"},
      {"raw key", to_string(sk)},
      {"base64 key", to_base64(sk)},
      {"hex key", to_hex(sk)}};

  std::size_t files = 0, bytes = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(s.net->root())) {
    if (!e.is_regular_file()) continue;
    const auto content = slurp(e.path());
    ++files;
    bytes += content.size();
    for (const auto& [name, n] : needles)
      o.expect(content.find(n) == std::string::npos, name + " found in " + e.path().string());
  }
  o.expect(files > 0, "no data files found");

  auto scan = [&](const net::CapturingTransport& cap, const std::string& label) {
    const auto exchanges = cap.exchanges();
    for (const auto& x : exchanges) {
      std::string all = x.path + x.request_body + x.response_body;
      for (const auto& [k, v] : x.request_headers) all += k + v;
      for (const auto& [name, n] : needles)
        o.expect(all.find(n) == std::string::npos, name + " found in " + label + " " + x.method + " " + x.path);
    }
    return exchanges.size();
  };
  const auto inter = scan(*s.node_traffic, "inter-node");
  const auto client = scan(*s.client_traffic, "client");
  o.expect(inter > 0, "no inter-node traffic captured");
  o.summary = std::to_string(files) + " files (" + std::to_string(bytes) + " bytes), " + std::to_string(inter) +
              " inter-node and " + std::to_string(client) + " client exchanges clean";
  return o;
}

Outcome integrity() {
  Outcome o;
  auto& s = scenario();
  TempDir tmp;
  const auto live = s.net->node(0).channel_directory(s.id).root();
  std::filesystem::copy(live, tmp.path / "copy", std::filesystem::copy_options::recursive);
  const ledger::LedgerDirectory dir(tmp.path / "copy");
  const auto height = s.net->node(0).channel_status(s.id)->height;

  std::vector<std::filesystem::path> blocks;
  for (std::uint64_t h = 0; h <= height; ++h)
    if (std::filesystem::exists(dir.block_path(h))) blocks.push_back(dir.block_path(h));
  o.expect(blocks.size() == height + 1, "expected " + std::to_string(height + 1) + " block files");
  o.expect(ledger::verify_persisted(dir, s.id, contract::applier()), "untouched copy does not verify");
  if (!o.pass()) return o;

  std::mt19937_64 rng(seed);
  std::set<std::pair<std::size_t, std::size_t>> positions;
  const std::size_t trials = 200;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto f = std::uniform_int_distribution<std::size_t>(0, blocks.size() - 1)(rng);
    const auto original = slurp(blocks[f]);
    const auto pos = std::uniform_int_distribution<std::size_t>(0, original.size() - 1)(rng);
    const auto flip = static_cast<char>(std::uniform_int_distribution<int>(1, 255)(rng));
    positions.insert({f, pos});
    auto mutated = original;
    mutated[pos] = static_cast<char>(mutated[pos] ^ flip);
    std::ofstream(blocks[f], std::ios::binary | std::ios::trunc) << mutated;
    o.expect(!ledger::verify_persisted(dir, s.id, contract::applier()),
             blocks[f].filename().string() + " byte " + std::to_string(pos) + " flip went unnoticed");
    std::ofstream(blocks[f], std::ios::binary | std::ios::trunc) << original;
  }
  o.expect(positions.size() >= 100, "only " + std::to_string(positions.size()) + " distinct positions");
  o.expect(ledger::verify_persisted(dir, s.id, contract::applier()), "restored copy does not verify");
  o.summary = std::to_string(trials) + " single-byte flips at " + std::to_string(positions.size()) +
              " distinct positions over " + std::to_string(blocks.size()) + " block files all detected";
  return o;
}

Outcome replay() {
  Outcome o;
  auto& s = scenario();
  auto heads = [&] { return head_of(s.net->node(0), s.id) + " " + head_of(s.net->node(1), s.id); };
  auto users = [&] {
    return std::to_string(s.net->node(0).find_user("alice").has_value()) +
           std::to_string(s.net->node(1).find_user("bob").has_value());
  };
  const auto before = heads();
  const auto users_before = users();
  const auto messages_before = s.net->node(0).channel_messages(s.id);

  auto resend = net::make_http_transport();
  std::size_t client_count = 0, node_count = 0;
  auto replay_all = [&](const net::CapturingTransport& cap, std::size_t& count) {
    for (const auto& x : cap.exchanges()) {
      if (x.method != "POST") continue;
      ++count;
      const auto r = resend->post(x.address, x.path, x.request_body, x.request_headers);
      const auto kind = response_kind(r);
      o.expect(kind == "replay", x.path + " resend answered " + kind);
    }
  };
  replay_all(*s.client_traffic, client_count);
  replay_all(*s.node_traffic, node_count);

  o.expect(heads() == before, "ledger head moved");
  o.expect(users() == users_before, "user registry changed");
  o.expect(s.net->node(0).channel_messages(s.id) == messages_before, "message state changed");
  o.expect(client_count >= 7, "only " + std::to_string(client_count) + " client writes captured");
  o.expect(node_count > 0, "no inter-node writes captured");
  o.summary = std::to_string(client_count) + " client and " + std::to_string(node_count) +
              " inter-node requests replayed, all rejected as replays, heads unchanged";
  return o;
}

// ---- authorization guards --------------------------------------------------

Outcome guards() {
  Outcome o;
  harness::Network net(3);  // node 2 never joins the channel
  auto alice = user(net.address(0), "alice");
  const auto id = alice->create_channel("guarded");
  alice->add_node(id, net.address(1));
  auto bob = user(net.address(1), "bob");
  auto carol = user(net.address(2), "carol");
  auto eve = user(net.address(1), "eve");
  auto mallory = user(net.address(2), "mallory");
  alice->add_member(id, "bob", net.address(1));
  alice->add_member(id, "carol", net.address(2));
  bob->get_channel_key(id);
  alice->send(id, "before the attempts");

  auto heads = [&] {
    return head_of(net.node(0), id) + " " + head_of(net.node(1), id) + " " + head_of(net.node(2), id) + " " +
           std::to_string(net.node(0).channel_messages(id).size());
  };
  const auto start_heads = heads();
  const auto mallory_ks = mallory->keystore();
  const auto target = *mallory_ks.certificate;

  struct Case {
    std::string label;
    std::size_t node;
    client::ClientKeystore ks;
  };
  const std::vector<Case> cases{{"node out, user in", 2, carol->keystore()},
                                {"node in, user out", 1, eve->keystore()},
                                {"node out, user out", 2, mallory_ks}};

  auto body_for = [&](std::string_view fn) -> std::pair<json, std::vector<Bytes>> {
    if (fn == contract::fn::add_node)
      return {{{"op", op::add_node}, {"channel", id}, {"node_address", net.address(2)}},
              {to_bytes(json(net.node(2).identity().node_certificate).dump())}};
    if (fn == contract::fn::add_member) {
      const auto sealed = crypto::seal_to_public_key(target.subject_public_key,
                                                     crypto::ChannelSecret::generate().view());
      return {{{"op", op::add_member},
               {"channel", id},
               {"member", digest(target).hex()},
               {"sealed_key", to_base64(sealed)}},
              {to_bytes(json(target).dump())}};
    }
    const auto ct = crypto::encrypt_message(crypto::ChannelSecret::generate(), to_bytes("intrusion"));
    return {{{"op", op::send_msg}, {"channel", id}, {"ciphertext", to_base64(ct)}}, {}};
  };
  const std::map<std::string_view, std::string> rest_path{{contract::fn::add_node, "nodes"},
                                                         {contract::fn::add_member, "members"},
                                                         {contract::fn::send_msg, "messages"},
                                                         {contract::fn::get_channel_sk, "key"},
                                                         {contract::fn::read_msg, "messages"}};

  // Read guards evaluated against the sequencer's persisted state.
  const auto state_ledger = ledger::Ledger::from_blocks(id, net.node(0).channel_directory(id).load_blocks(),
                                                        contract::applier());
  const auto& state = state_ledger.state();

  std::size_t rejected = 0;
  for (std::string_view fn : {contract::fn::add_node, contract::fn::add_member, contract::fn::get_channel_sk,
                              contract::fn::send_msg, contract::fn::read_msg}) {
    for (const auto& c : cases) {
      const auto name = std::string(fn) + " (" + c.label + ")";
      const auto& node_identity = net.node(c.node).identity();
      const auto before = heads();
      std::string guard_kind, rest_kind;

      if (fn == contract::fn::get_channel_sk || fn == contract::fn::read_msg) {
        guard_kind = to_string(error_kind([&] {
          if (fn == contract::fn::get_channel_sk)
            contract::get_channel_sk(state, node_identity.node_certificate, *c.ks.certificate);
          else
            contract::read_msg(state, node_identity.node_certificate, *c.ks.certificate, 0,
                               std::numeric_limits<std::int64_t>::max());
        }));
        if (fn == contract::fn::get_channel_sk) {
          rest_kind = response_kind(net.node(c.node).handle(
              "POST", "/channels/" + id + "/key", user_request(c.ks, {{"op", op::get_channel_sk}, {"channel", id}}), {}));
        } else {
          const auto env = make_envelope(c.ks.keypair.private_key, c.ks.certificate,
                                         {{"op", op::read_msg}, {"channel", id}, {"ts", 0}});
          rest_kind = response_kind(net.node(c.node).handle(
              "GET", "/channels/" + id + "/messages?ts=0",
              "", {{net::envelope_header, to_base64(as_bytes(json(env).dump()))}}));
        }
      } else {
        // The node itself forwards the call to the sequencer, bypassing any REST-side check.
        auto [body, extra] = body_for(fn);
        const auto env = make_envelope(c.ks.keypair.private_key, c.ks.certificate, body);
        auto tx = contract::make_transaction(fn, contract::from_envelope(env), node_identity.node_certificate, extra);
        const json msg{{"op", "submit"}, {"channel", id}, {"transaction", tx}};
        guard_kind = response_kind(net.node(0).handle("POST", "/internal/submit", node_message(node_identity, msg), {}));

        auto [rest_body, _] = body_for(fn);
        if (fn == contract::fn::add_member)
          rest_body = {{"op", op::lookup_member}, {"channel", id}, {"username", "mallory"},
                       {"user_node_address", net.address(2)}};
        rest_kind = response_kind(net.node(c.node).handle("POST", "/channels/" + id + "/" + rest_path.at(fn),
                                                          user_request(c.ks, rest_body), {}));
      }
      const bool ok = o.expect(guard_kind == "forbidden", name + ": guard answered " + guard_kind) &
                      o.expect(rest_kind == "forbidden" || rest_kind == "not_found",
                               name + ": node answered " + rest_kind) &
                      o.expect(heads() == before, name + ": head moved");
      rejected += ok;
    }
  }
  o.expect(heads() == start_heads, "heads differ from the start");

  // Positive controls: the same paths accept an authorized node and member.
  const auto bob_ks = bob->keystore();
  auto [body, extra] = body_for(contract::fn::send_msg);
  const auto env = make_envelope(bob_ks.keypair.private_key, bob_ks.certificate, body);
  const auto tx = contract::make_transaction(contract::fn::send_msg, contract::from_envelope(env),
                                             net.node(1).identity().node_certificate, extra);
  const json msg{{"op", "submit"}, {"channel", id}, {"transaction", tx}};
  o.expect(response_kind(net.node(0).handle("POST", "/internal/submit", node_message(net.node(1).identity(), msg),
                                            {})) == "ok",
           "authorized forwarded send was refused");
  o.expect(error_kind([&] {
             contract::get_channel_sk(state, net.node(1).identity().node_certificate, *bob_ks.certificate);
             contract::read_msg(state, net.node(1).identity().node_certificate, *bob_ks.certificate, 0, 1);
             throw Error(ErrorKind::internal, "ok");
           }) == ErrorKind::internal,
           "authorized read guard refused");
  o.summary = std::to_string(rejected) + "/15 negative combinations rejected, heads unchanged";
  o.expect(rejected == 15, o.summary);
  return o;
}

// ---- three-node traffic ----------------------------------------------------

struct Sent {
  std::int64_t timestamp;
  std::string key, text, sender;
};

struct Traffic {
  std::unique_ptr<harness::Network> net = std::make_unique<harness::Network>(3);
  harness::SharedChannel ch = harness::setup_channel(*net, "traffic");
  std::mutex mu;
  std::vector<Sent> sent;
  std::mt19937_64 rng{seed + 1};

  Traffic() {
    for (std::size_t i = 0; i < 9; ++i)
      ch.members.push_back(harness::join_user(*net, ch, "member" + std::to_string(i), i % 3));
  }

  std::vector<client::Client*> clients() {
    std::vector<client::Client*> out{ch.owner.get()};
    for (auto& m : ch.members) out.push_back(m.get());
    return out;
  }

  static std::string random_text(std::mt19937_64& rng) {
    static const std::vector<std::string> pieces{"a", "b", "z", " ", "0", "9", "!", "é", "ß", "日本", "🌍", "\n", "\"",
                                                 "\\", "<>", "x"};
    std::string out;
    const auto n = std::uniform_int_distribution<int>(1, 120)(rng);
    for (int i = 0; i < n; ++i) out += pieces[std::uniform_int_distribution<std::size_t>(0, pieces.size() - 1)(rng)];
    return out;
  }

  /// Sends `count` random messages from randomly chosen members, several at a time.
  std::size_t send_random(std::size_t count, std::size_t parallel) {
    auto users = clients();
    std::atomic<std::size_t> next{0}, failed{0};
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < parallel; ++t) {
      threads.emplace_back([&, t] {
        std::mt19937_64 local(seed + 100 + t);
        while (next++ < count) {
          auto* c = users[std::uniform_int_distribution<std::size_t>(0, users.size() - 1)(local)];
          const auto text = random_text(local);
          try {
            const auto r = c->send(ch.id, text);
            std::lock_guard lock(mu);
            sent.push_back({r.timestamp, r.key, text, c->username()});
          } catch (const Error&) {
            ++failed;
          }
        }
      });
    }
    for (auto& th : threads) th.join();
    return failed;
  }

  /// Brute force: every message at or after ts, by (timestamp, key).
  std::vector<Sent> oracle(std::int64_t ts) {
    std::vector<Sent> out;
    for (const auto& m : sent)
      if (m.timestamp >= ts) out.push_back(m);
    std::sort(out.begin(), out.end(),
              [](const Sent& a, const Sent& b) { return std::tie(a.timestamp, a.key) < std::tie(b.timestamp, b.key); });
    return out;
  }

  std::string compare(const client::ReadResult& r, std::int64_t ts) {
    const auto want = oracle(ts);
    if (!r.failures.empty()) return std::to_string(r.failures.size()) + " undecryptable";
    if (r.messages.size() != want.size())
      return "ts " + std::to_string(ts) + ": " + std::to_string(r.messages.size()) + " messages, oracle " +
             std::to_string(want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      const auto& m = r.messages[i];
      if (m.key != want[i].key || m.ledger_timestamp != want[i].timestamp || m.plaintext != want[i].text ||
          m.sender_username != want[i].sender)
        return "ts " + std::to_string(ts) + ": message " + std::to_string(i) + " differs";
    }
    return {};
  }
};

std::unique_ptr<Traffic> traffic_;
Traffic& traffic() {
  if (!traffic_) traffic_ = std::make_unique<Traffic>();
  return *traffic_;
}

Outcome range_oracle() {
  Outcome o;
  auto& t = traffic();
  const auto first = t.sent.size();
  o.expect(t.send_random(200, 4) == 0, "sends failed");
  o.expect(t.sent.size() - first == 200, "only " + std::to_string(t.sent.size() - first) + " sent");

  auto users = t.clients();
  std::vector<std::int64_t> stamps;
  for (const auto& m : t.sent) stamps.push_back(m.timestamp);
  std::sort(stamps.begin(), stamps.end());
  std::uniform_int_distribution<std::size_t> pick(0, stamps.size() - 1);
  std::vector<std::int64_t> points{0};
  while (points.size() < 50) {
    const auto base = stamps[pick(t.rng)];
    switch (t.rng() % 4) {
      case 0: points.push_back(base); break;
      case 1: points.push_back(base + 1); break;
      case 2: points.push_back(base - 1); break;
      default:
        points.push_back(std::uniform_int_distribution<std::int64_t>(stamps.front() - 1000000, stamps.back() + 1000000)(t.rng));
    }
  }
  for (auto ts : points) {
    auto* reader = users[std::uniform_int_distribution<std::size_t>(0, users.size() - 1)(t.rng)];
    const auto diff = t.compare(reader->read(t.ch.id, ts), ts);
    o.expect(diff.empty(), reader->username() + " " + diff);
  }
  o.summary = "200 random messages, 50 query points, all equal to the brute-force oracle";
  return o;
}

Outcome convergence() {
  Outcome o;
  auto& t = traffic();
  const auto first = t.sent.size();
  const auto failed = t.send_random(500, 8);
  o.expect(failed == 0, std::to_string(failed) + " sends failed");
  o.expect(t.sent.size() - first == 500, "only " + std::to_string(t.sent.size() - first) + " sent");

  const auto quiet = Clock::now();
  auto& net = *t.net;
  const auto id = t.ch.id;
  const bool converged = wait_until(
      [&] {
        const auto h = head_of(net.node(0), id);
        if (head_of(net.node(1), id) != h || head_of(net.node(2), id) != h) return false;
        const auto m = net.node(0).channel_messages(id);
        return net.node(1).channel_messages(id) == m && net.node(2).channel_messages(id) == m;
      },
      std::chrono::milliseconds(5000));
  const auto elapsed = seconds_since(quiet);
  o.expect(converged, "replicas did not converge within 5 s");
  const auto messages = net.node(0).channel_messages(id);
  o.expect(messages.size() == t.sent.size(),
           std::to_string(messages.size()) + " ciphertexts for " + std::to_string(t.sent.size()) + " sends");
  for (std::size_t i = 0; i < 3; ++i) o.expect(net.node(i).verify_channel(id), "node " + std::to_string(i) + " chain");
  o.summary = "500 messages via random nodes; heads and ciphertext lists equal on 3 replicas " +
              std::to_string(elapsed) + " s after the last send";
  return o;
}

Outcome non_repudiation() {
  Outcome o;
  auto& t = traffic();
  if (t.sent.empty()) o.expect(t.send_random(20, 4) == 0, "sends failed");
  auto& net = *t.net;
  const auto id = t.ch.id;

  std::map<std::string, crypto::PublicKey> ca;
  for (std::size_t i = 0; i < net.size(); ++i) ca.emplace(net.address(i), net.node(i).identity().ca_keypair.public_key);

  std::size_t checked = 0;
  std::optional<ledger::Transaction> sample;
  for (const auto& block : net.node(0).channel_directory(id).load_blocks()) {
    for (const auto& tx : block.transactions) {
      if (tx.function_name != contract::fn::send_msg) continue;
      ++checked;
      if (!sample) sample = tx;
      o.expect(!tx.args.empty() && crypto::verify(tx.submitter_certificate.subject_public_key,
                                                  envelope_signing_bytes(tx.nonce, to_string(tx.args[0])),
                                                  tx.submitter_signature),
               "tx " + tx.tx_id.hex() + " signature does not verify");
      const auto issuer = ca.find(tx.submitter_certificate.node_address);
      o.expect(issuer != ca.end() && verify_certificate(issuer->second, tx.submitter_certificate),
               "tx " + tx.tx_id.hex() + " certificate not issued by its home node");
    }
  }
  o.expect(checked == t.sent.size(),
           std::to_string(checked) + " committed sends for " + std::to_string(t.sent.size()) + " sent");

  // Forged submissions: someone else's key under the owner's certificate, and a body swapped after signing.
  const auto owner = t.ch.owner->keystore();
  const auto before = head_of(net.node(0), id);
  const auto ct = to_base64(crypto::encrypt_message(owner.channel_keys.at(id), to_bytes("forged")));
  const json body{{"op", op::send_msg}, {"channel", id}, {"ciphertext", ct}};
  const auto stranger = crypto::generate_keypair();
  const auto forged = json(make_envelope(stranger.private_key, owner.certificate, body)).dump();
  const auto forged_kind = response_kind(net.node(0).handle("POST", "/channels/" + id + "/messages", forged, {}));
  o.expect(forged_kind == "auth", "forged signature answered " + forged_kind);
  auto swapped = make_envelope(owner.keypair.private_key, owner.certificate, body);
  swapped.body = json{{"op", op::send_msg}, {"channel", id}, {"ciphertext", to_base64(to_bytes("other"))}}.dump();
  const auto swapped_kind =
      response_kind(net.node(1).handle("POST", "/channels/" + id + "/messages", json(swapped).dump(), {}));
  o.expect(swapped_kind == "auth", "altered body answered " + swapped_kind);
  o.expect(head_of(net.node(0), id) == before, "head moved after forged submissions");

  // A committed transaction with a flipped signature bit no longer executes.
  if (o.expect(sample.has_value(), "no committed send to tamper with")) {
    auto tx = *sample;
    auto sig = Bytes(tx.submitter_signature.view().begin(), tx.submitter_signature.view().end());
    sig[0] ^= 1;
    tx.submitter_signature = crypto::Signature::from(sig, "signature");
    auto state = net.node(0).channel_directory(id).load_blocks();
    auto ledger = ledger::Ledger::from_blocks(id, std::move(state), contract::applier());
    auto copy = ledger.state();
    o.expect(error_kind([&] { contract::execute(copy, tx); }) == ErrorKind::auth, "tampered signature executed");
  }
  o.summary = std::to_string(checked) + " committed sendMsg signatures verify under their certificates; "
              "forged submissions rejected";
  return o;
}

Outcome availability() {
  Outcome o;
  auto& t = traffic();
  if (t.sent.empty()) o.expect(t.send_random(20, 4) == 0, "sends failed");
  auto& net = *t.net;
  // Node 0 created the channel and sequences it.
  const auto sequencer = net.node(0).channel_status(t.ch.id)->sequencer_address;
  o.expect(sequencer == net.address(0), "node 0 is not the sequencer");
  net.kill(2);
  o.expect(!net.alive(2), "node 2 still running");

  std::size_t reads = 0;
  for (auto* c : t.clients()) {
    if (c->node() == net.address(2)) continue;
    for (std::int64_t ts : {std::int64_t{0}, t.oracle(0)[t.sent.size() / 2].timestamp}) {
      try {
        const auto diff = t.compare(c->read(t.ch.id, ts), ts);
        o.expect(diff.empty(), c->username() + "@" + c->node() + " " + diff);
      } catch (const Error& e) {
        o.expect(false, c->username() + "@" + c->node() + " read failed: " + e.what());
      }
      ++reads;
    }
  }
  o.expect(reads >= 8, "only " + std::to_string(reads) + " reads from survivors");
  o.summary = std::to_string(reads) + " reads from the 2 surviving nodes match all " + std::to_string(t.sent.size()) +
              " messages after node 2 was killed";
  return o;
}

// ---- load curve ------------------------------------------------------------

Outcome performance() {
  Outcome o;
  const auto start = Clock::now();
  const auto normal = harness::cycle_range(20, 100, 20);
  const auto stress = harness::cycle_range(110, 150, 10);
  harness::Network net(3);
  auto channel = harness::setup_channel(net, "bench");

  std::vector<harness::LoadCycleSpec> specs;
  for (auto n : normal) specs.push_back({n, std::chrono::milliseconds(30000), 1.0, {}});
  for (auto n : stress) specs.push_back({n, std::chrono::milliseconds(30000), 1.0, {}});
  harness::RunOptions options;
  const auto cal = harness::calibrate_think_time(net, channel, normal.back(), stress.back());
  options.think_time = cal.think_time;
  options.on_cycle = [](const harness::CycleResult& r) {
    const auto& all = r.op("all");
    std::cerr << "  cycle " << r.cycle << ": " << r.user_count << " users, send median " << r.op("send").median_ms
              << " ms, read median " << r.op("read").median_ms << " ms, " << all.throughput_rps << " rps, "
              << all.failures << " failures" << std::endl;
  };
  const auto results = harness::run_cycles(net, channel, specs, options);
  const auto report = harness::assert_trends(results, {0.10, 0.10, 0.15, normal.back()});
  const auto replicas = harness::check_replicas(net, channel.id);
  const auto elapsed = seconds_since(start);

  const auto out = std::filesystem::current_path() / "acceptance-load";
  harness::emit_plots(results, out, normal.back());

  std::string checks;
  for (const auto& c : report.checks) {
    o.expect(c.pass, c.name + ": " + c.detail);
    checks += (checks.empty() ? "" : ", ") + c.name;
  }
  o.expect(replicas.consistent, "replicas: " + replicas.detail);
  o.expect(elapsed <= 600, "took " + std::to_string(elapsed) + " s");
  o.summary = checks + " hold over 20..150 users (think time " + std::to_string(cal.think_time.count()) +
              " ms) in " + std::to_string(static_cast<int>(elapsed)) + " s; curve in " + out.string();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* s = std::getenv("QUARKS_ACCEPTANCE_SEED")) seed = std::stoull(s);
  std::cerr << "seed " << seed << std::endl;

  const std::vector<std::pair<std::string, Outcome (*)()>> criteria{
      {"e2e_federation", e2e_federation}, {"confidentiality", confidentiality},
      {"integrity", integrity},           {"replay_resistance", replay},
      {"authorization_guards", guards},   {"range_read_oracle", range_oracle},
      {"replica_convergence", convergence}, {"non_repudiation", non_repudiation},
      {"availability_node_loss", availability}, {"performance_trend", performance}};

  std::set<std::string> only(argv + 1, argv + argc);
  bool all_pass = true;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.expect(false, std::string("threw: ") + e.what());
    }
    all_pass &= o.pass();
    std::cout << (o.pass() ? "PASS " : "FAIL ") << name << ": " << o.detail() << std::endl;
    if (name == "replay_resistance") scenario_.reset();
    if (name == "availability_node_loss") traffic_.reset();
  }
  return all_pass ? 0 : 1;
}
