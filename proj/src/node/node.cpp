#include "quarks/node.hpp"

#include <httplib.h>

#include <atomic>
#include <charconv>

#include "internal.hpp"
#include "quarks/error.hpp"
#include "quarks/log.hpp"

namespace quarks::node {

using nlohmann::json;
using namespace detail;

namespace {

constexpr auto replication_wait = std::chrono::milliseconds(2000);

struct Route {
  std::string method;
  std::vector<std::string> segments;
  std::map<std::string, std::string> query;
};

Route parse_route(const std::string& method, const std::string& target) {
  Route r{method, {}, {}};
  const auto qpos = target.find('?');
  const std::string path = target.substr(0, qpos);
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    if (end > start) r.segments.push_back(httplib::detail::decode_url(path.substr(start, end - start), false));
    start = end + 1;
  }
  if (qpos != std::string::npos) {
    httplib::Params params;
    httplib::detail::parse_query_text(target.substr(qpos + 1), params);
    for (auto& [k, v] : params) r.query[k] = v;
  }
  return r;
}

Envelope parse_envelope(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorKind::validation, "request is not an envelope");
  return j.get<Envelope>();
}

std::string string_field(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string())
    fail(ErrorKind::validation, std::string("missing field ") + key);
  return body[key].get<std::string>();
}

std::int64_t parse_ts(const std::string& key) {
  std::int64_t ts = 0;
  std::from_chars(key.data(), key.data() + std::min<std::size_t>(19, key.size()), ts);
  return ts;
}

/// A verified user request.
struct UserCall {
  Envelope envelope;
  json body;
  contract::SignedRequest request;
  const Certificate& cert() const { return request.certificate; }
};

}  // namespace

struct Node::Impl {
  explicit Impl(NodeConfig c)
      : config(std::move(c)),
        transport(config.transport ? config.transport : net::make_http_transport()),
        identity((std::filesystem::create_directories(config.data_dir),
                  load_or_create_identity(config.data_dir / "identity.json", config.address))),
        replay(config.replay_ttl),
        users(config.data_dir / "users.jsonl"),
        cas(transport, identity.node_certificate),
        pending(config.pending_add_ttl) {
    load_channels();
  }

  NodeConfig config;
  std::shared_ptr<net::Transport> transport;
  NodeIdentity identity;
  ReplayCache replay;
  UserRegistry users;
  CaDirectory cas;
  PendingAdds pending;

  mutable std::shared_mutex channels_mu;
  std::map<std::string, std::shared_ptr<Channel>> channels;

  std::unique_ptr<httplib::Server> server;
  std::thread server_thread;
  std::atomic<bool> running{false};

  std::filesystem::path channel_root(const std::string& id) const {
    return config.data_dir / "channels" / id;
  }

  std::shared_ptr<Channel> make_channel(ledger::Ledger ledger) {
    ledger::LedgerDirectory dir(channel_root(ledger.channel_id()));
    return std::make_shared<Channel>(std::move(ledger), std::move(dir), identity, transport, config);
  }

  void load_channels() {
    const auto root = config.data_dir / "channels";
    if (!std::filesystem::exists(root)) return;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
      if (!entry.is_directory()) continue;
      const auto id = entry.path().filename().string();
      try {
        ledger::LedgerDirectory dir(entry.path());
        auto ledger = ledger::Ledger::from_blocks(id, dir.load_blocks(), contract::applier());
        if (contract::channel_id(ledger.state()) != id)
          fail(ErrorKind::integrity, "ledger belongs to a different channel");
        dir.write_state(ledger.state());
        channels[id] = make_channel(std::move(ledger));
      } catch (const std::exception& e) {
        log::error("node", "refusing to load channel ledger", {{"channel", id}, {"error", e.what()}});
      }
    }
  }

  std::shared_ptr<Channel> find_channel(const std::string& id) const {
    std::shared_lock lock(channels_mu);
    auto it = channels.find(id);
    if (it == channels.end()) fail(ErrorKind::not_found, "channel " + id + " is not hosted here");
    return it->second;
  }

  void check_replay(const crypto::Nonce& nonce) {
    if (!replay.check_and_insert(nonce)) fail(ErrorKind::replay, "nonce was already used");
  }

  UserCall authenticate(const std::string& text, std::string_view expected_op) {
    auto env = parse_envelope(text);
    if (!env.certificate) fail(ErrorKind::auth, "request carries no certificate");
    const auto& cert = *env.certificate;
    if (!cas.verify_user_certificate(cert)) fail(ErrorKind::auth, "certificate does not verify");
    if (!verify_envelope(env, cert.subject_public_key)) fail(ErrorKind::auth, "signature does not verify");
    auto body = parse_body(env.body);
    if (body.value("op", "") != expected_op)
      fail(ErrorKind::validation, "expected a " + std::string(expected_op) + " request");
    check_replay(env.nonce);
    auto request = contract::from_envelope(env);
    return {std::move(env), std::move(body), std::move(request)};
  }

  /// Node-to-node request: self-issued certificate, valid signature, fresh nonce.
  std::pair<Envelope, json> authenticate_node(const std::string& text, std::string_view expected_op) {
    auto env = parse_envelope(text);
    if (!env.certificate || !verify_self_issued(*env.certificate))
      fail(ErrorKind::auth, "peer certificate is not a valid node certificate");
    if (!verify_envelope(env, env.certificate->subject_public_key))
      fail(ErrorKind::auth, "peer signature does not verify");
    auto body = parse_body(env.body);
    if (body.value("op", "") != expected_op)
      fail(ErrorKind::validation, "expected a " + std::string(expected_op) + " message");
    check_replay(env.nonce);
    return {std::move(env), std::move(body)};
  }

  static void require_channel_field(const json& body, const std::string& id) {
    if (string_field(body, "channel") != id)
      fail(ErrorKind::validation, "signed request names a different channel");
  }

  /// Commits a write through the channel sequencer, forwarding when it lives elsewhere.
  /// Returns the sequencer's commit record including peer replication heights.
  json commit(Channel& channel, const ledger::Transaction& tx) {
    if (channel.is_sequencer()) return commit_local(channel, tx);
    json body{{"op", "submit"}, {"channel", channel.id()}, {"transaction", tx}};
    net::HttpResponse response;
    try {
      response = post_signed(*transport, identity, channel.sequencer_address(), "/internal/submit", body);
    } catch (const Error& e) {
      fail(ErrorKind::unavailable, "channel sequencer is unreachable: " + std::string(e.what()));
    }
    return net::expect_ok(response);
  }

  json commit_local(Channel& channel, ledger::Transaction tx) {
    const auto c = channel.submit(std::move(tx));
    channel.wait_replicated(c.height, replication_wait);
    json peers = json::object();
    for (const auto& [address, height] : channel.peer_heights()) peers[address] = height;
    return json{{"height", c.height}, {"recorded_at", c.recorded_at}, {"peers", peers}};
  }

  // ---- protocol handlers -------------------------------------------------

  json register_user(const std::string& text) {
    auto env = parse_envelope(text);
    if (env.certificate) fail(ErrorKind::validation, "registration must not carry a certificate");
    auto body = parse_body(env.body);
    if (body.value("op", "") != op::register_user) fail(ErrorKind::validation, "expected a register request");
    const auto username = string_field(body, "username");
    const auto pk = crypto::PublicKey::from(from_base64(string_field(body, "public_key")), "public key");
    if (!verify_envelope(env, pk)) fail(ErrorKind::auth, "signature does not verify under the submitted key");
    check_replay(env.nonce);
    validate_fields(username, identity.node_address);
    auto cert = issue_certificate(identity.ca_keypair, username, identity.node_address, pk, now_seconds());
    users.add({username, cert, now_seconds()});
    log::info("registry", "registered user", {{"username", username}});
    return {{"nonce", to_base64(env.nonce.view())},
            {"certificate", cert},
            {"node_certificate", identity.node_certificate}};
  }

  json create_channel(const std::string& text) {
    auto call = authenticate(text, op::create_channel);
    const auto& cert = call.cert();
    if (cert.node_address != identity.node_address)
      fail(ErrorKind::auth, "channels are created on the creator's home node");
    const auto name = string_field(call.body, "channel_name");
    const auto id = channel_id_for(cert, name);
    std::unique_lock lock(channels_mu);
    if (channels.count(id) != 0) fail(ErrorKind::conflict, "channel " + name + " already exists");
    auto genesis = contract::init(call.request, identity.node_certificate, now_ns());
    auto ledger = ledger::Ledger::create(id, std::move(genesis), contract::applier());
    auto channel = make_channel(std::move(ledger));
    channel->directory().write_all(channel->read([](const ledger::Ledger& l) { return l.blocks(); }));
    channel->persist_state();
    if (running) channel->start();
    channels[id] = channel;
    log::info("channel", "created channel", {{"channel", id}, {"name", name}, {"creator", cert.username}});
    return {{"nonce", to_base64(call.envelope.nonce.view())}, {"channel_id", id}};
  }

  json add_node(const std::string& id, const std::string& text) {
    auto call = authenticate(text, op::add_node);
    require_channel_field(call.body, id);
    auto channel = find_channel(id);
    const auto address = string_field(call.body, "node_address");
    const auto new_node = cas.resolve(address);
    auto tx = contract::make_transaction(contract::fn::add_node, call.request, identity.node_certificate,
                                         {to_bytes(json(new_node).dump())});
    auto result = commit(*channel, tx);
    const auto height = result.at("height").get<std::uint64_t>();
    const bool synced = address == channel->sequencer_address() ||
                        result["peers"].value(address, std::uint64_t{0}) >= height;
    if (!synced)
      fail(ErrorKind::network,
           "node " + address + " was authorized but has not yet received the ledger; retrying");
    log::info("channel", "node joined channel", {{"channel", id}, {"node", address}});
    return {{"nonce", to_base64(call.envelope.nonce.view())}, {"success", true}, {"height", height}};
  }

  json members(const std::string& id, const std::string& text) {
    auto env = parse_envelope(text);
    const auto op_name = parse_body(env.body).value("op", "");
    if (op_name == op::lookup_member) return lookup_member(id, text);
    if (op_name == op::add_member) return add_member(id, text);
    fail(ErrorKind::validation, "expected a lookupMember or addMember request");
  }

  json lookup_member(const std::string& id, const std::string& text) {
    auto call = authenticate(text, op::lookup_member);
    require_channel_field(call.body, id);
    auto channel = find_channel(id);
    const bool allowed = channel->read([&](const ledger::Ledger& l) {
      return contract::is_channel_node(l.state(), identity.node_certificate) &&
             contract::is_channel_member(l.state(), call.cert());
    });
    if (!allowed) fail(ErrorKind::forbidden, "requester is not a member of this channel");
    const auto username = string_field(call.body, "username");
    const auto address = string_field(call.body, "user_node_address");
    Certificate target;
    if (address == identity.node_address) {
      auto record = users.find(username);
      if (!record) fail(ErrorKind::not_found, "unknown user " + username);
      target = record->certificate;
    } else {
      target = cas.fetch_user_certificate(username, address);
    }
    pending.put(digest(call.cert()).hex(), id, target);
    return {{"nonce", to_base64(call.envelope.nonce.view())},
            {"public_key", to_base64(target.subject_public_key.view())},
            {"certificate", target},
            {"member", digest(target).hex()}};
  }

  json add_member(const std::string& id, const std::string& text) {
    auto call = authenticate(text, op::add_member);
    require_channel_field(call.body, id);
    auto channel = find_channel(id);
    const auto requester = digest(call.cert()).hex();
    const auto member = string_field(call.body, "member");
    auto target = pending.find(requester, id, member);
    if (!target) fail(ErrorKind::state, "no pending member lookup matches this request");
    auto tx = contract::make_transaction(contract::fn::add_member, call.request, identity.node_certificate,
                                         {to_bytes(json(*target).dump())});
    auto result = commit(*channel, tx);
    pending.erase(requester, id, member);
    log::info("channel", "member added", {{"channel", id}, {"member", target->username}});
    return {{"nonce", to_base64(call.envelope.nonce.view())}, {"success", true},
            {"height", result.at("height")}};
  }

  json get_channel_key(const std::string& id, const std::string& text) {
    auto call = authenticate(text, op::get_channel_sk);
    require_channel_field(call.body, id);
    auto channel = find_channel(id);
    auto sealed = channel->read([&](const ledger::Ledger& l) {
      return contract::get_channel_sk(l.state(), identity.node_certificate, call.cert());
    });
    return {{"nonce", to_base64(call.envelope.nonce.view())}, {"sealed_key", to_base64(sealed)}};
  }

  json send_message(const std::string& id, const std::string& text) {
    auto call = authenticate(text, op::send_msg);
    require_channel_field(call.body, id);
    auto channel = find_channel(id);
    auto tx = contract::make_transaction(contract::fn::send_msg, call.request, identity.node_certificate);
    auto result = commit(*channel, tx);
    const auto ts = result.at("recorded_at").get<std::int64_t>();
    return {{"nonce", to_base64(call.envelope.nonce.view())},
            {"success", true},
            {"timestamp", ts},
            {"key", ledger::message_key(ts)}};
  }

  json read_messages(const std::string& id, const Route& route, const net::Headers& headers) {
    auto it = headers.find(net::envelope_header);
    if (it == headers.end()) fail(ErrorKind::auth, "missing request envelope header");
    auto call = authenticate(to_string(from_base64(it->second)), op::read_msg);
    require_channel_field(call.body, id);
    if (!call.body.contains("ts") || !call.body["ts"].is_number_integer())
      fail(ErrorKind::validation, "missing field ts");
    const auto ts = call.body["ts"].get<std::int64_t>();
    if (auto q = route.query.find("ts"); q != route.query.end() && q->second != std::to_string(ts))
      fail(ErrorKind::validation, "query timestamp differs from the signed one");
    auto channel = find_channel(id);
    const auto now = now_ns();
    auto entries = channel->read([&](const ledger::Ledger& l) {
      return contract::read_msg(l.state(), identity.node_certificate, call.cert(), ts, now);
    });
    json messages = json::array();
    for (const auto& e : entries)
      messages.push_back({{"key", e.key}, {"timestamp", parse_ts(e.key)}, {"ciphertext", to_base64(e.value)}});
    return {{"nonce", to_base64(call.envelope.nonce.view())}, {"now", now}, {"messages", std::move(messages)}};
  }

  json user_certificate(const std::string& username) {
    auto record = users.find(username);
    if (!record) fail(ErrorKind::not_found, "unknown user " + username);
    return {{"certificate", record->certificate}};
  }

  json healthz() const {
    json ids = json::array();
    {
      std::shared_lock lock(channels_mu);
      for (const auto& [id, _] : channels) ids.push_back(id);
    }
    return {{"status", "ok"},
            {"address", identity.node_address},
            {"node_certificate", identity.node_certificate},
            {"channels", ids.size()},
            {"channel_ids", ids}};
  }

  // ---- federation handlers -----------------------------------------------

  json internal_submit(const std::string& text) {
    auto [env, body] = authenticate_node(text, "submit");
    auto channel = find_channel(string_field(body, "channel"));
    if (!channel->is_sequencer()) fail(ErrorKind::state, "this node does not sequence the channel");
    auto tx = body.at("transaction").get<ledger::Transaction>();
    if (digest(tx.submitter_node_certificate) != digest(*env.certificate))
      fail(ErrorKind::forbidden, "forwarded transaction names a different submitting node");
    auto result = commit_local(*channel, std::move(tx));
    result["nonce"] = to_base64(env.nonce.view());
    return result;
  }

  json internal_replicate(const std::string& text) {
    auto [env, body] = authenticate_node(text, "replicate");
    auto channel = find_channel(string_field(body, "channel"));
    auto blocks = body.at("blocks").get<std::vector<ledger::Block>>();
    const auto height = channel->accept_blocks(blocks, *env.certificate);
    return {{"nonce", to_base64(env.nonce.view())}, {"height", height}};
  }

  json internal_snapshot(const std::string& text) {
    auto [env, body] = authenticate_node(text, "snapshot");
    const auto id = string_field(body, "channel");
    auto snapshot = body.at("snapshot").get<ledger::LedgerSnapshot>();
    if (snapshot.channel_id != id) fail(ErrorKind::validation, "snapshot names a different channel");
    auto candidate = ledger::import_snapshot(std::move(snapshot), contract::applier());
    const auto& state = candidate.state();
    if (contract::channel_id(state) != id) fail(ErrorKind::integrity, "snapshot state belongs to another channel");
    if (!contract::is_channel_node(state, *env.certificate))
      fail(ErrorKind::forbidden, "sending node is not a channel node");
    if (!contract::is_channel_node(state, identity.node_certificate))
      fail(ErrorKind::forbidden, "this node is not authorized for the channel");

    std::unique_lock lock(channels_mu);
    std::uint64_t height = 0;
    if (auto it = channels.find(id); it != channels.end()) {
      auto existing = it->second;
      lock.unlock();
      height = existing->import(std::move(candidate), *env.certificate);
    } else {
      height = candidate.height();
      auto channel = make_channel(std::move(candidate));
      if (channel->is_sequencer()) fail(ErrorKind::forbidden, "refusing to adopt a channel as sequencer");
      channel->directory().write_all(channel->read([](const ledger::Ledger& l) { return l.blocks(); }));
      channel->persist_state();
      channels[id] = channel;
      log::info("replication", "imported channel replica",
                {{"channel", id}, {"height", height}, {"from", env.certificate->node_address}});
    }
    return {{"nonce", to_base64(env.nonce.view())}, {"height", height}, {"ack", "replica ready"}};
  }

  // ---- dispatch ----------------------------------------------------------

  json dispatch(const Route& r, const std::string& body, const net::Headers& headers) {
    const auto& s = r.segments;
    const bool post = r.method == "POST";
    const bool get = r.method == "GET";
    if (s.size() == 1 && s[0] == "register" && post) return register_user(body);
    if (s.size() == 1 && s[0] == "healthz" && get) return healthz();
    if (s.size() == 1 && s[0] == "channels" && post) return create_channel(body);
    if (s.size() == 3 && s[0] == "channels") {
      const auto& id = s[1];
      if (s[2] == "nodes" && post) return add_node(id, body);
      if (s[2] == "members" && post) return members(id, body);
      if (s[2] == "key" && post) return get_channel_key(id, body);
      if (s[2] == "messages" && post) return send_message(id, body);
      if (s[2] == "messages" && get) return read_messages(id, r, headers);
    }
    if (s.size() == 3 && s[0] == "users" && s[2] == "certificate" && get) return user_certificate(s[1]);
    if (s.size() == 2 && s[0] == "internal" && post) {
      if (s[1] == "submit") return internal_submit(body);
      if (s[1] == "replicate") return internal_replicate(body);
      if (s[1] == "snapshot") return internal_snapshot(body);
    }
    fail(ErrorKind::not_found, "no route for " + r.method + " /" + [&] {
      std::string p;
      for (const auto& seg : s) p += (p.empty() ? "" : "/") + seg;
      return p;
    }());
  }

  /// Best-effort nonce of the request, echoed in responses and covered by their signature.
  static Bytes request_nonce(const std::string& body, const net::Headers& headers) {
    std::string text = body;
    if (auto it = headers.find(net::envelope_header); it != headers.end()) {
      try {
        text = to_string(from_base64(it->second));
      } catch (const std::exception&) {
        return {};
      }
    }
    json j = json::parse(text, nullptr, false);
    if (j.is_object() && j.contains("nonce") && j["nonce"].is_string()) {
      try {
        auto n = from_base64(j["nonce"].get<std::string>());
        if (n.size() == crypto::nonce_size) return n;
      } catch (const std::exception&) {
      }
    }
    return {};
  }

  net::HttpResponse respond(int status, json body, const Bytes& nonce) {
    if (!nonce.empty() && !body.contains("nonce")) body["nonce"] = to_base64(nonce);
    net::HttpResponse out{status, body.dump(), {}};
    const auto sig = crypto::sign(identity.ca_keypair.private_key, response_signing_bytes(nonce, out.body));
    out.headers.emplace(net::signature_header, to_base64(sig.view()));
    out.headers.emplace("Content-Type", "application/json");
    return out;
  }

  net::HttpResponse handle(const std::string& method, const std::string& target, const std::string& body,
                           const net::Headers& headers) {
    const auto route = parse_route(method, target);
    const auto nonce = request_nonce(body, headers);
    try {
      return respond(200, dispatch(route, body, headers), nonce);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::forbidden || e.kind() == ErrorKind::auth || e.kind() == ErrorKind::replay ||
          e.kind() == ErrorKind::integrity)
        log::warn("node", "request rejected",
                  {{"method", method}, {"path", target.substr(0, target.find('?'))},
                   {"kind", to_string(e.kind())}, {"error", e.what()}});
      return respond(http_status(e.kind()),
                     {{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}}, nonce);
    } catch (const json::exception& e) {
      return respond(400, {{"error", {{"kind", "validation"}, {"message", e.what()}}}}, nonce);
    } catch (const std::exception& e) {
      log::error("node", "internal error", {{"path", target}, {"error", e.what()}});
      return respond(500, {{"error", {{"kind", "internal"}, {"message", e.what()}}}}, nonce);
    }
  }
};

Node::Node(NodeConfig config) {
  if (config.address.empty()) fail(ErrorKind::validation, "node address is required");
  if (config.data_dir.empty()) fail(ErrorKind::validation, "data directory is required");
  crypto::ensure_initialized();
  impl_ = std::make_unique<Impl>(std::move(config));
}

Node::~Node() { stop(); }

void Node::start() {
  auto& m = *impl_;
  if (m.running) return;
  const auto& address = m.config.address;
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) fail(ErrorKind::validation, "address must be host:port");
  const auto host = address.substr(0, colon);
  const int port = std::stoi(address.substr(colon + 1));

  m.server = std::make_unique<httplib::Server>();
  const auto threads = m.config.http_threads;
  m.server->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  m.server->set_keep_alive_max_count(100000);
  m.server->set_keep_alive_timeout(5);
  m.server->set_tcp_nodelay(true);
  m.server->set_payload_max_length(64 * 1024 * 1024);
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    net::Headers headers(req.headers.begin(), req.headers.end());
    auto out = impl_->handle(req.method, req.target, req.body, headers);
    res.status = out.status;
    for (const auto& [k, v] : out.headers)
      if (k != "Content-Type") res.set_header(k, v);
    res.set_content(out.body, "application/json");
  };
  m.server->Get(".*", handler);
  m.server->Post(".*", handler);
  if (!m.server->bind_to_port(host, port))
    fail(ErrorKind::unavailable, "cannot listen on " + address);

  {
    std::shared_lock lock(m.channels_mu);
    for (auto& [id, channel] : m.channels) channel->start();
  }
  for (const auto& peer : m.config.peers) {
    try {
      m.cas.resolve(peer);
    } catch (const std::exception& e) {
      log::warn("node", "peer not reachable at startup", {{"peer", peer}, {"error", e.what()}});
    }
  }
  m.running = true;
  m.server_thread = std::thread([&m] { m.server->listen_after_bind(); });
  m.server->wait_until_ready();
  log::info("node", "listening", {{"address", address}, {"channels", m.channels.size()}});
}

void Node::stop() {
  if (!impl_) return;
  auto& m = *impl_;
  if (!m.running.exchange(false)) return;
  m.server->stop();
  if (m.server_thread.joinable()) m.server_thread.join();
  std::shared_lock lock(m.channels_mu);
  for (auto& [id, channel] : m.channels) {
    channel->stop();
    try {
      channel->persist_state();
    } catch (const std::exception& e) {
      log::error("node", "failed to persist state", {{"channel", id}, {"error", e.what()}});
    }
  }
  log::info("node", "stopped", {{"address", m.config.address}});
}

bool Node::running() const { return impl_->running; }
const NodeIdentity& Node::identity() const { return impl_->identity; }
const std::string& Node::address() const { return impl_->config.address; }
const std::filesystem::path& Node::data_dir() const { return impl_->config.data_dir; }

std::vector<std::string> Node::channel_ids() const {
  std::shared_lock lock(impl_->channels_mu);
  std::vector<std::string> out;
  for (const auto& [id, _] : impl_->channels) out.push_back(id);
  return out;
}

std::optional<ChannelStatus> Node::channel_status(const std::string& channel_id) const {
  std::shared_lock lock(impl_->channels_mu);
  auto it = impl_->channels.find(channel_id);
  if (it == impl_->channels.end()) return std::nullopt;
  return it->second->status();
}

bool Node::verify_channel(const std::string& channel_id) const {
  return impl_->find_channel(channel_id)->read([](const ledger::Ledger& l) { return l.verify_chain(); });
}

std::vector<ledger::StateEntry> Node::channel_messages(const std::string& channel_id) const {
  return impl_->find_channel(channel_id)->read([](const ledger::Ledger& l) {
    return l.state().range(ledger::message_key(0), ":");
  });
}

ledger::LedgerDirectory Node::channel_directory(const std::string& channel_id) const {
  return ledger::LedgerDirectory(impl_->channel_root(channel_id));
}

std::optional<UserRecord> Node::find_user(const std::string& username) const {
  return impl_->users.find(username);
}

net::HttpResponse Node::handle(const std::string& method, const std::string& path, const std::string& body,
                               const net::Headers& headers) {
  return impl_->handle(method, path, body, headers);
}

}  // namespace quarks::node
