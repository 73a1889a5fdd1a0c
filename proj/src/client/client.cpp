#include "quarks/client.hpp"

#include <sodium.h>

#include <chrono>

#include "quarks/envelope.hpp"
#include "quarks/error.hpp"

namespace quarks::client {

using nlohmann::json;

namespace {

std::int64_t wall_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string())
    fail(ErrorKind::network, std::string("node response lacks ") + key);
  return j[key].get<std::string>();
}

std::string channel_path(const std::string& id, const char* tail) {
  if (id.empty() || id.find_first_of("/?#%") != std::string::npos)
    fail(ErrorKind::validation, "malformed channel id");
  return "/channels/" + id + "/" + tail;
}

}  // namespace

std::string encode_plaintext(const std::string& sender, std::int64_t sent_at, const std::string& text) {
  return json{{"sender_username", sender}, {"sent_at_client", sent_at}, {"text", text}}.dump();
}

Client::Client(ClientKeystore keystore, std::shared_ptr<net::Transport> transport)
    : ks_(std::move(keystore)), transport_(std::move(transport)) {
  username_ = ks_.username;
  node_ = ks_.home_node_address;
}

ClientKeystore Client::keystore() const {
  std::lock_guard lock(mu_);
  return ks_;
}

void Client::set_node(std::string address) {
  std::lock_guard lock(mu_);
  node_ = std::move(address);
}

bool Client::has_channel_key(const std::string& channel_id) const {
  std::lock_guard lock(mu_);
  return ks_.channel_keys.count(channel_id) != 0;
}

const Certificate& Client::certificate() const {
  if (!ks_.certificate) fail(ErrorKind::validation, "keystore is not registered; run register first");
  return *ks_.certificate;
}

const crypto::ChannelSecret& Client::secret_for(const std::string& channel_id) const {
  auto it = ks_.channel_keys.find(channel_id);
  if (it == ks_.channel_keys.end())
    fail(ErrorKind::validation, "no key for channel " + channel_id + "; fetch the channel key first");
  return it->second;
}

json Client::exchange(const net::HttpResponse& response, const crypto::Nonce& nonce) {
  if (ks_.node_certificate && node_ == ks_.home_node_address) {
    const auto sig = response.header(net::signature_header);
    bool ok = false;
    try {
      ok = !sig.empty() &&
           crypto::verify(ks_.node_certificate->subject_public_key.view(),
                          response_signing_bytes(nonce.view(), response.body), from_base64(sig));
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) fail(ErrorKind::integrity, "response signature from " + node_ + " does not verify");
  }
  auto j = net::expect_ok(response);
  if (j.contains("nonce") && j["nonce"] != to_base64(nonce.view()))
    fail(ErrorKind::integrity, "response echoes a different nonce");
  return j;
}

json Client::post(const std::string& path, const json& body) {
  const auto env = make_envelope(ks_.keypair.private_key, certificate(), body);
  return exchange(transport_->post(node_, path, json(env).dump()), env.nonce);
}

void Client::register_user() {
  std::lock_guard lock(mu_);
  json body{{"op", op::register_user},
            {"username", ks_.username},
            {"public_key", to_base64(ks_.keypair.public_key.view())}};
  const auto env = make_envelope(ks_.keypair.private_key, std::nullopt, body);
  const auto response = transport_->post(ks_.home_node_address, "/register", json(env).dump());
  auto j = net::expect_ok(response);
  auto cert = j.at("certificate").get<Certificate>();
  auto node_cert = j.at("node_certificate").get<Certificate>();
  if (cert.username != ks_.username || cert.subject_public_key != ks_.keypair.public_key ||
      cert.node_address != ks_.home_node_address)
    fail(ErrorKind::integrity, "issued certificate does not match the request");
  if (node_cert.node_address != ks_.home_node_address || !verify_self_issued(node_cert) ||
      !verify_certificate(node_cert.subject_public_key, cert))
    fail(ErrorKind::integrity, "certificate is not signed by the home node");
  ks_.node_certificate = node_cert;
  exchange(response, env.nonce);
  ks_.certificate = std::move(cert);
}

std::string Client::create_channel(const std::string& channel_name) {
  std::lock_guard lock(mu_);
  if (channel_name.empty()) fail(ErrorKind::validation, "channel name must not be empty");
  auto secret = crypto::ChannelSecret::generate();
  const auto sealed = crypto::seal_to_public_key(ks_.keypair.public_key, secret.view());
  auto j = post("/channels", {{"op", op::create_channel},
                              {"channel_name", channel_name},
                              {"sealed_key", to_base64(sealed)}});
  const auto id = field(j, "channel_id");
  if (id != channel_id_for(certificate(), channel_name))
    fail(ErrorKind::integrity, "node returned an unexpected channel id");
  ks_.channel_keys[id] = secret;
  return id;
}

void Client::add_node(const std::string& channel_id, const std::string& node_address) {
  std::lock_guard lock(mu_);
  if (node_address.empty()) fail(ErrorKind::validation, "node address must not be empty");
  post(channel_path(channel_id, "nodes"),
       {{"op", op::add_node}, {"channel", channel_id}, {"node_address", node_address}});
}

void Client::add_member(const std::string& channel_id, const std::string& username,
                        const std::string& user_node_address) {
  std::lock_guard lock(mu_);
  const auto& secret = secret_for(channel_id);
  const auto path = channel_path(channel_id, "members");
  auto found = post(path, {{"op", op::lookup_member},
                           {"channel", channel_id},
                           {"username", username},
                           {"user_node_address", user_node_address}});
  auto target = found.at("certificate").get<Certificate>();
  const auto pk = crypto::PublicKey::from(from_base64(field(found, "public_key")), "public key");
  if (target.username != username || target.node_address != user_node_address ||
      target.subject_public_key != pk)
    fail(ErrorKind::integrity, "node returned a certificate for someone else");
  const auto sealed = crypto::seal_to_public_key(pk, secret.view());
  post(path, {{"op", op::add_member},
              {"channel", channel_id},
              {"member", digest(target).hex()},
              {"sealed_key", to_base64(sealed)}});
}

void Client::get_channel_key(const std::string& channel_id) {
  std::lock_guard lock(mu_);
  auto j = post(channel_path(channel_id, "key"), {{"op", op::get_channel_sk}, {"channel", channel_id}});
  auto opened = crypto::open_with_private_key(ks_.keypair.private_key, from_base64(field(j, "sealed_key")));
  if (opened.size() != crypto::secret_key_size)
    fail(ErrorKind::crypto, "sealed channel key has the wrong length");
  ks_.channel_keys[channel_id] = crypto::ChannelSecret(opened);
  sodium_memzero(opened.data(), opened.size());
}

SendResult Client::send(const std::string& channel_id, const std::string& plaintext) {
  std::lock_guard lock(mu_);
  if (plaintext.empty()) fail(ErrorKind::validation, "message must not be empty");
  if (plaintext.size() > max_plaintext_size) fail(ErrorKind::validation, "message exceeds 60 KiB");
  std::string encoded;
  try {
    encoded = encode_plaintext(ks_.username, wall_ns(), plaintext);
  } catch (const json::exception&) {
    fail(ErrorKind::validation, "message is not valid UTF-8");
  }
  const auto ciphertext = crypto::encrypt_message(secret_for(channel_id), as_bytes(encoded));
  auto j = post(channel_path(channel_id, "messages"),
                {{"op", op::send_msg}, {"channel", channel_id}, {"ciphertext", to_base64(ciphertext)}});
  return {j.value("timestamp", std::int64_t{0}), j.value("key", std::string{})};
}

ReadResult Client::read(const std::string& channel_id, std::int64_t since_ts) {
  std::lock_guard lock(mu_);
  if (since_ts < 0) fail(ErrorKind::validation, "since timestamp must be non-negative");
  const auto& secret = secret_for(channel_id);
  const auto env = make_envelope(ks_.keypair.private_key, certificate(),
                                 {{"op", op::read_msg}, {"channel", channel_id}, {"ts", since_ts}});
  const auto header = to_base64(as_bytes(json(env).dump()));
  auto j = exchange(transport_->get(node_, channel_path(channel_id, "messages") + "?ts=" + std::to_string(since_ts),
                                    {{net::envelope_header, header}}),
                    env.nonce);
  ReadResult out;
  out.node_time = j.value("now", std::int64_t{0});
  for (const auto& m : j.at("messages")) {
    const auto key = m.at("key").get<std::string>();
    const auto ts = m.at("timestamp").get<std::int64_t>();
    try {
      const auto plain = crypto::decrypt_message(secret, from_base64(m.at("ciphertext").get<std::string>()));
      json p = json::parse(plain.begin(), plain.end());
      out.messages.push_back({channel_id, key, ts, p.at("sender_username").get<std::string>(),
                              p.at("sent_at_client").get<std::int64_t>(), p.at("text").get<std::string>()});
    } catch (const std::exception& e) {
      out.failures.push_back({key, ts, e.what()});
    }
  }
  return out;
}

ClientKeystore keygen_and_register(const std::string& node_address, const std::string& username,
                                   std::shared_ptr<net::Transport> transport) {
  Client c(new_keystore(username, node_address), std::move(transport));
  c.register_user();
  return c.keystore();
}

}  // namespace quarks::client
