#include <fstream>
#include <sstream>

#include <sys/stat.h>

#include "internal.hpp"
#include "quarks/error.hpp"
#include "quarks/log.hpp"

namespace quarks::node {

void to_json(nlohmann::json& j, const UserRecord& r) {
  j = nlohmann::json{
      {"username", r.username}, {"certificate", r.certificate}, {"registered_at", r.registered_at}};
}

void from_json(const nlohmann::json& j, UserRecord& r) {
  r.username = j.at("username").get<std::string>();
  r.certificate = j.at("certificate").get<Certificate>();
  r.registered_at = j.at("registered_at").get<std::int64_t>();
}

namespace detail {

using nlohmann::json;

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::int64_t now_seconds() { return now_ns() / 1'000'000'000; }

std::string nonce_key(const crypto::Nonce& nonce) {
  return {nonce.value.begin(), nonce.value.end()};
}

bool ReplayCache::check_and_insert(const crypto::Nonce& nonce) {
  const auto key = nonce_key(nonce);
  std::lock_guard lock(mu_);
  const auto now = Clock::now();
  if (now - rotated_ >= ttl_) {
    previous_ = std::move(current_);
    current_.clear();
    // A long idle period expires both generations.
    if (now - rotated_ >= 2 * ttl_) previous_.clear();
    rotated_ = now;
  }
  if (previous_.count(key) != 0) return false;
  return current_.insert(key).second;
}

namespace {

void write_private_file(const std::filesystem::path& file, const std::string& text) {
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::internal, "cannot write " + tmp);
    out << text;
  }
  ::chmod(tmp.c_str(), 0600);
  std::filesystem::rename(tmp, file);
}

}  // namespace

UserRegistry::UserRegistry(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto record = json::parse(line).get<UserRecord>();
      users_.emplace(record.username, std::move(record));
    } catch (const std::exception& e) {
      // A torn final line after a crash is skipped; the rest of the file stays usable.
      log::warn("registry", "skipping unreadable user record", {{"line", lineno}, {"error", e.what()}});
    }
  }
}

void UserRegistry::add(const UserRecord& record) {
  std::unique_lock lock(mu_);
  if (users_.count(record.username) != 0)
    fail(ErrorKind::conflict, "username " + record.username + " is already registered");
  std::ofstream out(file_, std::ios::app);
  if (!out) fail(ErrorKind::internal, "cannot open user registry");
  out << json(record).dump() << '\n';
  out.flush();
  if (!out) fail(ErrorKind::internal, "cannot append to user registry");
  users_.emplace(record.username, record);
}

std::optional<UserRecord> UserRegistry::find(const std::string& username) const {
  std::shared_lock lock(mu_);
  auto it = users_.find(username);
  if (it == users_.end()) return std::nullopt;
  return it->second;
}

NodeIdentity load_or_create_identity(const std::filesystem::path& file, const std::string& address) {
  if (std::filesystem::exists(file)) {
    std::ifstream in(file);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) fail(ErrorKind::integrity, "identity file is not JSON");
    NodeIdentity id;
    id.node_address = j.at("node_address").get<std::string>();
    if (id.node_address != address)
      fail(ErrorKind::validation,
           "data directory belongs to node " + id.node_address + ", not " + address);
    id.ca_keypair.private_key = crypto::PrivateKey(from_base64(j.at("private_key").get<std::string>()));
    id.ca_keypair.public_key = id.ca_keypair.private_key.public_key();
    id.node_certificate = j.at("node_certificate").get<Certificate>();
    if (id.node_certificate.subject_public_key != id.ca_keypair.public_key ||
        !verify_self_issued(id.node_certificate))
      fail(ErrorKind::integrity, "identity file holds an inconsistent node certificate");
    return id;
  }
  NodeIdentity id;
  id.node_address = address;
  id.ca_keypair = crypto::generate_keypair();
  id.node_certificate =
      issue_certificate(id.ca_keypair, address, address, id.ca_keypair.public_key, now_seconds());
  json j{{"node_address", address},
         {"private_key", to_base64(id.ca_keypair.private_key.view())},
         {"node_certificate", id.node_certificate}};
  write_private_file(file, j.dump(2));
  return id;
}

Certificate CaDirectory::resolve(const std::string& address) {
  if (address == self_.node_address) return self_;
  {
    std::lock_guard lock(mu_);
    auto it = nodes_.find(address);
    if (it != nodes_.end()) return it->second;
  }
  auto j = net::expect_ok(transport_->get(address, "/healthz"));
  Certificate cert;
  try {
    cert = j.at("node_certificate").get<Certificate>();
  } catch (const std::exception&) {
    fail(ErrorKind::network, "node " + address + " returned no certificate");
  }
  if (cert.node_address != address || cert.username != address || !verify_self_issued(cert))
    fail(ErrorKind::auth, "node " + address + " presented an invalid certificate");
  std::lock_guard lock(mu_);
  return nodes_.emplace(address, cert).first->second;
}

bool CaDirectory::verify_user_certificate(const Certificate& cert) {
  if (cert.node_address.empty()) return false;
  const auto issuer = resolve(cert.node_address);
  return verify_certificate(issuer.subject_public_key, cert);
}

Certificate CaDirectory::fetch_user_certificate(const std::string& username,
                                                const std::string& address) {
  {
    std::lock_guard lock(mu_);
    auto it = users_.find({address, username});
    if (it != users_.end()) return it->second;
  }
  auto j = net::expect_ok(transport_->get(address, "/users/" + username + "/certificate"));
  Certificate cert;
  try {
    cert = j.at("certificate").get<Certificate>();
  } catch (const std::exception&) {
    fail(ErrorKind::network, "node " + address + " returned a malformed certificate");
  }
  if (cert.username != username || cert.node_address != address || !verify_user_certificate(cert))
    fail(ErrorKind::auth, "certificate for " + username + " does not verify under " + address);
  std::lock_guard lock(mu_);
  users_[{address, username}] = cert;
  return cert;
}

void PendingAdds::put(const std::string& requester, const std::string& channel,
                      const Certificate& target) {
  std::lock_guard lock(mu_);
  const auto now = Clock::now();
  std::erase_if(entries_, [&](const auto& e) { return e.second.second <= now; });
  entries_[{requester, channel, digest(target).hex()}] = {target, now + ttl_};
}

std::optional<Certificate> PendingAdds::find(const std::string& requester, const std::string& channel,
                                             const std::string& target_digest) {
  std::lock_guard lock(mu_);
  auto it = entries_.find({requester, channel, target_digest});
  if (it == entries_.end() || it->second.second <= Clock::now()) return std::nullopt;
  return it->second.first;
}

void PendingAdds::erase(const std::string& requester, const std::string& channel,
                        const std::string& target_digest) {
  std::lock_guard lock(mu_);
  entries_.erase({requester, channel, target_digest});
}

net::HttpResponse post_signed(net::Transport& transport, const NodeIdentity& self,
                              const std::string& address, const std::string& path,
                              const json& body) {
  const auto env = make_envelope(self.ca_keypair.private_key, self.node_certificate, body);
  return transport.post(address, path, json(env).dump());
}

}  // namespace detail

NodeConfig apply_config_file(NodeConfig base, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::validation, "cannot read config file " + file.string());
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    const auto e = s.find_last_not_of(" \t\r\"");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::validation, file.string() + ":" + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (key == "address") {
        base.address = value;
      } else if (key == "data_dir") {
        base.data_dir = value;
      } else if (key == "peers") {
        base.peers.clear();
        std::stringstream ss(value);
        for (std::string p; std::getline(ss, p, ',');)
          if (auto t = trim(p); !t.empty()) base.peers.push_back(t);
      } else if (key == "block_interval_ms") {
        base.block_interval = std::chrono::milliseconds(std::stoul(value));
      } else if (key == "max_batch") {
        base.max_batch = std::stoul(value);
      } else if (key == "replay_ttl_s") {
        base.replay_ttl = std::chrono::seconds(std::stol(value));
      } else if (key == "pending_add_ttl_s") {
        base.pending_add_ttl = std::chrono::seconds(std::stol(value));
      } else if (key == "http_threads") {
        base.http_threads = std::stoul(value);
      } else {
        fail(ErrorKind::validation, "unknown config key " + key);
      }
    } catch (const std::logic_error&) {
      fail(ErrorKind::validation, "bad value for " + key + ": " + value);
    }
  }
  return base;
}

}  // namespace quarks::node
