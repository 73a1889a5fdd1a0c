#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "quarks/certificate.hpp"
#include "quarks/crypto.hpp"
#include "quarks/transport.hpp"

namespace quarks::client {

inline constexpr std::size_t max_plaintext_size = 60 * 1024;

/// The user's wallet: identity keys, issued certificate and cached channel secrets.
struct ClientKeystore {
  std::string username;
  std::string home_node_address;
  crypto::KeyPair keypair;
  std::optional<Certificate> certificate;
  /// Home node certificate, pinned at registration; used to check response signatures.
  std::optional<Certificate> node_certificate;
  std::map<std::string, crypto::ChannelSecret> channel_keys;
};

/// Argon2id cost parameters for the keystore passphrase.
struct KdfParams {
  std::uint64_t opslimit;
  std::size_t memlimit;

  static KdfParams interactive();
  /// Cheapest accepted setting; for tests and simulated users only.
  static KdfParams minimal();
};

/// Writes the keystore as JSON with the private key and channel secrets encrypted
/// under a passphrase-derived key. The file is created with owner-only permissions.
void save_keystore(const ClientKeystore& keystore, const std::filesystem::path& file,
                   std::string_view passphrase, KdfParams kdf = KdfParams::interactive());

/// Throws ErrorKind::crypto on a wrong passphrase or a modified file.
ClientKeystore load_keystore(const std::filesystem::path& file, std::string_view passphrase);

/// Fresh key pair for `username` homed at `node_address`; not yet registered.
ClientKeystore new_keystore(std::string username, std::string node_address);

struct DecryptedMessage {
  std::string channel_id;
  std::string key;
  std::int64_t ledger_timestamp = 0;
  std::string sender_username;
  std::int64_t sent_at_client = 0;
  std::string plaintext;
};

struct UndecryptableMessage {
  std::string key;
  std::int64_t ledger_timestamp = 0;
  std::string reason;
};

struct ReadResult {
  std::vector<DecryptedMessage> messages;
  std::vector<UndecryptableMessage> failures;
  std::int64_t node_time = 0;  // exclusive upper bound used by the node
};

struct SendResult {
  std::int64_t timestamp = 0;
  std::string key;
};

/// One user's side of the protocol. Operations on one client are serialized.
class Client {
 public:
  explicit Client(ClientKeystore keystore,
                  std::shared_ptr<net::Transport> transport = net::make_http_transport());

  ClientKeystore keystore() const;
  const std::string& username() const { return username_; }

  /// Talk to `address` instead of the home node (responses are then not signature-checked
  /// unless the address is the home node).
  void set_node(std::string address);
  const std::string& node() const { return node_; }

  void register_user();
  std::string create_channel(const std::string& channel_name);
  void add_node(const std::string& channel_id, const std::string& node_address);
  void add_member(const std::string& channel_id, const std::string& username,
                  const std::string& user_node_address);
  void get_channel_key(const std::string& channel_id);
  SendResult send(const std::string& channel_id, const std::string& plaintext);
  ReadResult read(const std::string& channel_id, std::int64_t since_ts);

  bool has_channel_key(const std::string& channel_id) const;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);
  nlohmann::json exchange(const net::HttpResponse& response, const crypto::Nonce& nonce);
  const crypto::ChannelSecret& secret_for(const std::string& channel_id) const;
  const Certificate& certificate() const;

  mutable std::mutex mu_;
  ClientKeystore ks_;
  std::string username_;
  std::string node_;
  std::shared_ptr<net::Transport> transport_;
};

/// Generates keys and registers with the node.
ClientKeystore keygen_and_register(const std::string& node_address, const std::string& username,
                                   std::shared_ptr<net::Transport> transport = net::make_http_transport());

/// Plaintext envelope encrypted as a unit: {sender_username, sent_at_client, text}.
std::string encode_plaintext(const std::string& sender, std::int64_t sent_at, const std::string& text);

}  // namespace quarks::client
