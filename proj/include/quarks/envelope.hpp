#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "quarks/certificate.hpp"
#include "quarks/crypto.hpp"

namespace quarks {

/// Signed, nonce-carrying wrapper around every protocol request and inter-node
/// message. `body` is carried as the exact JSON text that was signed so that
/// verification never depends on a re-serialization.
struct Envelope {
  crypto::Nonce nonce;
  std::optional<Certificate> certificate;  // absent only for registration
  std::string body;
  crypto::Signature signature;

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

/// Bytes covered by an envelope signature: length-prefixed (domain, nonce, body).
Bytes envelope_signing_bytes(const crypto::Nonce& nonce, std::string_view body);

/// Signs `body` under a fresh nonce.
Envelope make_envelope(const crypto::PrivateKey& key, std::optional<Certificate> certificate,
                       const nlohmann::json& body);

bool verify_envelope(const Envelope& envelope, const crypto::PublicKey& key);

/// Bytes covered by a node's response signature: (domain, echoed request nonce, body).
/// The nonce field is empty for responses to unsigned requests.
Bytes response_signing_bytes(ByteView request_nonce, std::string_view body);

/// Parses the body as a JSON object; throws a validation error otherwise.
nlohmann::json parse_body(std::string_view body);

void to_json(nlohmann::json& j, const Envelope& envelope);
void from_json(const nlohmann::json& j, Envelope& envelope);

/// hex(H(digest(creator certificate) || channel_name)).
std::string channel_id_for(const Certificate& creator, std::string_view channel_name);

namespace op {
inline constexpr std::string_view register_user = "register";
inline constexpr std::string_view create_channel = "createChannel";
inline constexpr std::string_view add_node = "addNode";
inline constexpr std::string_view lookup_member = "lookupMember";
inline constexpr std::string_view add_member = "addMember";
inline constexpr std::string_view get_channel_sk = "getChannelSK";
inline constexpr std::string_view send_msg = "sendMsg";
inline constexpr std::string_view read_msg = "readMsg";
}  // namespace op

}  // namespace quarks
