#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "quarks/crypto.hpp"

namespace quarks {

inline constexpr std::size_t max_username_size = 64;

/// Identity credential binding a username and public key to the node that issued it.
/// Node certificates are self-issued and carry the node address as username.
struct Certificate {
  std::string username;
  std::string node_address;
  crypto::PublicKey subject_public_key;
  std::int64_t issued_at = 0;  // UTC seconds
  crypto::Signature issuer_signature;

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

/// Bytes covered by issuer_signature: the length-prefixed fields in declared order.
Bytes signing_bytes(const Certificate& cert);

/// Full canonical form including the signature; identity of a certificate.
Bytes canonical_bytes(const Certificate& cert);

/// Digest of the canonical form. Certificates compare equal iff their digests do.
crypto::Digest digest(const Certificate& cert);

/// Throws a validation error for an empty or oversize username or empty node address.
void validate_fields(const std::string& username, const std::string& node_address);

Certificate issue_certificate(const crypto::KeyPair& ca, std::string username,
                              std::string node_address, const crypto::PublicKey& subject,
                              std::int64_t issued_at);

bool verify_certificate(const crypto::PublicKey& ca_public_key, const Certificate& cert);

/// A node certificate is valid iff it verifies under its own subject key.
bool verify_self_issued(const Certificate& cert);

void to_json(nlohmann::json& j, const Certificate& cert);
void from_json(const nlohmann::json& j, Certificate& cert);

}  // namespace quarks
