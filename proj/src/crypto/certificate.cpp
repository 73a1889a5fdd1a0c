#include "quarks/certificate.hpp"

#include <mutex>
#include <unordered_set>

#include "quarks/error.hpp"

namespace quarks {

namespace {
constexpr std::string_view cert_domain = "quarks/certificate/v1";

// Certificates that verified under a given CA key. Every request re-presents the same few
// certificates, and a successful verification of identical bytes cannot change.
class VerifiedCache {
 public:
  static constexpr std::size_t capacity = 4096;

  bool contains(const std::string& key) {
    std::lock_guard lock(mu_);
    return keys_.count(key) != 0;
  }
  void insert(std::string key) {
    std::lock_guard lock(mu_);
    if (keys_.size() >= capacity) keys_.clear();
    keys_.insert(std::move(key));
  }

 private:
  std::mutex mu_;
  std::unordered_set<std::string> keys_;
};

VerifiedCache& verified_cache() {
  static VerifiedCache cache;
  return cache;
}
}  // namespace

Bytes signing_bytes(const Certificate& cert) {
  CanonicalWriter w;
  w.field(cert_domain)
      .field(cert.username)
      .field(cert.node_address)
      .field(cert.subject_public_key.view())
      .u64(static_cast<std::uint64_t>(cert.issued_at));
  return std::move(w).bytes();
}

Bytes canonical_bytes(const Certificate& cert) {
  CanonicalWriter w;
  w.field(signing_bytes(cert)).field(cert.issuer_signature.view());
  return std::move(w).bytes();
}

crypto::Digest digest(const Certificate& cert) { return crypto::hash(canonical_bytes(cert)); }

void validate_fields(const std::string& username, const std::string& node_address) {
  if (username.empty()) fail(ErrorKind::validation, "username must not be empty");
  if (username.size() > max_username_size)
    fail(ErrorKind::validation, "username exceeds 64 bytes");
  if (node_address.empty()) fail(ErrorKind::validation, "node address must not be empty");
}

Certificate issue_certificate(const crypto::KeyPair& ca, std::string username,
                              std::string node_address, const crypto::PublicKey& subject,
                              std::int64_t issued_at) {
  validate_fields(username, node_address);
  Certificate cert{std::move(username), std::move(node_address), subject, issued_at, {}};
  cert.issuer_signature = crypto::sign(ca.private_key, signing_bytes(cert));
  return cert;
}

bool verify_certificate(const crypto::PublicKey& ca_public_key, const Certificate& cert) {
  if (cert.username.empty() || cert.username.size() > max_username_size ||
      cert.node_address.empty())
    return false;
  const auto message = signing_bytes(cert);
  std::string key(reinterpret_cast<const char*>(ca_public_key.view().data()), ca_public_key.view().size());
  key.append(reinterpret_cast<const char*>(cert.issuer_signature.view().data()), cert.issuer_signature.view().size());
  key.append(reinterpret_cast<const char*>(message.data()), message.size());
  if (verified_cache().contains(key)) return true;
  if (!crypto::verify(ca_public_key, message, cert.issuer_signature)) return false;
  verified_cache().insert(std::move(key));
  return true;
}

bool verify_self_issued(const Certificate& cert) {
  return verify_certificate(cert.subject_public_key, cert);
}

void to_json(nlohmann::json& j, const Certificate& cert) {
  j = nlohmann::json{{"username", cert.username},
                     {"node_address", cert.node_address},
                     {"subject_public_key", to_base64(cert.subject_public_key.view())},
                     {"issued_at", cert.issued_at},
                     {"issuer_signature", to_base64(cert.issuer_signature.view())}};
}

void from_json(const nlohmann::json& j, Certificate& cert) {
  try {
    cert.username = j.at("username").get<std::string>();
    cert.node_address = j.at("node_address").get<std::string>();
    cert.subject_public_key = crypto::PublicKey::from(
        from_base64(j.at("subject_public_key").get<std::string>()), "subject_public_key");
    cert.issued_at = j.at("issued_at").get<std::int64_t>();
    cert.issuer_signature = crypto::Signature::from(
        from_base64(j.at("issuer_signature").get<std::string>()), "issuer_signature");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed certificate: ") + e.what());
  }
}

}  // namespace quarks
