#include "quarks/envelope.hpp"

#include "quarks/error.hpp"

namespace quarks {

using nlohmann::json;

namespace {
constexpr std::string_view envelope_domain = "quarks/envelope/v1";
constexpr std::string_view response_domain = "quarks/response/v1";
}

Bytes envelope_signing_bytes(const crypto::Nonce& nonce, std::string_view body) {
  CanonicalWriter w;
  w.field(envelope_domain).field(nonce.view()).field(body);
  return std::move(w).bytes();
}

Bytes response_signing_bytes(ByteView request_nonce, std::string_view body) {
  CanonicalWriter w;
  w.field(response_domain).field(request_nonce).field(body);
  return std::move(w).bytes();
}

Envelope make_envelope(const crypto::PrivateKey& key, std::optional<Certificate> certificate,
                       const json& body) {
  Envelope env;
  env.nonce = crypto::fresh_nonce();
  env.certificate = std::move(certificate);
  env.body = body.dump();
  env.signature = crypto::sign(key, envelope_signing_bytes(env.nonce, env.body));
  return env;
}

bool verify_envelope(const Envelope& envelope, const crypto::PublicKey& key) {
  return crypto::verify(key, envelope_signing_bytes(envelope.nonce, envelope.body),
                        envelope.signature);
}

json parse_body(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorKind::validation, "request body is not a JSON object");
  return j;
}

void to_json(json& j, const Envelope& envelope) {
  j = json{{"nonce", to_base64(envelope.nonce.view())},
           {"certificate", envelope.certificate ? json(*envelope.certificate) : json(nullptr)},
           {"body", envelope.body},
           {"signature", to_base64(envelope.signature.view())}};
}

void from_json(const json& j, Envelope& envelope) {
  try {
    envelope.nonce = crypto::Nonce::from(from_base64(j.at("nonce").get<std::string>()), "nonce");
    const auto& cert = j.at("certificate");
    envelope.certificate =
        cert.is_null() ? std::nullopt : std::optional<Certificate>(cert.get<Certificate>());
    envelope.body = j.at("body").get<std::string>();
    envelope.signature =
        crypto::Signature::from(from_base64(j.at("signature").get<std::string>()), "signature");
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed envelope: ") + e.what());
  }
}

std::string channel_id_for(const Certificate& creator, std::string_view channel_name) {
  Bytes input;
  const auto d = digest(creator);
  input.insert(input.end(), d.value.begin(), d.value.end());
  input.insert(input.end(), channel_name.begin(), channel_name.end());
  return crypto::hash(input).hex();
}

}  // namespace quarks
