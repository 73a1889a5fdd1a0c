#include "quarks/crypto.hpp"

#include <mutex>

#include <sodium.h>

#include "quarks/error.hpp"

namespace quarks::crypto {

static_assert(crypto_sign_PUBLICKEYBYTES == public_key_size);
static_assert(crypto_sign_SECRETKEYBYTES == private_key_size);
static_assert(crypto_sign_BYTES == signature_size);
static_assert(crypto_hash_sha256_BYTES == digest_size);
static_assert(crypto_aead_chacha20poly1305_ietf_KEYBYTES == secret_key_size);

void ensure_initialized() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error(ErrorKind::internal, "libsodium initialization failed");
  });
}

template <std::size_t N, typename Tag>
FixedBytes<N, Tag> FixedBytes<N, Tag>::from(ByteView data, std::string_view what) {
  if (data.size() != N)
    fail(ErrorKind::validation, std::string(what) + " must be " + std::to_string(N) + " bytes, got " +
                                    std::to_string(data.size()));
  FixedBytes out;
  std::copy(data.begin(), data.end(), out.value.begin());
  return out;
}

template struct FixedBytes<public_key_size, PublicKeyTag>;
template struct FixedBytes<signature_size, SignatureTag>;
template struct FixedBytes<digest_size, DigestTag>;
template struct FixedBytes<nonce_size, NonceTag>;

PrivateKey::PrivateKey(ByteView data) {
  if (data.size() != private_key_size)
    fail(ErrorKind::validation, "private key must be 64 bytes");
  std::copy(data.begin(), data.end(), value_.begin());
}

PrivateKey::~PrivateKey() { sodium_memzero(value_.data(), value_.size()); }

PublicKey PrivateKey::public_key() const {
  PublicKey pk;
  crypto_sign_ed25519_sk_to_pk(pk.value.data(), value_.data());
  return pk;
}

ChannelSecret::ChannelSecret(ByteView data) {
  if (data.size() != secret_key_size) fail(ErrorKind::validation, "channel secret must be 32 bytes");
  std::copy(data.begin(), data.end(), key_.begin());
}

ChannelSecret::~ChannelSecret() { sodium_memzero(key_.data(), key_.size()); }

ChannelSecret ChannelSecret::generate() {
  ensure_initialized();
  ChannelSecret secret;
  crypto_aead_chacha20poly1305_ietf_keygen(secret.key_.data());
  return secret;
}

KeyPair generate_keypair() {
  ensure_initialized();
  KeyPair kp;
  std::array<std::uint8_t, private_key_size> sk{};
  crypto_sign_keypair(kp.public_key.value.data(), sk.data());
  kp.private_key = PrivateKey(ByteView{sk.data(), sk.size()});
  sodium_memzero(sk.data(), sk.size());
  return kp;
}

Signature sign(const PrivateKey& key, ByteView message) {
  ensure_initialized();
  Signature sig;
  crypto_sign_detached(sig.value.data(), nullptr, message.data(), message.size(), key.view().data());
  return sig;
}

bool verify(ByteView public_key, ByteView message, ByteView signature) {
  ensure_initialized();
  if (public_key.size() != public_key_size || signature.size() != signature_size) return false;
  return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                     public_key.data()) == 0;
}

Bytes seal_to_public_key(const PublicKey& recipient, ByteView plaintext) {
  ensure_initialized();
  if (plaintext.size() > max_sealed_plaintext)
    fail(ErrorKind::validation, "sealed plaintext exceeds 1 KiB");
  std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> curve_pk{};
  if (crypto_sign_ed25519_pk_to_curve25519(curve_pk.data(), recipient.value.data()) != 0)
    fail(ErrorKind::validation, "public key is not a valid Ed25519 point");
  Bytes sealed(plaintext.size() + crypto_box_SEALBYTES);
  crypto_box_seal(sealed.data(), plaintext.data(), plaintext.size(), curve_pk.data());
  return sealed;
}

Bytes open_with_private_key(const PrivateKey& key, ByteView sealed) {
  ensure_initialized();
  if (sealed.size() < crypto_box_SEALBYTES) fail(ErrorKind::crypto, "sealed blob too short");
  std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> curve_sk{};
  std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> curve_pk{};
  const auto pk = key.public_key();
  crypto_sign_ed25519_sk_to_curve25519(curve_sk.data(), key.view().data());
  if (crypto_sign_ed25519_pk_to_curve25519(curve_pk.data(), pk.value.data()) != 0) {
    sodium_memzero(curve_sk.data(), curve_sk.size());
    fail(ErrorKind::crypto, "private key has no valid X25519 counterpart");
  }
  Bytes plain(sealed.size() - crypto_box_SEALBYTES);
  const int rc =
      crypto_box_seal_open(plain.data(), sealed.data(), sealed.size(), curve_pk.data(), curve_sk.data());
  sodium_memzero(curve_sk.data(), curve_sk.size());
  if (rc != 0) fail(ErrorKind::crypto, "sealed blob failed authentication");
  return plain;
}

Bytes encrypt_message(const ChannelSecret& secret, ByteView plaintext) {
  ensure_initialized();
  if (plaintext.size() > max_message_plaintext)
    fail(ErrorKind::validation, "message plaintext exceeds 64 KiB");
  constexpr auto npub = crypto_aead_chacha20poly1305_ietf_NPUBBYTES;
  Bytes out(npub + plaintext.size() + crypto_aead_chacha20poly1305_ietf_ABYTES);
  randombytes_buf(out.data(), npub);
  unsigned long long written = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(out.data() + npub, &written, plaintext.data(),
                                            plaintext.size(), nullptr, 0, nullptr, out.data(),
                                            secret.view().data());
  out.resize(npub + written);
  return out;
}

Bytes decrypt_message(const ChannelSecret& secret, ByteView ciphertext) {
  ensure_initialized();
  constexpr auto npub = crypto_aead_chacha20poly1305_ietf_NPUBBYTES;
  constexpr auto tag = crypto_aead_chacha20poly1305_ietf_ABYTES;
  if (ciphertext.size() < npub + tag) fail(ErrorKind::crypto, "ciphertext too short");
  Bytes plain(ciphertext.size() - npub - tag);
  unsigned long long written = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(plain.data(), &written, nullptr,
                                                ciphertext.data() + npub, ciphertext.size() - npub,
                                                nullptr, 0, ciphertext.data(),
                                                secret.view().data()) != 0)
    fail(ErrorKind::crypto, "message failed authentication");
  plain.resize(written);
  return plain;
}

Nonce fresh_nonce() {
  Nonce n;
  random_bytes(n.value);
  return n;
}

Digest hash(ByteView data) {
  ensure_initialized();
  Digest d;
  crypto_hash_sha256(d.value.data(), data.data(), data.size());
  return d;
}

void random_bytes(std::span<std::uint8_t> out) {
  ensure_initialized();
  randombytes_buf(out.data(), out.size());
}

}  // namespace quarks::crypto
