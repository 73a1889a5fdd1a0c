#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "quarks/bytes.hpp"

namespace quarks::crypto {

inline constexpr std::size_t public_key_size = 32;
inline constexpr std::size_t private_key_size = 64;
inline constexpr std::size_t signature_size = 64;
inline constexpr std::size_t digest_size = 32;
inline constexpr std::size_t nonce_size = 16;
inline constexpr std::size_t secret_key_size = 32;
inline constexpr std::size_t max_sealed_plaintext = 1024;
inline constexpr std::size_t max_message_plaintext = 64 * 1024;

/// Initializes libsodium once; safe to call from every thread.
void ensure_initialized();

template <std::size_t N, typename Tag>
struct FixedBytes {
  static constexpr std::size_t size = N;
  std::array<std::uint8_t, N> value{};

  ByteView view() const { return {value.data(), value.size()}; }
  std::string hex() const { return to_hex(view()); }

  /// Throws a validation error when `data` has the wrong length.
  static FixedBytes from(ByteView data, std::string_view what = "value");

  friend auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
};

struct PublicKeyTag {};
struct SignatureTag {};
struct DigestTag {};
struct NonceTag {};

using PublicKey = FixedBytes<public_key_size, PublicKeyTag>;
using Signature = FixedBytes<signature_size, SignatureTag>;
using Digest = FixedBytes<digest_size, DigestTag>;
using Nonce = FixedBytes<nonce_size, NonceTag>;

/// Ed25519 secret key (seed || public key). Wiped on destruction.
class PrivateKey {
 public:
  PrivateKey() = default;
  explicit PrivateKey(ByteView data);
  PrivateKey(const PrivateKey&) = default;
  PrivateKey& operator=(const PrivateKey&) = default;
  ~PrivateKey();

  ByteView view() const { return {value_.data(), value_.size()}; }
  PublicKey public_key() const;

 private:
  std::array<std::uint8_t, private_key_size> value_{};
};

/// Channel secret (SK_H). Wiped on destruction; never has a JSON representation.
class ChannelSecret {
 public:
  ChannelSecret() = default;
  explicit ChannelSecret(ByteView data);
  ChannelSecret(const ChannelSecret&) = default;
  ChannelSecret& operator=(const ChannelSecret&) = default;
  ~ChannelSecret();

  static ChannelSecret generate();

  ByteView view() const { return {key_.data(), key_.size()}; }
  friend bool operator==(const ChannelSecret&, const ChannelSecret&) = default;

 private:
  std::array<std::uint8_t, secret_key_size> key_{};
};

/// A single Ed25519 identity used for both signing and (via the birational
/// map to X25519) receiving sealed channel secrets.
struct KeyPair {
  PublicKey public_key;
  PrivateKey private_key;
};

KeyPair generate_keypair();

Signature sign(const PrivateKey& key, ByteView message);

/// Never throws; malformed keys or signatures simply fail to verify.
bool verify(ByteView public_key, ByteView message, ByteView signature);
inline bool verify(const PublicKey& key, ByteView message, const Signature& sig) {
  return verify(key.view(), message, sig.view());
}

/// Anonymous sealing to an Ed25519 public key (X25519 + XSalsa20-Poly1305 sealed box).
Bytes seal_to_public_key(const PublicKey& recipient, ByteView plaintext);
/// Throws ErrorKind::crypto when the blob was not sealed to this key or was modified.
Bytes open_with_private_key(const PrivateKey& key, ByteView sealed);

/// ChaCha20-Poly1305 (IETF) with a random 12-byte nonce prefixed to the output.
Bytes encrypt_message(const ChannelSecret& secret, ByteView plaintext);
Bytes decrypt_message(const ChannelSecret& secret, ByteView ciphertext);

Nonce fresh_nonce();

/// SHA-256.
Digest hash(ByteView data);

void random_bytes(std::span<std::uint8_t> out);

}  // namespace quarks::crypto
