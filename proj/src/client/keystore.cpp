#include <sodium.h>
#include <sys/stat.h>

#include <fstream>

#include "quarks/client.hpp"
#include "quarks/error.hpp"

namespace quarks::client {

using nlohmann::json;

namespace {

constexpr int keystore_version = 1;

crypto::ChannelSecret derive_key(std::string_view passphrase, ByteView salt, const KdfParams& kdf) {
  crypto::ensure_initialized();
  std::array<std::uint8_t, crypto::secret_key_size> key{};
  if (crypto_pwhash(key.data(), key.size(), passphrase.data(), passphrase.size(), salt.data(),
                    kdf.opslimit, kdf.memlimit, crypto_pwhash_ALG_ARGON2ID13) != 0)
    fail(ErrorKind::internal, "key derivation ran out of memory");
  crypto::ChannelSecret out{ByteView(key.data(), key.size())};
  sodium_memzero(key.data(), key.size());
  return out;
}

}  // namespace

KdfParams KdfParams::interactive() {
  return {crypto_pwhash_OPSLIMIT_INTERACTIVE, crypto_pwhash_MEMLIMIT_INTERACTIVE};
}

KdfParams KdfParams::minimal() { return {crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN}; }

ClientKeystore new_keystore(std::string username, std::string node_address) {
  validate_fields(username, node_address);
  ClientKeystore ks;
  ks.username = std::move(username);
  ks.home_node_address = std::move(node_address);
  ks.keypair = crypto::generate_keypair();
  return ks;
}

void save_keystore(const ClientKeystore& ks, const std::filesystem::path& file, std::string_view passphrase,
                   KdfParams kdf) {
  if (passphrase.empty()) fail(ErrorKind::validation, "a passphrase is required to store the keystore");
  Bytes salt(crypto_pwhash_SALTBYTES);
  crypto::random_bytes(salt);
  const auto key = derive_key(passphrase, salt, kdf);

  json secret{{"private_key", to_base64(ks.keypair.private_key.view())}, {"channel_keys", json::object()}};
  for (const auto& [id, sk] : ks.channel_keys) secret["channel_keys"][id] = to_base64(sk.view());
  auto plain = secret.dump();
  const auto sealed = crypto::encrypt_message(key, as_bytes(plain));
  sodium_memzero(plain.data(), plain.size());

  json j{{"version", keystore_version},
         {"username", ks.username},
         {"home_node_address", ks.home_node_address},
         {"public_key", to_base64(ks.keypair.public_key.view())},
         {"certificate", ks.certificate ? json(*ks.certificate) : json(nullptr)},
         {"node_certificate", ks.node_certificate ? json(*ks.node_certificate) : json(nullptr)},
         {"kdf",
          {{"alg", "argon2id13"}, {"salt", to_base64(salt)}, {"opslimit", kdf.opslimit}, {"memlimit", kdf.memlimit}}},
         {"secret", to_base64(sealed)}};

  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::validation, "cannot write keystore " + tmp);
    ::chmod(tmp.c_str(), 0600);
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorKind::internal, "failed writing keystore");
  }
  std::filesystem::rename(tmp, file);
}

ClientKeystore load_keystore(const std::filesystem::path& file, std::string_view passphrase) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::not_found, "keystore " + file.string() + " does not exist");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("version", 0) != keystore_version)
    fail(ErrorKind::validation, "unrecognized keystore format");
  try {
    ClientKeystore ks;
    ks.username = j.at("username").get<std::string>();
    ks.home_node_address = j.at("home_node_address").get<std::string>();
    if (!j.at("certificate").is_null()) ks.certificate = j["certificate"].get<Certificate>();
    if (!j.at("node_certificate").is_null()) ks.node_certificate = j["node_certificate"].get<Certificate>();
    const auto& kdf = j.at("kdf");
    const auto salt = from_base64(kdf.at("salt").get<std::string>());
    if (salt.size() != crypto_pwhash_SALTBYTES) fail(ErrorKind::validation, "bad keystore salt");
    const auto key = derive_key(passphrase, salt,
                                {kdf.at("opslimit").get<std::uint64_t>(), kdf.at("memlimit").get<std::size_t>()});
    Bytes plain;
    try {
      plain = crypto::decrypt_message(key, from_base64(j.at("secret").get<std::string>()));
    } catch (const Error&) {
      fail(ErrorKind::crypto, "wrong passphrase or corrupted keystore");
    }
    json secret = json::parse(plain.begin(), plain.end());
    sodium_memzero(plain.data(), plain.size());
    ks.keypair.private_key = crypto::PrivateKey(from_base64(secret.at("private_key").get<std::string>()));
    ks.keypair.public_key = ks.keypair.private_key.public_key();
    if (to_base64(ks.keypair.public_key.view()) != j.at("public_key").get<std::string>())
      fail(ErrorKind::integrity, "keystore public key does not match its private key");
    for (const auto& [id, v] : secret.at("channel_keys").items())
      ks.channel_keys.emplace(id, crypto::ChannelSecret(from_base64(v.get<std::string>())));
    return ks;
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed keystore: ") + e.what());
  }
}

}  // namespace quarks::client
