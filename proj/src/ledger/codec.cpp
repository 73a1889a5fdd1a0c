#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "quarks/error.hpp"
#include "quarks/ledger.hpp"

namespace quarks::ledger {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename Fixed>
Fixed fixed_from_json(const json& j, const char* key) {
  return Fixed::from(from_base64(j.at(key).get<std::string>()), key);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::integrity, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::internal, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorKind::internal, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

void to_json(json& j, const Transaction& tx) {
  json args = json::array();
  for (const auto& a : tx.args) args.push_back(to_base64(a));
  j = json{{"tx_id", to_base64(tx.tx_id.view())},
           {"function_name", tx.function_name},
           {"args", std::move(args)},
           {"submitter_certificate", tx.submitter_certificate},
           {"submitter_node_certificate", tx.submitter_node_certificate},
           {"nonce", to_base64(tx.nonce.view())},
           {"recorded_at", tx.recorded_at},
           {"submitter_signature", to_base64(tx.submitter_signature.view())}};
}

void from_json(const json& j, Transaction& tx) {
  try {
    tx.tx_id = fixed_from_json<crypto::Digest>(j, "tx_id");
    tx.function_name = j.at("function_name").get<std::string>();
    tx.args.clear();
    for (const auto& a : j.at("args")) tx.args.push_back(from_base64(a.get<std::string>()));
    tx.submitter_certificate = j.at("submitter_certificate").get<Certificate>();
    tx.submitter_node_certificate = j.at("submitter_node_certificate").get<Certificate>();
    tx.nonce = fixed_from_json<crypto::Nonce>(j, "nonce");
    tx.recorded_at = j.at("recorded_at").get<std::int64_t>();
    tx.submitter_signature = fixed_from_json<crypto::Signature>(j, "submitter_signature");
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed transaction: ") + e.what());
  }
}

void to_json(json& j, const Block& block) {
  j = json{{"height", block.height},
           {"prev_hash", to_base64(block.prev_hash.view())},
           {"transactions", block.transactions},
           {"block_hash", to_base64(block.block_hash.view())}};
}

void from_json(const json& j, Block& block) {
  try {
    block.height = j.at("height").get<std::uint64_t>();
    block.prev_hash = fixed_from_json<crypto::Digest>(j, "prev_hash");
    block.transactions = j.at("transactions").get<std::vector<Transaction>>();
    block.block_hash = fixed_from_json<crypto::Digest>(j, "block_hash");
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed block: ") + e.what());
  }
}

void to_json(json& j, const LedgerSnapshot& snapshot) {
  j = json{{"channel_id", snapshot.channel_id}, {"blocks", snapshot.blocks}};
}

void from_json(const json& j, LedgerSnapshot& snapshot) {
  try {
    snapshot.channel_id = j.at("channel_id").get<std::string>();
    snapshot.blocks = j.at("blocks").get<std::vector<Block>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed snapshot: ") + e.what());
  }
}

std::string encode_block(const Block& block) { return json(block).dump(); }

Block decode_block(std::string_view text) {
  Block block;
  try {
    block = json::parse(text).get<Block>();
  } catch (const json::exception& e) {
    fail(ErrorKind::integrity, std::string("unparseable block: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::integrity, e.what());
  }
  if (encode_block(block) != text) fail(ErrorKind::integrity, "block file is not in canonical form");
  return block;
}

// ---- LedgerDirectory ------------------------------------------------------

fs::path LedgerDirectory::block_path(std::uint64_t height) const {
  char name[32];
  std::snprintf(name, sizeof name, "%010llu.json", static_cast<unsigned long long>(height));
  return root_ / "blocks" / name;
}

void LedgerDirectory::write_block(const Block& block) const {
  fs::create_directories(root_ / "blocks");
  write_file_atomic(block_path(block.height), encode_block(block));
}

void LedgerDirectory::write_state(const StateStore& state) const {
  fs::create_directories(root_);
  json entries = json::object();
  for (const auto& [key, value] : state.entries()) entries[key] = to_base64(value);
  write_file_atomic(root_ / "state.json", entries.dump());
}

void LedgerDirectory::write_all(const std::vector<Block>& blocks) const {
  std::error_code ec;
  fs::remove_all(root_ / "blocks", ec);
  for (const auto& b : blocks) write_block(b);
}

std::vector<Block> LedgerDirectory::load_blocks() const {
  std::vector<fs::path> files;
  const auto dir = root_ / "blocks";
  if (!fs::exists(dir)) return {};
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Block> blocks;
  blocks.reserve(files.size());
  for (const auto& f : files) {
    auto block = decode_block(read_file(f));
    if (f.filename() != block_path(block.height).filename())
      fail(ErrorKind::integrity, "block file name does not match its height: " + f.string());
    blocks.push_back(std::move(block));
  }
  return blocks;
}

bool verify_persisted(const LedgerDirectory& dir, const std::string& channel_id,
                      const Applier& applier) {
  try {
    auto ledger = Ledger::from_blocks(channel_id, dir.load_blocks(), applier);
    return ledger.verify_chain();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace quarks::ledger
