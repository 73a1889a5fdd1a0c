// quarks: command-line client.
#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <thread>

#include "quarks/client.hpp"
#include "quarks/error.hpp"

using namespace quarks;
using nlohmann::json;

namespace {

struct Options {
  std::string node;
  std::string keystore = "quarks-keystore.json";
  std::string channel;
  std::string passphrase;
  std::string kdf = "interactive";
  bool json_output = false;
};

std::string passphrase(Options& o) {
  if (!o.passphrase.empty()) return o.passphrase;
  if (const char* env = std::getenv("QUARKS_PASSPHRASE")) return o.passphrase = env;
  std::cerr << "keystore passphrase: " << std::flush;
  std::getline(std::cin, o.passphrase);
  return o.passphrase;
}

client::KdfParams kdf(const Options& o) {
  if (o.kdf == "minimal") return client::KdfParams::minimal();
  if (o.kdf == "interactive") return client::KdfParams::interactive();
  fail(ErrorKind::validation, "unknown --kdf " + o.kdf);
}

std::unique_ptr<client::Client> open_client(Options& o) {
  auto c = std::make_unique<client::Client>(client::load_keystore(o.keystore, passphrase(o)));
  if (!o.node.empty()) c->set_node(o.node);
  return c;
}

void save(Options& o, const client::Client& c) {
  client::save_keystore(c.keystore(), o.keystore, passphrase(o), kdf(o));
}

const std::string& require_channel(const Options& o) {
  if (o.channel.empty()) fail(ErrorKind::validation, "--channel is required");
  return o.channel;
}

void emit(const Options& o, const json& j, const std::string& text) {
  if (o.json_output)
    std::cout << j.dump() << std::endl;
  else if (!text.empty())
    std::cout << text << std::endl;
}

json message_json(const client::DecryptedMessage& m) {
  return {{"key", m.key},
          {"timestamp", m.ledger_timestamp},
          {"sender", m.sender_username},
          {"sent_at_client", m.sent_at_client},
          {"text", m.plaintext}};
}

std::string message_line(const client::DecryptedMessage& m) {
  return "[" + m.key + "] " + m.sender_username + ": " + m.plaintext;
}

/// Prints a read result; returns the next since-timestamp.
std::int64_t print_read(const Options& o, const client::ReadResult& r, std::int64_t since) {
  std::int64_t next = since;
  json messages = json::array(), failures = json::array();
  for (const auto& m : r.messages) {
    messages.push_back(message_json(m));
    if (!o.json_output) std::cout << message_line(m) << '\n';
    next = std::max(next, m.ledger_timestamp + 1);
  }
  for (const auto& f : r.failures) {
    failures.push_back({{"key", f.key}, {"timestamp", f.ledger_timestamp}, {"reason", f.reason}});
    if (!o.json_output) std::cout << "[" << f.key << "] <undecryptable: " << f.reason << ">\n";
    next = std::max(next, f.ledger_timestamp + 1);
  }
  if (o.json_output)
    std::cout << json{{"messages", messages}, {"failures", failures}, {"next_since", next}}.dump() << '\n';
  std::cout << std::flush;
  return next;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quarks messaging client"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--node", o.node, "node address (defaults to the keystore's home node)");
  app.add_option("--keystore", o.keystore, "keystore file");
  app.add_option("--channel", o.channel, "channel id");
  app.add_option("--passphrase", o.passphrase, "keystore passphrase (or QUARKS_PASSPHRASE)");
  app.add_option("--kdf", o.kdf, "keystore KDF cost: interactive or minimal");
  app.add_flag("--json", o.json_output, "machine-readable output");

  std::string username;
  auto* keygen = app.add_subcommand("keygen", "create a keystore with a fresh key pair");
  keygen->add_option("--username", username)->required();
  auto* reg = app.add_subcommand("register", "register the keystore's user with its home node");

  auto* channel = app.add_subcommand("channel", "channel management");
  channel->require_subcommand(1);
  std::string channel_name, node_address, member, member_node;
  auto* create = channel->add_subcommand("create", "create a channel");
  create->add_option("name", channel_name)->required();
  auto* add_node = channel->add_subcommand("add-node", "federate another node into the channel");
  add_node->add_option("address", node_address)->required();
  auto* add_member = channel->add_subcommand("add-member", "add a user to the channel");
  add_member->add_option("username", member)->required();
  add_member->add_option("user_node", member_node)->required();

  auto* key = app.add_subcommand("key", "channel key operations");
  key->require_subcommand(1);
  auto* fetch = key->add_subcommand("fetch", "fetch and open the channel key");

  std::string text;
  auto* send = app.add_subcommand("send", "send a message");
  send->add_option("text", text)->required();

  std::int64_t since = 0;
  auto* read = app.add_subcommand("read", "read messages");
  read->add_option("--since", since, "ledger timestamp (ns) to read from");

  double interval = 2.0;
  int max_polls = 0;
  auto* watch = app.add_subcommand("watch", "poll for new messages");
  watch->add_option("--since", since);
  watch->add_option("--interval", interval, "seconds between polls");
  watch->add_option("--max-polls", max_polls, "stop after this many polls (0 = forever)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*keygen) {
      if (o.node.empty()) fail(ErrorKind::validation, "--node is required for keygen");
      auto ks = client::new_keystore(username, o.node);
      client::save_keystore(ks, o.keystore, passphrase(o), kdf(o));
      emit(o, {{"username", ks.username}, {"public_key", to_base64(ks.keypair.public_key.view())}},
           "keystore written to " + o.keystore);
    } else if (*reg) {
      auto c_ptr = open_client(o);
      auto& c = *c_ptr;
      c.register_user();
      save(o, c);
      const auto cert = *c.keystore().certificate;
      emit(o, {{"certificate", cert}}, "registered " + cert.username + " at " + cert.node_address);
    } else if (*create) {
      auto c_ptr = open_client(o);
      auto& c = *c_ptr;
      const auto id = c.create_channel(channel_name);
      save(o, c);
      emit(o, {{"channel_id", id}}, id);
    } else if (*add_node) {
      auto c_ptr = open_client(o);
      auto& c = *c_ptr;
      c.add_node(require_channel(o), node_address);
      emit(o, {{"success", true}}, "node " + node_address + " added");
    } else if (*add_member) {
      auto c_ptr = open_client(o);
      auto& c = *c_ptr;
      c.add_member(require_channel(o), member, member_node);
      emit(o, {{"success", true}}, "member " + member + " added");
    } else if (*fetch) {
      auto c_ptr = open_client(o);
      auto& c = *c_ptr;
      c.get_channel_key(require_channel(o));
      save(o, c);
      emit(o, {{"success", true}}, "channel key stored");
    } else if (*send) {
      auto c_ptr = open_client(o);
      auto& c = *c_ptr;
      auto r = c.send(require_channel(o), text);
      emit(o, {{"timestamp", r.timestamp}, {"key", r.key}}, r.key);
    } else if (*read) {
      auto c_ptr = open_client(o);
      auto& c = *c_ptr;
      print_read(o, c.read(require_channel(o), since), since);
    } else if (*watch) {
      auto c_ptr = open_client(o);
      auto& c = *c_ptr;
      const auto& id = require_channel(o);
      for (int polls = 0; max_polls == 0 || polls < max_polls; ++polls) {
        if (polls > 0) std::this_thread::sleep_for(std::chrono::duration<double>(interval));
        since = print_read(o, c.read(id, since), since);
      }
    }
    return 0;
  } catch (const Error& e) {
    if (o.json_output)
      std::cout << json{{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}}.dump() << std::endl;
    else
      std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << std::endl;
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
