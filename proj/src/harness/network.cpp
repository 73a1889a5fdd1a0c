#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <thread>

#include "quarks/error.hpp"
#include "quarks/harness.hpp"

namespace quarks::harness {

std::uint16_t free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) fail(ErrorKind::unavailable, "cannot create socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  socklen_t len = sizeof addr;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    ::close(fd);
    fail(ErrorKind::unavailable, "cannot allocate a port");
  }
  ::close(fd);
  return ntohs(addr.sin_port);
}

Network::Network(std::size_t node_count, NetworkOptions options) {
  if (node_count == 0) fail(ErrorKind::validation, "a network needs at least one node");
  root_ = options.root;
  if (root_.empty()) {
    auto tmpl = (std::filesystem::temp_directory_path() / "quarks-net-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) fail(ErrorKind::internal, "cannot create a temporary directory");
    root_ = tmpl;
    owns_root_ = true;
  }
  for (std::size_t i = 0; i < node_count; ++i) {
    for (int attempt = 0;; ++attempt) {
      node::NodeConfig config;
      config.address = "127.0.0.1:" + std::to_string(free_port());
      config.data_dir = root_ / ("node" + std::to_string(i));
      config.transport = options.node_transport;
      config.http_threads = options.http_threads;
      std::filesystem::remove_all(config.data_dir);
      try {
        auto n = std::make_unique<node::Node>(config);
        n->start();
        addresses_.push_back(config.address);
        nodes_.push_back(std::move(n));
        break;
      } catch (const Error& e) {
        // Another process can grab the port between probing and binding.
        if (e.kind() != ErrorKind::unavailable || attempt >= 5) throw;
      }
    }
  }
}

Network::~Network() {
  shutdown();
  nodes_.clear();
  if (owns_root_) {
    std::error_code ec;
    std::filesystem::remove_all(root_, ec);
  }
}

void Network::kill(std::size_t i) { nodes_.at(i)->stop(); }
bool Network::alive(std::size_t i) const { return nodes_.at(i)->running(); }

void Network::shutdown() {
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)->stop();
}

std::unique_ptr<Network> spawn_network(std::size_t node_count, NetworkOptions options) {
  return std::make_unique<Network>(node_count, std::move(options));
}

namespace {

std::shared_ptr<net::Transport> user_transport() {
  return net::make_http_transport({std::chrono::milliseconds(2000), std::chrono::milliseconds(10000),
                                   std::chrono::milliseconds(10000)});
}

}  // namespace

SharedChannel setup_channel(Network& network, const std::string& name) {
  auto transport = user_transport();
  auto owner = std::make_unique<client::Client>(
      client::keygen_and_register(network.address(0), "owner-" + name, transport), transport);
  SharedChannel channel{owner->create_channel(name), nullptr, {}};
  for (std::size_t i = 1; i < network.size(); ++i) owner->add_node(channel.id, network.address(i));
  channel.owner = std::move(owner);
  return channel;
}

std::unique_ptr<client::Client> join_user(Network& network, SharedChannel& channel,
                                          const std::string& username, std::size_t home) {
  auto transport = user_transport();
  auto user = std::make_unique<client::Client>(
      client::keygen_and_register(network.address(home), username, transport), transport);
  channel.owner->add_member(channel.id, username, network.address(home));
  user->get_channel_key(channel.id);
  return user;
}

ReplicaCheck check_replicas(Network& network, const std::string& channel_id, std::chrono::milliseconds wait) {
  const auto deadline = std::chrono::steady_clock::now() + wait;
  for (;;) {
    ReplicaCheck r{true, ""};
    std::optional<node::ChannelStatus> first;
    for (std::size_t i = 0; i < network.size(); ++i) {
      if (!network.alive(i)) continue;
      auto& n = network.node(i);
      auto status = n.channel_status(channel_id);
      if (!status) {
        r = {false, network.address(i) + " does not host the channel"};
        break;
      }
      if (!n.verify_channel(channel_id)) return {false, network.address(i) + " fails chain verification"};
      if (!first) {
        first = status;
      } else if (status->head_hash != first->head_hash) {
        r = {false, network.address(i) + " at height " + std::to_string(status->height) + ", expected " +
                        std::to_string(first->height)};
        break;
      }
    }
    if (r.consistent) {
      r.detail = first ? "heads equal at height " + std::to_string(first->height) : "no live replicas";
      r.consistent = first.has_value();
      return r;
    }
    if (std::chrono::steady_clock::now() >= deadline) return r;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

nlohmann::json endpoint_list(const Network& network, const std::string& channel_id) {
  const std::string ch = "/channels/" + channel_id;
  const nlohmann::json endpoints = nlohmann::json::array({
      {{"method", "GET"}, {"path", "/healthz"}},
      {{"method", "POST"}, {"path", "/register"}},
      {{"method", "GET"}, {"path", "/users/{username}/certificate"}},
      {{"method", "POST"}, {"path", "/channels"}},
      {{"method", "POST"}, {"path", ch + "/nodes"}},
      {{"method", "POST"}, {"path", ch + "/members"}},
      {{"method", "POST"}, {"path", ch + "/key"}},
      {{"method", "POST"}, {"path", ch + "/messages"}},
      {{"method", "GET"}, {"path", ch + "/messages?ts={ns}"}},
  });
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& a : network.addresses()) nodes.push_back({{"base_url", "http://" + a}, {"endpoints", endpoints}});
  return {{"channel_id", channel_id}, {"nodes", nodes}};
}

}  // namespace quarks::harness
