// quarksd: a Quarks node daemon.
#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <sstream>
#include <thread>

#include "quarks/error.hpp"
#include "quarks/log.hpp"
#include "quarks/node.hpp"

namespace {

volatile std::sig_atomic_t stop_requested = 0;
void on_signal(int) { stop_requested = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quarks node daemon"};
  quarks::node::NodeConfig config;
  std::string peers, config_file, data_dir, log_level;
  app.add_option("--address", config.address, "host:port to listen on; also the node's identity");
  app.add_option("--data-dir", data_dir, "directory for identity, users and channel ledgers");
  app.add_option("--peers", peers, "comma-separated addresses of known nodes");
  app.add_option("--config", config_file, "key = value file applied on top of the flags");
  app.add_option("--log-level", log_level, "debug, info, warn, error or off");
  CLI11_PARSE(app, argc, argv);

  try {
    if (!log_level.empty()) quarks::log::set_level(quarks::log::parse_level(log_level));
    config.data_dir = data_dir;
    std::stringstream ss(peers);
    for (std::string p; std::getline(ss, p, ',');)
      if (!p.empty()) config.peers.push_back(p);
    if (!config_file.empty()) config = quarks::node::apply_config_file(std::move(config), config_file);

    quarks::node::Node node(config);
    node.start();
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    node.stop();
    return 0;
  } catch (const quarks::Error& e) {
    quarks::log::error("quarksd", e.what(), {{"kind", quarks::to_string(e.kind())}});
    return quarks::exit_code(e.kind());
  } catch (const std::exception& e) {
    quarks::log::error("quarksd", e.what());
    return 1;
  }
}
