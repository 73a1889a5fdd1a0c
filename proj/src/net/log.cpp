#include "quarks/log.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace quarks::log {

namespace {

Level initial_level() {
  const char* env = std::getenv("QUARKS_LOG_LEVEL");
  return env ? parse_level(env) : Level::info;
}

std::atomic<Level>& threshold() {
  static std::atomic<Level> value{initial_level()};
  return value;
}

constexpr const char* names[] = {"debug", "info", "warn", "error", "off"};

}  // namespace

void set_level(Level l) { threshold().store(l); }
Level level() { return threshold().load(); }

Level parse_level(std::string_view name) {
  for (int i = 0; i < 5; ++i)
    if (name == names[i]) return static_cast<Level>(i);
  return Level::info;
}

void write(Level l, std::string_view component, std::string_view msg, const nlohmann::json& fields) {
  if (l < level() || l == Level::off) return;
  nlohmann::json line = fields.is_object() ? fields : nlohmann::json::object();
  line["ts"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count();
  line["level"] = names[static_cast<int>(l)];
  line["component"] = component;
  line["msg"] = msg;
  const auto text = line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::fwrite(text.data(), 1, text.size(), stdout);
  std::fflush(stdout);
}

}  // namespace quarks::log
