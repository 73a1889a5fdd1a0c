#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace quarks::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

/// Process-wide threshold; defaults to info, or QUARKS_LOG_LEVEL when set.
void set_level(Level level);
Level level();
Level parse_level(std::string_view name);

/// One JSON object per line on stdout: {"ts","level","component","msg",...fields}.
void write(Level level, std::string_view component, std::string_view msg,
           const nlohmann::json& fields = nlohmann::json::object());

inline void info(std::string_view c, std::string_view m, const nlohmann::json& f = nlohmann::json::object()) {
  write(Level::info, c, m, f);
}
inline void warn(std::string_view c, std::string_view m, const nlohmann::json& f = nlohmann::json::object()) {
  write(Level::warn, c, m, f);
}
inline void error(std::string_view c, std::string_view m, const nlohmann::json& f = nlohmann::json::object()) {
  write(Level::error, c, m, f);
}
inline void debug(std::string_view c, std::string_view m, const nlohmann::json& f = nlohmann::json::object()) {
  write(Level::debug, c, m, f);
}

}  // namespace quarks::log
