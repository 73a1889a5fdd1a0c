#include "quarks/error.hpp"

#include <array>
#include <utility>

namespace quarks {

namespace {

constexpr std::array<std::pair<ErrorKind, std::string_view>, 13> kind_names{{
    {ErrorKind::validation, "validation"},
    {ErrorKind::auth, "auth"},
    {ErrorKind::forbidden, "forbidden"},
    {ErrorKind::not_found, "not_found"},
    {ErrorKind::conflict, "conflict"},
    {ErrorKind::replay, "replay"},
    {ErrorKind::state, "state"},
    {ErrorKind::integrity, "integrity"},
    {ErrorKind::gap, "gap"},
    {ErrorKind::crypto, "crypto"},
    {ErrorKind::network, "network"},
    {ErrorKind::unavailable, "unavailable"},
    {ErrorKind::internal, "internal"},
}};

}  // namespace

std::string_view to_string(ErrorKind kind) {
  for (const auto& [k, name] : kind_names)
    if (k == kind) return name;
  return "internal";
}

ErrorKind error_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kind_names)
    if (n == name) return k;
  return ErrorKind::internal;
}

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return 400;
    case ErrorKind::auth: return 401;
    case ErrorKind::forbidden: return 403;
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict:
    case ErrorKind::replay:
    case ErrorKind::state:
    case ErrorKind::gap: return 409;
    case ErrorKind::integrity:
    case ErrorKind::crypto: return 422;
    case ErrorKind::network: return 502;
    case ErrorKind::unavailable: return 503;
    case ErrorKind::internal: return 500;
  }
  return 500;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::conflict:
    case ErrorKind::replay:
    case ErrorKind::state: return 2;
    case ErrorKind::auth:
    case ErrorKind::forbidden: return 3;
    case ErrorKind::not_found: return 4;
    case ErrorKind::network:
    case ErrorKind::unavailable: return 5;
    default: return 1;
  }
}

}  // namespace quarks
