#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace quarks {

enum class ErrorKind {
  validation,
  auth,       // bad signature, unknown or invalid certificate
  forbidden,  // contract guard failed
  not_found,
  conflict,
  replay,
  state,      // protocol step out of order
  integrity,  // chain or snapshot verification failed
  gap,        // replicated block does not extend the local head
  crypto,     // authenticated decryption failed
  network,
  unavailable,
  internal,
};

std::string_view to_string(ErrorKind kind);
ErrorKind error_kind_from_string(std::string_view name);

/// HTTP status the node answers with for a given error kind.
int http_status(ErrorKind kind);

/// Process exit code used by the command line tools.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace quarks
