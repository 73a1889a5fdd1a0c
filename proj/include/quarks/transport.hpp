#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace quarks::net {

struct HeaderNameLess {
  bool operator()(const std::string& a, const std::string& b) const;
};

/// Header names compare case-insensitively, as in HTTP.
using Headers = std::multimap<std::string, std::string, HeaderNameLess>;

struct HttpResponse {
  int status = 0;
  std::string body;
  Headers headers;

  std::string header(const std::string& name) const;
};

/// Request/response transport between clients and nodes and between nodes.
/// Implementations throw ErrorKind::network when the peer cannot be reached.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& address, const std::string& path,
                            const std::string& body, const Headers& headers = {}) = 0;
  virtual HttpResponse get(const std::string& address, const std::string& path,
                           const Headers& headers = {}) = 0;
};

struct HttpTimeouts {
  std::chrono::milliseconds connect{2000};
  std::chrono::milliseconds read{30000};
  std::chrono::milliseconds write{30000};
};

/// Plain HTTP over keep-alive connections, pooled per address. Thread-safe.
std::shared_ptr<Transport> make_http_transport(HttpTimeouts timeouts = {});

/// Records every request and response passing through it.
class CapturingTransport : public Transport {
 public:
  struct Exchange {
    std::string address;
    std::string method;
    std::string path;
    std::string request_body;
    Headers request_headers;
    std::string response_body;
  };

  explicit CapturingTransport(std::shared_ptr<Transport> inner) : inner_(std::move(inner)) {}

  HttpResponse post(const std::string& address, const std::string& path, const std::string& body,
                    const Headers& headers = {}) override;
  HttpResponse get(const std::string& address, const std::string& path,
                   const Headers& headers = {}) override;

  std::vector<Exchange> exchanges() const;
  void clear();

 private:
  std::shared_ptr<Transport> inner_;
  mutable std::mutex mu_;
  std::vector<Exchange> log_;
};

/// Builds an error from a non-2xx response carrying {"error":{"kind","message"}}.
[[noreturn]] void throw_response_error(const HttpResponse& response);

/// Parses a 2xx JSON response or throws the error it carries.
nlohmann::json expect_ok(const HttpResponse& response);

inline constexpr const char* envelope_header = "X-Quarks-Envelope";
inline constexpr const char* signature_header = "X-Quarks-Signature";

}  // namespace quarks::net
