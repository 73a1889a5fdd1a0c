#include "quarks/transport.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <chrono>

#include "quarks/error.hpp"

namespace quarks::net {

bool HeaderNameLess::operator()(const std::string& a, const std::string& b) const {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
    return std::tolower(static_cast<unsigned char>(x)) < std::tolower(static_cast<unsigned char>(y));
  });
}

std::string HttpResponse::header(const std::string& name) const {
  auto it = headers.find(name);
  return it == headers.end() ? std::string{} : it->second;
}

namespace {

class HttpTransport : public Transport {
 public:
  explicit HttpTransport(HttpTimeouts timeouts) : timeouts_(timeouts) {}

  HttpResponse post(const std::string& address, const std::string& path, const std::string& body,
                    const Headers& headers) override {
    return with_client(address, [&](httplib::Client& c) {
      return c.Post(path, to_httplib(headers), body, "application/json");
    });
  }

  HttpResponse get(const std::string& address, const std::string& path,
                   const Headers& headers) override {
    return with_client(address, [&](httplib::Client& c) { return c.Get(path, to_httplib(headers)); });
  }

 private:
  struct Pooled {
    std::unique_ptr<httplib::Client> client;
    std::chrono::steady_clock::time_point released;
  };
  using Pool = std::vector<Pooled>;

  // Servers close keep-alive connections after 5 s idle; reusing one at that moment fails the
  // request, so idle connections are dropped well before.
  static constexpr std::chrono::seconds max_idle{2};

  static httplib::Headers to_httplib(const Headers& h) { return {h.begin(), h.end()}; }

  std::unique_ptr<httplib::Client> acquire(const std::string& address) {
    {
      std::lock_guard lock(mu_);
      auto& pool = pools_[address];
      const auto now = std::chrono::steady_clock::now();
      std::erase_if(pool, [&](const Pooled& p) { return now - p.released >= max_idle; });
      if (!pool.empty()) {
        auto c = std::move(pool.back().client);
        pool.pop_back();
        return c;
      }
    }
    auto c = std::make_unique<httplib::Client>("http://" + address);
    c->set_keep_alive(true);
    c->set_tcp_nodelay(true);
    c->set_connection_timeout(timeouts_.connect);
    c->set_read_timeout(timeouts_.read);
    c->set_write_timeout(timeouts_.write);
    return c;
  }

  void release(const std::string& address, std::unique_ptr<httplib::Client> c) {
    std::lock_guard lock(mu_);
    pools_[address].push_back({std::move(c), std::chrono::steady_clock::now()});
  }

  template <typename F>
  HttpResponse with_client(const std::string& address, F&& call) {
    auto client = acquire(address);
    auto result = call(*client);
    if (!result) {
      const auto err = httplib::to_string(result.error());
      throw Error(ErrorKind::network, "request to " + address + " failed: " + err);
    }
    HttpResponse out{result->status, std::move(result->body), {}};
    for (const auto& [k, v] : result->headers) out.headers.emplace(k, v);
    release(address, std::move(client));
    return out;
  }

  HttpTimeouts timeouts_;
  std::mutex mu_;
  std::map<std::string, Pool> pools_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(HttpTimeouts timeouts) {
  return std::make_shared<HttpTransport>(timeouts);
}

HttpResponse CapturingTransport::post(const std::string& address, const std::string& path,
                                      const std::string& body, const Headers& headers) {
  auto r = inner_->post(address, path, body, headers);
  std::lock_guard lock(mu_);
  log_.push_back({address, "POST", path, body, headers, r.body});
  return r;
}

HttpResponse CapturingTransport::get(const std::string& address, const std::string& path,
                                     const Headers& headers) {
  auto r = inner_->get(address, path, headers);
  std::lock_guard lock(mu_);
  log_.push_back({address, "GET", path, {}, headers, r.body});
  return r;
}

std::vector<CapturingTransport::Exchange> CapturingTransport::exchanges() const {
  std::lock_guard lock(mu_);
  return log_;
}

void CapturingTransport::clear() {
  std::lock_guard lock(mu_);
  log_.clear();
}

void throw_response_error(const HttpResponse& response) {
  auto j = nlohmann::json::parse(response.body, nullptr, false);
  if (!j.is_discarded() && j.is_object() && j.contains("error") && j["error"].is_object()) {
    const auto& e = j["error"];
    throw Error(error_kind_from_string(e.value("kind", "internal")), e.value("message", "error"));
  }
  throw Error(ErrorKind::internal, "HTTP " + std::to_string(response.status) + ": " + response.body);
}

nlohmann::json expect_ok(const HttpResponse& response) {
  if (response.status < 200 || response.status >= 300) throw_response_error(response);
  auto j = nlohmann::json::parse(response.body, nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::internal, "response is not JSON");
  return j;
}

}  // namespace quarks::net
