#pragma once

#include <chrono>
#include <memory>
#include <string>

namespace bunforge {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Thin blocking HTTP client bound to one base URL ("scheme://host[:port][/path]").
/// Connection failures and timeouts raise Error(EndpointUnreachable).
class HttpEndpoint {
  public:
    HttpEndpoint(const std::string& url, std::chrono::milliseconds timeout);
    ~HttpEndpoint();
    HttpEndpoint(HttpEndpoint&&) noexcept;
    HttpEndpoint& operator=(HttpEndpoint&&) noexcept;

    /// `credentials` is "user:password".
    void set_basic_auth(const std::string& credentials);

    HttpResponse post(const std::string& body, const std::string& content_type);
    /// `target` is appended to the base path; it may carry a query string.
    HttpResponse get(const std::string& target);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace bunforge
