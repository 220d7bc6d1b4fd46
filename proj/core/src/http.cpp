#include "bunforge/http.hpp"

#include "bunforge/error.hpp"

#include <httplib.h>

namespace bunforge {

struct HttpEndpoint::Impl {
    std::string origin;
    std::string base_path;
    std::unique_ptr<httplib::Client> client;
    std::string url;
};

HttpEndpoint::HttpEndpoint(const std::string& url, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>()) {
    impl_->url = url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::InvalidConfig, "URL needs a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    impl_->origin = url.substr(0, path_start);
    impl_->base_path = path_start == std::string::npos ? std::string() : url.substr(path_start);
    while (!impl_->base_path.empty() && impl_->base_path.back() == '/') impl_->base_path.pop_back();

    impl_->client = std::make_unique<httplib::Client>(impl_->origin);
    if (!impl_->client->is_valid()) {
        throw Error(ErrorCode::InvalidConfig, "unsupported URL: " + url);
    }
    const auto secs = timeout.count() / 1000;
    const auto usecs = (timeout.count() % 1000) * 1000;
    impl_->client->set_connection_timeout(secs, usecs);
    impl_->client->set_read_timeout(secs, usecs);
    impl_->client->set_write_timeout(secs, usecs);
}

HttpEndpoint::~HttpEndpoint() = default;
HttpEndpoint::HttpEndpoint(HttpEndpoint&&) noexcept = default;
HttpEndpoint& HttpEndpoint::operator=(HttpEndpoint&&) noexcept = default;

void HttpEndpoint::set_basic_auth(const std::string& credentials) {
    const auto colon = credentials.find(':');
    const std::string user = credentials.substr(0, colon);
    const std::string pass = colon == std::string::npos ? std::string() : credentials.substr(colon + 1);
    impl_->client->set_basic_auth(user, pass);
}

namespace {

HttpResponse unwrap(const httplib::Result& res, const std::string& url) {
    if (!res) {
        throw Error(ErrorCode::EndpointUnreachable, url + ": " + httplib::to_string(res.error()));
    }
    return {res->status, res->body};
}

}  // namespace

HttpResponse HttpEndpoint::post(const std::string& body, const std::string& content_type) {
    const std::string path = impl_->base_path.empty() ? "/" : impl_->base_path;
    return unwrap(impl_->client->Post(path, body, content_type), impl_->url);
}

HttpResponse HttpEndpoint::get(const std::string& target) {
    return unwrap(impl_->client->Get(impl_->base_path + target), impl_->url);
}

}  // namespace bunforge
