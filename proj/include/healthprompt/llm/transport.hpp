#pragma once

#include <chrono>
#include <map>
#include <string>
#include <utility>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "healthprompt/error.hpp"

namespace healthprompt::llm {

// status 0 means the request never got an HTTP answer (refused, timed out).
struct HttpResult {
    int status = 0;
    std::string body;
    std::string error;
};

using Headers = std::multimap<std::string, std::string>;

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResult post_json(const std::string& path, const std::string& body, const Headers& headers) = 0;
};

// Splits "https://host:port/prefix" into origin and path prefix.
inline std::pair<std::string, std::string> split_base_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ValidationError("base_url must include a scheme: " + url);
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, ""};
    std::string prefix = url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, slash), prefix};
}

class HttpTransport : public Transport {
public:
    HttpTransport(std::string base_url, std::chrono::milliseconds timeout) : timeout_(timeout) {
        std::tie(origin_, prefix_) = split_base_url(base_url);
    }

    HttpResult post_json(const std::string& path, const std::string& body, const Headers& headers) override {
        // One client per call keeps concurrent requests independent.
        httplib::Client cli(origin_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
        cli.set_connection_timeout(secs.count(), usecs.count());
        cli.set_read_timeout(secs.count(), usecs.count());
        cli.set_write_timeout(secs.count(), usecs.count());
        httplib::Headers h(headers.begin(), headers.end());
        auto res = cli.Post(prefix_ + path, h, body, "application/json");
        if (!res) return {0, {}, httplib::to_string(res.error())};
        return {res->status, res->body, {}};
    }

private:
    std::string origin_;
    std::string prefix_;
    std::chrono::milliseconds timeout_;
};

}  // namespace healthprompt::llm
