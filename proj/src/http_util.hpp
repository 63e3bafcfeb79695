#pragma once

// Private helpers shared by the HTTP clients. Include only from .cpp files.

#include <httplib.h>

#include "lte/error.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>

namespace lte::detail {

struct BaseUrl {
    std::string scheme_host_port;  // "http://host:port"
    std::string path_prefix;       // "/v1", possibly empty
};

inline BaseUrl split_base_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error("base URL must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    BaseUrl out;
    if (path_start == std::string::npos) {
        out.scheme_host_port = url;
    } else {
        out.scheme_host_port = url.substr(0, path_start);
        out.path_prefix = url.substr(path_start);
    }
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

inline std::unique_ptr<httplib::Client> make_client(const BaseUrl& base, std::chrono::milliseconds timeout) {
    auto client = std::make_unique<httplib::Client>(base.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client->set_connection_timeout(secs.count(), usecs.count());
    client->set_read_timeout(secs.count(), usecs.count());
    client->set_write_timeout(secs.count(), usecs.count());
    return client;
}

inline std::string env_or_empty(const std::string& name) {
    if (name.empty()) return {};
    const char* v = std::getenv(name.c_str());
    return v ? std::string(v) : std::string();
}

inline std::string excerpt(const std::string& body, std::size_t limit = 200) {
    return body.size() <= limit ? body : body.substr(0, limit) + "...";
}

/// POST with bounded retries on transport failures; backoff doubles from 100 ms, capped at 2 s.
/// Non-2xx responses are returned to the caller untouched.
inline httplib::Result post_json_with_retries(httplib::Client& client, const std::string& path,
                                              const httplib::Headers& headers, const std::string& body,
                                              int max_retries) {
    auto delay = std::chrono::milliseconds(100);
    for (int attempt = 0;; ++attempt) {
        auto res = client.Post(path, headers, body, "application/json");
        if (res || attempt >= max_retries) return res;
        std::this_thread::sleep_for(delay);
        delay = std::min(delay * 2, std::chrono::milliseconds(2000));
    }
}

} // namespace lte::detail
