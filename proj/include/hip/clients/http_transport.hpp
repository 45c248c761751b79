#pragma once

#include <chrono>
#include <string>

#include <httplib.h>

#include "hip/clients/transport.hpp"

namespace hip {

// cpp-httplib backed transport. A fresh client per request keeps it free of
// shared mutable state; connection reuse is not worth the locking here.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(std::chrono::seconds timeout = std::chrono::seconds(120)) : timeout_(timeout) {}

    HttpResponse post(const HttpRequest& request) override {
        httplib::Client client(request.base_url);
        client.set_connection_timeout(timeout_);
        client.set_read_timeout(timeout_);
        client.set_write_timeout(timeout_);

        httplib::Headers headers;
        std::string content_type = "application/json";
        for (const auto& [k, v] : request.headers) {
            if (k == "Content-Type") {
                content_type = v;
            } else {
                headers.emplace(k, v);
            }
        }
        auto path = request.path.empty() ? std::string("/") : request.path;
        auto res = client.Post(path, headers, request.body, content_type);
        if (!res) return {0, {}, httplib::to_string(res.error())};
        return {res->status, res->body, {}};
    }

private:
    std::chrono::seconds timeout_;
};

}  // namespace hip
