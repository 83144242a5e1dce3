#include "http.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

namespace acorn::detail {

HttpResponse http_post_json(const std::string& scheme_host, const std::string& path,
                            const std::string& body, const std::map<std::string, std::string>& headers,
                            HttpTimeouts timeouts) {
    httplib::Client client(scheme_host);
    client.set_connection_timeout(std::chrono::milliseconds(timeouts.connect_ms));
    client.set_read_timeout(std::chrono::milliseconds(timeouts.read_ms));
    client.set_write_timeout(std::chrono::milliseconds(timeouts.read_ms));
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);

    HttpResponse out;
    auto res = client.Post(path, hdrs, body, "application/json");
    if (!res) {
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    if (res->has_header("Retry-After")) out.retry_after = res->get_header_value("Retry-After");
    return out;
}

}  // namespace acorn::detail
