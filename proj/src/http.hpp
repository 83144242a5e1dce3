#pragma once

// Internal: the only translation unit that includes cpp-httplib is http.cpp.

#include <map>
#include <string>

namespace acorn::detail {

struct HttpResponse {
    int status = 0;        ///< 0 when no response arrived
    std::string body;
    std::string error;     ///< transport failure description when status == 0
    std::string retry_after;
};

struct HttpTimeouts {
    int connect_ms = 10000;
    int read_ms = 120000;
};

/// POST with a JSON body. `scheme_host` is "http://host:port" or https.
HttpResponse http_post_json(const std::string& scheme_host, const std::string& path,
                            const std::string& body, const std::map<std::string, std::string>& headers,
                            HttpTimeouts timeouts);

}  // namespace acorn::detail
