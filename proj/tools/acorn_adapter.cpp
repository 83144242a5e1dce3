// Reference compressor adapters speaking the line protocol on stdin/stdout.
//
//   acorn-adapter echo              summary = documents joined by newlines
//   acorn-adapter truncate N        first N whitespace tokens of the documents
//   acorn-adapter reverse-batch K   echo, answering each batch of K in reverse
//   acorn-adapter sink              read requests, never answer
//   acorn-adapter exit-after N      echo N requests, then exit without answering
//   acorn-adapter garbage           answer every request with a malformed line

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "acorn/error.hpp"
#include "acorn/gateway.hpp"

namespace {

std::string join(const std::vector<std::string>& docs) {
    std::string out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (i) out.push_back('\n');
        out += docs[i];
    }
    return out;
}

std::string truncate_tokens(const std::string& text, std::size_t n) {
    std::istringstream in(text);
    std::string out;
    std::string word;
    for (std::size_t i = 0; i < n && in >> word; ++i) {
        if (!out.empty()) out.push_back(' ');
        out += word;
    }
    return out;
}

void emit(const acorn::AdapterResponse& r) { std::cout << acorn::encode_response(r) << '\n' << std::flush; }

int usage() {
    std::cerr << "usage: acorn-adapter echo | truncate N | reverse-batch K | sink | exit-after N | garbage\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);
    if (argc < 2) return usage();
    const std::string mode = argv[1];
    long param = 0;
    if (mode == "truncate" || mode == "reverse-batch" || mode == "exit-after") {
        if (argc < 3) return usage();
        param = std::strtol(argv[2], nullptr, 10);
        if (param < 0 || (mode == "reverse-batch" && param == 0)) return usage();
    } else if (mode != "echo" && mode != "sink" && mode != "garbage") {
        return usage();
    }

    std::vector<acorn::AdapterResponse> batch;
    long served = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        acorn::AdapterRequest req;
        try {
            req = acorn::decode_request(line);
        } catch (const acorn::Error& e) {
            std::cerr << "acorn-adapter: " << e.what() << '\n';
            return 1;
        }
        if (mode == "sink") continue;
        if (mode == "garbage") {
            std::cout << "{not json\n" << std::flush;
            continue;
        }
        if (mode == "exit-after" && served == param) return 3;
        acorn::AdapterResponse resp{req.id, join(req.documents)};
        if (mode == "truncate") resp.summary = truncate_tokens(resp.summary, static_cast<std::size_t>(param));
        ++served;
        if (mode == "reverse-batch") {
            batch.push_back(std::move(resp));
            if (batch.size() == static_cast<std::size_t>(param)) {
                for (auto it = batch.rbegin(); it != batch.rend(); ++it) emit(*it);
                batch.clear();
            }
            continue;
        }
        emit(resp);
    }
    for (auto it = batch.rbegin(); it != batch.rend(); ++it) emit(*it);
    return 0;
}
