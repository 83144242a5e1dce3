#pragma once

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

namespace testing_support {

class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "acorn-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

// Reference normalizer for ASCII input, written as a plain character walk.
inline std::string oracle_normalize(const std::string& s) {
    std::vector<std::string> words;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && cur != "a" && cur != "an" && cur != "the") words.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
            flush();
        } else if (std::ispunct(c) && c != '$' && c != '+' && c != '<' && c != '=' && c != '>' && c != '^' &&
                   c != '`' && c != '|' && c != '~') {
            // ASCII symbols ($ + < = > ^ ` | ~) are Unicode category S, not P.
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

inline bool oracle_contains(const std::string& text, const std::vector<std::string>& aliases) {
    const auto t = oracle_normalize(text);
    for (const auto& a : aliases) {
        const auto n = oracle_normalize(a);
        if (n.empty()) continue;
        for (std::size_t i = 0; i + n.size() <= t.size(); ++i) {
            if (t.compare(i, n.size(), n) == 0) return true;
        }
    }
    return false;
}

inline std::vector<std::string> oracle_split(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

// Token F1 by pairing each predicted token with an unused equal gold token.
inline double oracle_f1(const std::string& pred, const std::vector<std::string>& aliases) {
    double best = 0.0;
    const auto p = oracle_split(oracle_normalize(pred));
    for (const auto& a : aliases) {
        const auto g = oracle_split(oracle_normalize(a));
        double f1 = 0.0;
        if (p.empty() && g.empty()) {
            f1 = 1.0;
        } else {
            std::vector<bool> used(g.size(), false);
            std::size_t overlap = 0;
            for (const auto& tok : p) {
                for (std::size_t j = 0; j < g.size(); ++j) {
                    if (!used[j] && g[j] == tok) {
                        used[j] = true;
                        ++overlap;
                        break;
                    }
                }
            }
            if (overlap > 0) {
                const double prec = static_cast<double>(overlap) / static_cast<double>(p.size());
                const double rec = static_cast<double>(overlap) / static_cast<double>(g.size());
                f1 = 2 * prec * rec / (prec + rec);
            }
        }
        best = std::max(best, f1);
    }
    return best;
}

inline int oracle_em(const std::string& pred, const std::vector<std::string>& aliases) {
    const auto p = oracle_normalize(pred);
    for (const auto& a : aliases) {
        if (oracle_normalize(a) == p) return 1;
    }
    return 0;
}

// Random ASCII text drawn from a small vocabulary with punctuation and
// irregular whitespace mixed in.
inline std::string random_text(std::mt19937_64& rng, int max_words) {
    static const std::vector<std::string> vocab{
        "the", "a", "an", "The", "A", "blue", "whale", "Paris", "paris", "lyon", "river", "Nile", "of", "is",
        "and", "red", "fish", "AN", "capital", "city", "x", "don't", "U.S.", "e-mail", "2022", "42", "then",
        "theory", "anna", "at"};
    static const std::vector<std::string> seps{" ", "  ", "\t", " , ", ". ", "! ", "\n", " (", ") ", "-", "'"};
    std::uniform_int_distribution<int> len(0, max_words);
    std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
    std::uniform_int_distribution<std::size_t> sep(0, seps.size() - 1);
    std::string out;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
        if (i) out += seps[sep(rng)];
        out += vocab[word(rng)];
    }
    if (n && rng() % 4 == 0) out += seps[sep(rng)];
    return out;
}

// httplib server on an ephemeral port, serving on a background thread.
class LocalServer {
public:
    LocalServer() = default;
    ~LocalServer() { stop(); }
    LocalServer(const LocalServer&) = delete;
    LocalServer& operator=(const LocalServer&) = delete;

    httplib::Server& server() { return server_; }

    void start() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }
    std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace testing_support
