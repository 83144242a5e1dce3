#include "acorn/gateway.hpp"

#include <spdlog/spdlog.h>

#include <cerrno>
#include <cmath>
#include <csignal>
#include <ctime>
#include <nlohmann/json.hpp>
#include <sstream>

#include <fcntl.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "acorn/hashing.hpp"
#include "acorn/text.hpp"
#include "http.hpp"

namespace acorn {
namespace {

using nlohmann::json;

std::string utc_timestamp() {
    const auto now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string first_words(std::string_view text, std::size_t n) {
    std::istringstream in{std::string(text)};
    std::string word;
    std::string out;
    for (std::size_t i = 0; i < n && in >> word; ++i) {
        if (!out.empty()) out.push_back(' ');
        out += word;
    }
    return out;
}

std::string_view section_after(std::string_view text, std::string_view marker, std::string_view stop) {
    const auto b = text.find(marker);
    if (b == std::string_view::npos) return {};
    auto rest = text.substr(b + marker.size());
    const auto e = rest.find(stop);
    return e == std::string_view::npos ? rest : rest.substr(0, e);
}

}  // namespace

std::string cache_key(const ChatRequest& req) {
    return StableHasher{}
        .str("acorn.chat.v1")
        .str(req.model_id)
        .str(req.system_prompt)
        .str(req.user_prompt)
        .i64(req.max_output_tokens)
        .str(json(req.temperature).dump())
        .hex();
}

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw InputError("url '" + url + "' has no scheme");
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, ""};
    return {url.substr(0, slash), url.substr(slash)};
}

// ---------------------------------------------------------------------------
// Endpoints

HttpChatEndpoint::HttpChatEndpoint(HttpEndpointOptions options) : options_(std::move(options)) {
    std::tie(scheme_host_, path_prefix_) = split_url(options_.base_url);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpChatEndpoint::complete(const ChatRequest& req) {
    json messages = json::array();
    if (!req.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", req.user_prompt}});
    const json body{{"model", req.model_id},
                    {"messages", messages},
                    {"temperature", req.temperature},
                    {"max_tokens", req.max_output_tokens}};
    std::map<std::string, std::string> headers;
    if (!options_.api_key.empty()) headers["Authorization"] = "Bearer " + options_.api_key;

    const auto res = detail::http_post_json(scheme_host_, path_prefix_ + "/chat/completions", body.dump(),
                                            headers, {options_.connect_timeout_ms, options_.read_timeout_ms});
    if (res.status == 0) throw TransportError("chat endpoint unreachable: " + res.error, true);
    if (res.status != 200) {
        const bool retryable = res.status == 408 || res.status == 429 || res.status >= 500;
        throw TransportError("chat endpoint returned HTTP " + std::to_string(res.status), retryable, res.status);
    }
    try {
        const auto parsed = json::parse(res.body);
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed chat completion: ") + e.what(), false, res.status);
    }
}

std::string MockChatEndpoint::complete(const ChatRequest& req) {
    calls_.fetch_add(1);
    const std::string_view user = req.user_prompt;
    if (auto docs = section_after(user, "Document [1]:", "\n\n"); !docs.empty()) {
        const auto end = docs.find(". ");
        auto sentence = trim(end == std::string_view::npos ? docs : docs.substr(0, end + 1));
        return first_words(sentence, 40);
    }
    if (auto context = section_after(user, "Context:\n", "\n\nQuestion:"); !context.empty()) {
        auto words = first_words(context, 4);
        return words.empty() ? "unknown" : words;
    }
    return "unknown";
}

std::shared_ptr<ChatEndpoint> make_chat_endpoint(const std::string& base_url, const std::string& api_key) {
    if (base_url.rfind("mock://", 0) == 0) return std::make_shared<MockChatEndpoint>();
    return std::make_shared<HttpChatEndpoint>(HttpEndpointOptions{base_url, api_key});
}

// ---------------------------------------------------------------------------
// Cache

ResponseCache::ResponseCache(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    file_ = dir / "completions.jsonl";
    if (std::filesystem::exists(*file_)) {
        std::ifstream in(*file_);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
                const auto j = json::parse(line);
                entries_.emplace(j.at("key").get<std::string>(), j.at("value").get<std::string>());
            } catch (const json::exception&) {
                spdlog::warn("cache {}:{}: unreadable entry skipped", file_->string(), line_no);
            }
        }
    }
    out_.open(*file_, std::ios::app | std::ios::binary);
    if (!out_) throw Error("cannot open cache file " + file_->string());
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
}

void ResponseCache::put(const std::string& key, const std::string& value) {
    std::unique_lock lock(mutex_);
    if (!entries_.emplace(key, value).second) return;
    if (out_.is_open()) {
        out_ << json{{"key", key}, {"value", value}, {"created_at", utc_timestamp()}}.dump() << '\n';
        out_.flush();
    }
}

std::size_t ResponseCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------
// Client

std::chrono::milliseconds RetryPolicy::backoff_for(int attempt) const {
    const double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, std::max(0, attempt - 1));
    return std::chrono::milliseconds(
        static_cast<std::int64_t>(std::min(ms, static_cast<double>(max_backoff.count()))));
}

InFlightLimiter::InFlightLimiter(int cap) : cap_(std::max(1, cap)) {}

void InFlightLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return active_ < cap_; });
    ++active_;
    int peak = peak_.load();
    while (active_ > peak && !peak_.compare_exchange_weak(peak, active_)) {
    }
}

void InFlightLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        --active_;
    }
    cv_.notify_one();
}

ChatClient::ChatClient(std::shared_ptr<ChatEndpoint> endpoint, std::shared_ptr<ResponseCache> cache,
                       ClientOptions options)
    : endpoint_(std::move(endpoint)),
      cache_(std::move(cache)),
      options_(options),
      limiter_(options.max_in_flight) {
    if (!endpoint_) throw InputError("chat client: endpoint not configured");
}

std::string ChatClient::complete(const ChatRequest& req) {
    if (req.user_prompt.empty()) throw InputError("chat request has an empty user prompt");
    const auto key = cache_key(req);
    if (cache_) {
        if (auto hit = cache_->get(key)) {
            cache_hits_.fetch_add(1);
            return *hit;
        }
    }
    const auto digest = key.substr(0, 16);
    const int max_attempts = std::max(1, options_.retry.max_attempts);
    for (int attempt = 1;; ++attempt) {
        std::string text;
        try {
            InFlightLimiter::Slot slot(limiter_);
            network_calls_.fetch_add(1);
            text = endpoint_->complete(req);
        } catch (const TransportError& e) {
            if (!e.retryable() || attempt >= max_attempts) {
                throw TransportError(std::string(e.what()) + " [request " + digest + ", " + std::to_string(attempt) +
                                         (attempt == 1 ? " attempt]" : " attempts]"),
                                     e.retryable(), e.status(), digest, attempt);
            }
            retries_.fetch_add(1);
            std::this_thread::sleep_for(options_.retry.backoff_for(attempt));
            continue;
        }
        if (text.empty()) {
            throw TransportError("empty completion [request " + digest + "]", false, 200, digest, attempt);
        }
        if (cache_) cache_->put(key, text);
        return text;
    }
}

ClientStats ChatClient::stats() const {
    return {network_calls_.load(), cache_hits_.load(), retries_.load(), limiter_.peak()};
}

std::string load_instruction(const std::string& path, std::string_view fallback) {
    if (path.empty()) return std::string(fallback);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read instruction file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    auto text = trim(ss.str());
    if (text.empty()) throw InputError("instruction file " + path + " is empty");
    return text;
}

ChatRequest build_answer_request(const QueryRecord& query, const std::optional<std::string>& context,
                                 const AnswerSettings& settings) {
    ChatRequest req;
    req.model_id = settings.model_id;
    req.system_prompt = settings.instruction;
    req.max_output_tokens = settings.max_output_tokens;
    if (context) req.user_prompt = "Context:\n" + *context + "\n\n";
    req.user_prompt += "Question: " + query.question + "\nAnswer:";
    return req;
}

std::string answer(ChatClient& client, const QueryRecord& query, const std::optional<std::string>& context,
                   const AnswerSettings& settings) {
    return trim(client.complete(build_answer_request(query, context, settings)));
}

// ---------------------------------------------------------------------------
// Adapter wire format

std::string encode_request(const AdapterRequest& r) {
    return json{{"id", r.id}, {"query", r.query}, {"documents", r.documents}}.dump() + "\n";
}

std::string encode_response(const AdapterResponse& r) {
    return json{{"id", r.id}, {"summary", r.summary}}.dump() + "\n";
}

AdapterRequest decode_request(std::string_view line) {
    try {
        const auto j = json::parse(line);
        AdapterRequest r;
        r.id = j.at("id").get<std::string>();
        r.query = j.at("query").get<std::string>();
        r.documents = j.at("documents").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed adapter request: ") + e.what());
    }
}

AdapterResponse decode_response(std::string_view line) {
    try {
        const auto j = json::parse(line);
        return {j.at("id").get<std::string>(), j.at("summary").get<std::string>()};
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed adapter response: ") + e.what());
    }
}

std::string CompressorAdapter::compress(std::string query, std::vector<std::string> documents) {
    auto id = "c" + std::to_string(next_id_.fetch_add(1));
    return submit({std::move(id), std::move(query), std::move(documents)}).get();
}

// ---------------------------------------------------------------------------
// SubprocessAdapter

namespace {

void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] {
        struct sigaction sa {};
        sa.sa_handler = SIG_IGN;
        sigaction(SIGPIPE, &sa, nullptr);
    });
}

bool write_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const auto n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

}  // namespace

SubprocessAdapter::SubprocessAdapter(std::vector<std::string> argv) : argv_(std::move(argv)) {
    if (argv_.empty()) throw InputError("subprocess adapter: empty command");
    ignore_sigpipe();
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw Error("pipe failed");
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw Error("pipe failed");
    }
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);

    pid_ = ::fork();
    if (pid_ < 0) throw Error("fork failed");
    if (pid_ == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execvp(args[0], args.data());
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    reader_ = std::thread([this] { read_loop(); });
}

SubprocessAdapter::~SubprocessAdapter() { shutdown(); }

std::string SubprocessAdapter::identity() const {
    std::string id = "subprocess:";
    for (std::size_t i = 0; i < argv_.size(); ++i) {
        if (i) id.push_back(' ');
        id += i == 0 ? std::filesystem::path(argv_[i]).filename().string() : argv_[i];
    }
    return id;
}

void SubprocessAdapter::fail_pending(const std::string& why, bool protocol) {
    std::lock_guard lock(pending_mutex_);
    broken_ = true;
    broken_reason_ = why;
    broken_protocol_ = protocol;
    for (auto& [id, promise] : pending_) {
        if (protocol) {
            promise.set_exception(std::make_exception_ptr(ProtocolError(why + " (request id " + id + ")")));
        } else {
            promise.set_exception(std::make_exception_ptr(AdapterError(why, id)));
        }
    }
    pending_.clear();
}

void SubprocessAdapter::read_loop() {
    std::string buffer;
    char chunk[4096];
    for (;;) {
        const auto n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t start = 0;
        for (auto nl = buffer.find('\n', start); nl != std::string::npos; nl = buffer.find('\n', start)) {
            const std::string_view line(buffer.data() + start, nl - start);
            start = nl + 1;
            if (trim(line).empty()) continue;
            AdapterResponse response;
            try {
                response = decode_response(line);
            } catch (const ProtocolError& e) {
                fail_pending(e.what(), true);
                continue;
            }
            std::lock_guard lock(pending_mutex_);
            auto it = pending_.find(response.id);
            if (it == pending_.end()) {
                spdlog::warn("adapter answered unknown id '{}'", response.id);
                continue;
            }
            it->second.set_value(std::move(response.summary));
            pending_.erase(it);
        }
        buffer.erase(0, start);
    }
    fail_pending("compressor adapter exited", false);
}

std::future<std::string> SubprocessAdapter::submit(AdapterRequest request) {
    std::future<std::string> future;
    {
        std::lock_guard lock(pending_mutex_);
        if (broken_) {
            std::promise<std::string> p;
            if (broken_protocol_) {
                p.set_exception(std::make_exception_ptr(ProtocolError(broken_reason_)));
            } else {
                p.set_exception(std::make_exception_ptr(AdapterError(broken_reason_, request.id)));
            }
            return p.get_future();
        }
        auto [it, inserted] = pending_.try_emplace(request.id);
        if (!inserted) throw InputError("adapter request id '" + request.id + "' is already pending");
        future = it->second.get_future();
    }
    const auto line = encode_request(request);
    bool ok = false;
    {
        std::lock_guard lock(write_mutex_);
        ok = to_child_ >= 0 && write_all(to_child_, line);
    }
    if (!ok) {
        std::lock_guard lock(pending_mutex_);
        if (auto it = pending_.find(request.id); it != pending_.end()) {
            it->second.set_exception(
                std::make_exception_ptr(AdapterError("write to compressor adapter failed", request.id)));
            pending_.erase(it);
        }
    }
    return future;
}

void SubprocessAdapter::shutdown() {
    {
        std::lock_guard lock(write_mutex_);
        if (to_child_ >= 0) {
            ::close(to_child_);
            to_child_ = -1;
        }
    }
    if (pid_ > 0) {
        int status = 0;
        bool exited = false;
        for (int i = 0; i < 300; ++i) {
            const auto r = ::waitpid(pid_, &status, WNOHANG);
            if (r == pid_ || r < 0) {
                exited = true;
                break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        if (!exited) {
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
        }
        pid_ = -1;
    }
    if (reader_.joinable()) reader_.join();
    if (from_child_ >= 0) {
        ::close(from_child_);
        from_child_ = -1;
    }
}

// ---------------------------------------------------------------------------
// HttpCompressorAdapter

HttpCompressorAdapter::HttpCompressorAdapter(std::string url, int timeout_ms)
    : url_(std::move(url)), timeout_ms_(timeout_ms) {
    std::tie(scheme_host_, path_) = split_url(url_);
    if (path_.empty()) path_ = "/";
}

std::string HttpCompressorAdapter::identity() const { return "http:" + url_; }

std::future<std::string> HttpCompressorAdapter::submit(AdapterRequest request) {
    std::promise<std::string> promise;
    auto future = promise.get_future();
    auto body = encode_request(request);
    body.pop_back();
    const auto res = detail::http_post_json(scheme_host_, path_, body, {}, {timeout_ms_, timeout_ms_});
    try {
        if (res.status == 0) throw AdapterError("compressor endpoint unreachable: " + res.error, request.id);
        if (res.status != 200) {
            throw AdapterError("compressor endpoint returned HTTP " + std::to_string(res.status), request.id);
        }
        auto response = decode_response(res.body);
        if (response.id != request.id) {
            throw ProtocolError("compressor endpoint answered id '" + response.id + "' for request '" +
                                request.id + "'");
        }
        promise.set_value(std::move(response.summary));
    } catch (...) {
        promise.set_exception(std::current_exception());
    }
    return future;
}

}  // namespace acorn
