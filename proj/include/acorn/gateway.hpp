#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "acorn/corpus.hpp"
#include "acorn/error.hpp"

namespace acorn {

inline constexpr std::string_view kDefaultCompressInstruction =
    "Summarize the documents, keeping only information that answers the question.";
inline constexpr std::string_view kDefaultAnswerInstruction =
    "Answer the question using the context. Respond with a short answer only.";

struct ChatRequest {
    std::string model_id;
    std::string system_prompt;
    std::string user_prompt;
    int max_output_tokens = 256;
    double temperature = 0.0;

    bool operator==(const ChatRequest&) const = default;
};

/// Content hash over every field that can change the completion.
std::string cache_key(const ChatRequest& req);

/// A chat-completion backend. Throws TransportError; `retryable()` marks
/// timeouts, 429 and 5xx.
class ChatEndpoint {
public:
    virtual ~ChatEndpoint() = default;
    virtual std::string complete(const ChatRequest& req) = 0;
};

struct HttpEndpointOptions {
    /// e.g. https://api.openai.com/v1 ; "/chat/completions" is appended.
    std::string base_url;
    std::string api_key;
    int connect_timeout_ms = 10000;
    int read_timeout_ms = 120000;
};

class HttpChatEndpoint final : public ChatEndpoint {
public:
    explicit HttpChatEndpoint(HttpEndpointOptions options);
    std::string complete(const ChatRequest& req) override;

private:
    HttpEndpointOptions options_;
    std::string scheme_host_;
    std::string path_prefix_;
};

/// Deterministic offline endpoint selected with base URL "mock://". Answer
/// prompts get the first words of their context ("unknown" without one);
/// teacher prompts get the first sentence of the first document.
class MockChatEndpoint final : public ChatEndpoint {
public:
    std::string complete(const ChatRequest& req) override;
    std::uint64_t calls() const noexcept { return calls_.load(); }

private:
    std::atomic<std::uint64_t> calls_{0};
};

/// Builds the endpoint for a base URL: "mock://" or http(s)://.
std::shared_ptr<ChatEndpoint> make_chat_endpoint(const std::string& base_url,
                                                 const std::string& api_key);

/// Read-through, append-only completion cache. With a directory it persists
/// to <dir>/completions.jsonl and reloads on construction.
class ResponseCache {
public:
    ResponseCache() = default;
    explicit ResponseCache(const std::filesystem::path& dir);

    std::optional<std::string> get(const std::string& key) const;
    /// First write for a key wins; later puts for the same key are ignored.
    void put(const std::string& key, const std::string& value);
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::string> entries_;
    std::optional<std::filesystem::path> file_;
    std::ofstream out_;
};

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_backoff{250};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{8000};

    std::chrono::milliseconds backoff_for(int attempt) const;
};

/// Counting gate on in-flight work that records the high-water mark.
class InFlightLimiter {
public:
    explicit InFlightLimiter(int cap);

    class Slot {
    public:
        explicit Slot(InFlightLimiter& l) : limiter_(&l) { limiter_->acquire(); }
        ~Slot() { limiter_->release(); }
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;

    private:
        InFlightLimiter* limiter_;
    };

    void acquire();
    void release();
    int cap() const noexcept { return cap_; }
    int peak() const noexcept { return peak_.load(); }

private:
    int cap_;
    int active_ = 0;
    std::atomic<int> peak_{0};
    std::mutex mutex_;
    std::condition_variable cv_;
};

struct ClientOptions {
    RetryPolicy retry;
    int max_in_flight = 4;
};

struct ClientStats {
    std::uint64_t network_calls = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t retries = 0;
    int peak_in_flight = 0;
};

/// Chat client shared by the teacher and the answerer. Safe for concurrent use.
class ChatClient {
public:
    ChatClient(std::shared_ptr<ChatEndpoint> endpoint, std::shared_ptr<ResponseCache> cache,
               ClientOptions options = {});

    /// Cache hit, else bounded and retried network call; the result is cached.
    /// Throws TransportError carrying the request digest and attempt count.
    std::string complete(const ChatRequest& req);

    ClientStats stats() const;

private:
    std::shared_ptr<ChatEndpoint> endpoint_;
    std::shared_ptr<ResponseCache> cache_;
    ClientOptions options_;
    InFlightLimiter limiter_;
    std::atomic<std::uint64_t> network_calls_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
    std::atomic<std::uint64_t> retries_{0};
};

/// Reads an instruction file, falling back to `fallback` when `path` is empty.
std::string load_instruction(const std::string& path, std::string_view fallback);

struct AnswerSettings {
    std::string model_id;
    std::string instruction{kDefaultAnswerInstruction};
    int max_output_tokens = 32;
};

/// Answer prompt. Without context the prompt has no context section at all.
ChatRequest build_answer_request(const QueryRecord& query, const std::optional<std::string>& context,
                                 const AnswerSettings& settings);

std::string answer(ChatClient& client, const QueryRecord& query,
                   const std::optional<std::string>& context, const AnswerSettings& settings);

// Compressor adapter wire format: one JSON object per line.
struct AdapterRequest {
    std::string id;
    std::string query;
    std::vector<std::string> documents;
};

struct AdapterResponse {
    std::string id;
    std::string summary;
};

std::string encode_request(const AdapterRequest& r);
std::string encode_response(const AdapterResponse& r);
/// Throws ProtocolError on malformed lines.
AdapterRequest decode_request(std::string_view line);
AdapterResponse decode_response(std::string_view line);

/// The student compressor as seen by the harness.
class CompressorAdapter {
public:
    virtual ~CompressorAdapter() = default;
    virtual std::string identity() const = 0;
    /// Sends one request; the future yields the summary for that id or throws
    /// AdapterError / ProtocolError. Ids must be unique among pending requests.
    virtual std::future<std::string> submit(AdapterRequest request) = 0;

    std::string compress(std::string query, std::vector<std::string> documents);

private:
    std::atomic<std::uint64_t> next_id_{0};
};

/// Child process speaking the line protocol over stdin/stdout. Writes are
/// serialized; any number of requests may be pipelined.
class SubprocessAdapter final : public CompressorAdapter {
public:
    explicit SubprocessAdapter(std::vector<std::string> argv);
    ~SubprocessAdapter() override;
    SubprocessAdapter(const SubprocessAdapter&) = delete;
    SubprocessAdapter& operator=(const SubprocessAdapter&) = delete;

    std::string identity() const override;
    std::future<std::string> submit(AdapterRequest request) override;

    int pid() const noexcept { return pid_; }
    /// Closes the child's stdin and waits for it to exit.
    void shutdown();

private:
    void read_loop();
    void fail_pending(const std::string& why, bool protocol);

    std::vector<std::string> argv_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::mutex write_mutex_;
    std::mutex pending_mutex_;
    std::map<std::string, std::promise<std::string>> pending_;
    bool broken_ = false;
    std::string broken_reason_;
    bool broken_protocol_ = false;
    std::thread reader_;
};

/// POSTs each request record to a URL; the body must be the response record.
class HttpCompressorAdapter final : public CompressorAdapter {
public:
    explicit HttpCompressorAdapter(std::string url, int timeout_ms = 120000);
    std::string identity() const override;
    std::future<std::string> submit(AdapterRequest request) override;

private:
    std::string url_;
    std::string scheme_host_;
    std::string path_;
    int timeout_ms_;
};

/// Splits "scheme://host:port/path" into ("scheme://host:port", "/path").
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace acorn
