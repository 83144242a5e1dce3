#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "acorn/records.hpp"

namespace acorn {

inline constexpr std::string_view kToolVersion = "0.3.0";

struct EndpointConfig {
    std::string base_url = "mock://";
    std::string teacher_model = "gpt-3.5-turbo";
    std::string answer_model = "llama-3.1-8b-instruct";
    std::string api_key_env = "OPENAI_API_KEY";
    int max_attempts = 4;
    int initial_backoff_ms = 250;
    int max_in_flight = 4;
    int teacher_max_tokens = 256;
    int answer_max_tokens = 32;
    double temperature = 0.0;
    std::string compress_instruction_file;
    std::string answer_instruction_file;

    bool operator==(const EndpointConfig&) const = default;
};

struct CorruptorConfig {
    std::string kind = "distractor";  ///< distractor | fill-mask
    std::string url;
    int top_k = 10;
    int max_attempts = 5;
    int max_in_flight = 4;

    bool operator==(const CorruptorConfig&) const = default;
};

/// Every knob of every command. Path-valued fields are reported by basename
/// (plus content digest for inputs) in manifests so that relocated runs
/// produce identical manifests.
struct RunConfig {
    std::string command;
    std::map<std::string, std::string> inputs;  ///< role -> path
    std::string output;
    std::string table;
    std::uint64_t seed = 0;
    int k = 5;
    EndpointConfig endpoint;
    CorruptorConfig corruptor;
    std::string label_mode = "evidential_only";
    std::string empty_policy = "exclude";
    int workers = 4;
    std::string cache_dir;
    std::string on_error = "fail";
    std::size_t strata_sample_size = 100;
    std::string adapter;
    std::string adapter_cmd;
    std::string adapter_url;
    std::string context_mode = "summary";
    std::string view = "augmented";  ///< augmented | base
    bool par_subset = false;
    std::map<std::string, std::string> sections;

    bool operator==(const RunConfig&) const = default;
};

Json to_json(const RunConfig& c);
RunConfig run_config_from_json(const Json& j);
/// Config with every path replaced by its file name.
Json redacted_config(const RunConfig& c);
std::string config_hash(const RunConfig& c);

/// Plain-text table: one row per metric, one column per group.
std::string render_table(const MetricsReport& report, const std::string& title);
std::string render_delta_table(const DeltaReport& delta);

/// Entry point behind the acorn executable. Returns the process exit code:
/// 0 success, 1 runtime failure, 2 usage error. Errors are printed to stderr
/// as a JSON object.
int run_cli(const std::vector<std::string>& args);

}  // namespace acorn
