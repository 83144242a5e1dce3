#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acorn/augmentor.hpp"

namespace acorn {

/// Token counter behind CR and F1.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::string id() const = 0;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    std::size_t count(std::string_view text) const { return tokenize(text).size(); }
};

/// Whitespace tokens of the normalized text.
class WhitespaceTokenizer final : public Tokenizer {
public:
    std::string id() const override { return "whitespace-normalized"; }
    std::vector<std::string> tokenize(std::string_view text) const override;
};

struct CompressionOutput {
    std::string query_id;
    std::string summary;
    std::size_t original_token_count = 0;
    std::size_t compressed_token_count = 0;
    std::string compressor_id;
};

/// Builds a CompressionOutput, counting original tokens over the documents joined by
/// newlines and compressed tokens over the summary.
CompressionOutput make_compression_output(std::string query_id, std::string summary,
                                          std::span<const std::string> documents,
                                          std::string compressor_id, const Tokenizer& tokenizer);

struct AnswerOutcome {
    std::string query_id;
    std::string prediction;
    double seconds = 0.0;
};

int exact_match(std::string_view prediction, std::span<const std::string> aliases);
double token_f1(std::string_view prediction, std::span<const std::string> aliases);

/// compressed / original. Throws InputError when the original count is 0.
double compression_ratio(const CompressionOutput& out);

/// Fraction of outputs whose summary still contains an alias. Every output
/// must belong to a record of `subset` that has an evidential document.
double par(std::span<const CompressionOutput> outputs, std::span<const AugmentedSet> subset);

/// One scored prediction. `group_key` distinguishes rows that share a query
/// id (the three scenario cases of one record).
struct ScoredItem {
    std::string query_id;
    std::optional<std::string> scenario;
    std::optional<int> stratum;
    int em = 0;
    double f1 = 0.0;
    std::optional<double> cr;
    std::optional<bool> par_hit;
    double seconds = 0.0;
};

/// Means over one group. n == 0 is the zero-count marker: no metric values.
struct MetricSummary {
    std::size_t n = 0;
    double em = 0.0;  ///< x100
    double f1 = 0.0;  ///< x100
    std::optional<double> cr;
    std::optional<double> par;
    double inference_time = 0.0;

    bool operator==(const MetricSummary&) const = default;
};

struct MetricsReport {
    MetricSummary overall;
    std::map<std::string, MetricSummary> by_scenario;
    std::map<int, MetricSummary> by_stratum;

    bool operator==(const MetricsReport&) const = default;
};

/// Group means over the overall set, every scenario kind (when any item has
/// a scenario) and every evidential-count stratum 0..max (when any item has
/// one). Throws InputError on a duplicate (query id, scenario) pair.
MetricsReport aggregate(std::span<const ScoredItem> items);

struct DeltaRow {
    std::string group;
    std::string metric;
    double clean = 0.0;
    double noisy = 0.0;
    double delta = 0.0;
    std::string formatted;  ///< "a → b (±d)"
};

struct DeltaReport {
    std::vector<DeltaRow> rows;
};

/// Per group and metric: clean, noisy and noisy - clean. Groups and metric
/// sets must match; throws InputError otherwise.
DeltaReport degradation_delta(const MetricsReport& clean, const MetricsReport& noisy);

/// "a → b (±d)" with `decimals` digits.
std::string format_delta(double clean, double noisy, int decimals);

/// Display precision per metric name.
int metric_decimals(std::string_view metric) noexcept;

}  // namespace acorn
