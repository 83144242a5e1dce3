#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "acorn/augmentor.hpp"
#include "acorn/benchbuilder.hpp"
#include "acorn/evaluator.hpp"
#include "acorn/labeler.hpp"

namespace acorn {

using Json = nlohmann::ordered_json;

/// One line of a retrieval / classified / augmented / scenario file. Which
/// optional parts are present tells the stage the file came from.
struct Record {
    struct Ctx {
        RetrievedDocument doc;
        std::optional<NoiseLabel> label;
    };

    QueryRecord query;
    std::vector<Ctx> ctxs;
    std::optional<AugmentationDecision> augmentation;
    std::optional<ScenarioKind> scenario;
    std::optional<int> stratum;
    std::size_t line = 0;

    bool labeled() const noexcept;
    /// (id, scenario) - unique within one file.
    std::string key() const;
};

enum class OnError { FailFast, Skip };
OnError parse_on_error(std::string_view s);

/// Parses and validates one line. Throws ValidationError naming the field.
Record parse_record(std::string_view line, const std::string& file, std::size_t line_no);

/// Streams validated records in file order. In Skip mode invalid lines are
/// collected in errors() and logged; in FailFast mode next() throws.
class DatasetReader {
public:
    explicit DatasetReader(const std::filesystem::path& path, OnError on_error = OnError::FailFast);

    std::optional<Record> next();
    const std::vector<ValidationError>& errors() const noexcept { return errors_; }

private:
    std::filesystem::path path_;
    std::string file_;
    std::ifstream in_;
    OnError on_error_;
    std::size_t line_no_ = 0;
    std::vector<ValidationError> errors_;
    std::unordered_set<std::string> seen_keys_;
};

struct LoadResult {
    std::vector<Record> records;
    std::vector<ValidationError> errors;
};

LoadResult load_dataset(const std::filesystem::path& path, OnError on_error = OnError::FailFast);

std::vector<RetrievedDocument> documents_of(const Record& r);
/// Requires labels on every ctx.
RetrievalSet to_retrieval_set(const Record& r);
/// Requires labels and the augmentation block.
AugmentedSet to_augmented_set(const Record& r);

Json to_json(const RetrievalSet& set);
Json to_json(const AugmentedSet& set);
Json to_json(const ScenarioCase& c);
Json to_json(const AugmentationDecision& d);
Json to_json(const LabeledDocument& d);

// Labels file: {"id","mode","teacher","source_doc_ids","evidential_empty","summary"?}
Json label_to_json(const SummaryLabel& label);
SummaryLabel label_from_json(const Json& j);

/// Train file line: {"id","question","documents":[{"text","label","rank"}],
/// "summary","teacher","mode"}.
Json train_example_to_json(const TrainExample& ex, std::string_view summary);
/// Schema problems of one train line; empty when valid.
std::vector<std::string> validate_train_json(const Json& j);

// Compressions file: {"id","scenario"?,"summary","original_tokens",
// "compressed_tokens","compressor"}
Json compression_to_json(const CompressionOutput& c, const std::optional<ScenarioKind>& scenario);
std::pair<CompressionOutput, std::optional<ScenarioKind>> compression_from_json(const Json& j);

// Answers file: {"id","scenario"?,"prediction","seconds","context"}
Json answer_to_json(const AnswerOutcome& a, const std::optional<ScenarioKind>& scenario,
                    std::string_view context_mode);
std::pair<AnswerOutcome, std::optional<ScenarioKind>> answer_from_json(const Json& j);

Json to_json(const MetricSummary& m);
Json to_json(const MetricsReport& r);
MetricsReport report_from_json(const Json& j);
Json to_json(const DeltaReport& d);
Json to_json(const BenchmarkManifest& m);

/// Reads every line of a JSONL file as JSON. Throws ValidationError on
/// malformed lines.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames over the target on commit().
/// An uncommitted writer removes its temporary file.
class AtomicWriter {
public:
    explicit AtomicWriter(std::filesystem::path target);
    ~AtomicWriter();
    AtomicWriter(const AtomicWriter&) = delete;
    AtomicWriter& operator=(const AtomicWriter&) = delete;

    std::ostream& stream() { return out_; }
    void write_line(const Json& j);
    void commit();

private:
    std::filesystem::path target_;
    std::filesystem::path tmp_;
    std::ofstream out_;
    bool committed_ = false;
};

/// Canonical single-line dump used for every JSONL artifact.
std::string dump_line(const Json& j);

}  // namespace acorn
