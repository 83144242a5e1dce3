#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acorn/augmentor.hpp"
#include "acorn/gateway.hpp"

namespace acorn {

inline constexpr std::string_view kAbstentionSentinel = "No relevant information found.";

enum class LabelMode { EvidentialOnly, AllDocs };
std::string_view to_string(LabelMode m) noexcept;
LabelMode parse_label_mode(std::string_view s);

/// Teacher summary S. `text` is absent exactly when `evidential_empty`.
struct SummaryLabel {
    std::string query_id;
    std::optional<std::string> text;
    std::string teacher_model;
    std::vector<std::string> source_doc_ids;
    bool evidential_empty = false;
    LabelMode mode = LabelMode::EvidentialOnly;

    bool operator==(const SummaryLabel&) const = default;
};

struct TrainExample {
    QueryRecord query;
    std::vector<LabeledDocument> documents;
    SummaryLabel label;
};

struct TeacherSettings {
    std::string model_id;
    std::string instruction{kDefaultCompressInstruction};
    int max_output_tokens = 256;
    double temperature = 0.0;
};

/// Instruction as the system prompt; documents in the given (rank) order,
/// each preceded by "Document [i]:", followed by the question.
/// Throws InputError for an empty document list.
ChatRequest build_teacher_prompt(const TeacherSettings& settings,
                                 std::span<const LabeledDocument> docs, std::string_view question);

/// Gateway failure for one record.
class LabelError : public Error {
public:
    LabelError(std::string record_id, const std::string& cause);
    const std::string& record_id() const noexcept { return record_id_; }

private:
    std::string record_id_;
};

SummaryLabel generate_label(const AugmentedSet& set, LabelMode mode, ChatClient& client,
                            const TeacherSettings& settings);

enum class EmptyEvidentialPolicy { Exclude, Sentinel };
EmptyEvidentialPolicy parse_empty_policy(std::string_view s);
std::string_view to_string(EmptyEvidentialPolicy p) noexcept;

struct TrainReport {
    std::size_t emitted = 0;
    std::size_t skipped_empty_evidential = 0;
    std::size_t corruption_fallbacks = 0;
    std::size_t failed = 0;
    std::vector<std::pair<std::string, std::string>> failures;  ///< (record id, reason)
};

/// Supplies the label for one augmented set. Throws on persistent failure.
using LabelSource = std::function<SummaryLabel(const AugmentedSet&)>;

struct TrainDataset {
    std::vector<TrainExample> examples;
    TrainReport report;
};

/// One example per record that still has an evidential document after
/// augmentation (every record under EmptyEvidentialPolicy::Sentinel), in
/// input order. Records whose label
/// source throws are skipped and reported.
TrainDataset build_train_dataset(std::span<const AugmentedSet> sets, const LabelSource& labels,
                                 EmptyEvidentialPolicy policy, int workers = 1);

}  // namespace acorn
