#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acorn/error.hpp"

namespace acorn {

/// One ODQA item. Any alias counts as the answer string.
struct QueryRecord {
    std::string id;
    std::string question;
    std::vector<std::string> answers;
    std::string dataset_tag;

    bool operator==(const QueryRecord&) const = default;
};

struct RetrievedDocument {
    std::string doc_id;
    std::optional<std::string> title;
    std::string text;
    int rank = 1;
    std::optional<double> score;

    bool operator==(const RetrievedDocument&) const = default;
};

enum class DocKind { Evidential, Irrelevant, FactualError };
enum class Provenance { Natural, Augmented };

std::string_view to_string(DocKind k) noexcept;
std::string_view to_string(Provenance p) noexcept;
DocKind parse_doc_kind(std::string_view s);
Provenance parse_provenance(std::string_view s);

struct NoiseLabel {
    DocKind kind = DocKind::Irrelevant;
    Provenance provenance = Provenance::Natural;

    bool operator==(const NoiseLabel&) const = default;
};

struct LabeledDocument {
    RetrievedDocument doc;
    NoiseLabel label;

    bool operator==(const LabeledDocument&) const = default;
    bool is(DocKind k) const noexcept { return label.kind == k; }
};

/// Top-k documents for one query, sorted by ascending rank, k >= 1.
struct RetrievalSet {
    QueryRecord query;
    std::vector<LabeledDocument> documents;

    std::size_t count(DocKind k) const noexcept;
    bool operator==(const RetrievalSet&) const = default;
};

/// Labels each document Evidential iff it contains an alias, else Irrelevant.
/// Output is sorted by rank. Throws InputError on duplicate ranks, an empty
/// alias list, or an empty document list.
RetrievalSet classify_documents(const QueryRecord& query, std::vector<RetrievedDocument> docs);

struct DatasetStats {
    std::size_t full = 0;
    std::size_t subset = 0;
    /// 100 * subset / full, rounded to two decimals; 0 when full == 0.
    double percentage = 0.0;

    /// Percentage with exactly two decimals, e.g. "39.25".
    std::string percentage_text() const;
};

DatasetStats dataset_stats(std::size_t full, std::size_t subset);

template <class Set, class Pred>
DatasetStats dataset_stats(std::span<const Set> sets, Pred&& predicate) {
    std::size_t subset = 0;
    for (const auto& s : sets) {
        if (predicate(s)) ++subset;
    }
    return dataset_stats(sets.size(), subset);
}

/// Checks QueryRecord invariants; throws InputError naming the field.
void validate_query(const QueryRecord& q);

}  // namespace acorn
