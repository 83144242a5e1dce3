#include "acorn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "acorn/text.hpp"

namespace acorn {

std::string_view to_string(DocKind k) noexcept {
    switch (k) {
        case DocKind::Evidential: return "evidential";
        case DocKind::Irrelevant: return "irrelevant";
        case DocKind::FactualError: return "factual_error";
    }
    return "irrelevant";
}

std::string_view to_string(Provenance p) noexcept {
    return p == Provenance::Natural ? "natural" : "augmented";
}

DocKind parse_doc_kind(std::string_view s) {
    if (s == "evidential") return DocKind::Evidential;
    if (s == "irrelevant") return DocKind::Irrelevant;
    if (s == "factual_error") return DocKind::FactualError;
    throw InputError("unknown document label '" + std::string(s) + "'");
}

Provenance parse_provenance(std::string_view s) {
    if (s == "natural") return Provenance::Natural;
    if (s == "augmented") return Provenance::Augmented;
    throw InputError("unknown provenance '" + std::string(s) + "'");
}

std::size_t RetrievalSet::count(DocKind k) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(documents.begin(), documents.end(), [k](const auto& d) { return d.is(k); }));
}

void validate_query(const QueryRecord& q) {
    if (q.id.empty()) throw InputError("query: field 'id' is empty");
    if (q.answers.empty()) throw InputError("query " + q.id + ": field 'answers' is empty");
    for (const auto& a : q.answers) {
        if (normalize_text(a).empty()) {
            throw InputError("query " + q.id + ": field 'answers' has an alias that normalizes to empty");
        }
    }
}

RetrievalSet classify_documents(const QueryRecord& query, std::vector<RetrievedDocument> docs) {
    if (query.answers.empty()) throw InputError("classify_documents: query " + query.id + " has no answers");
    if (docs.empty()) throw InputError("classify_documents: query " + query.id + " has no documents");
    std::set<int> ranks;
    for (const auto& d : docs) {
        if (!ranks.insert(d.rank).second) {
            throw InputError("classify_documents: duplicate rank " + std::to_string(d.rank) +
                             " in query " + query.id);
        }
    }
    std::stable_sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });

    std::vector<std::string> aliases;
    aliases.reserve(query.answers.size());
    for (const auto& a : query.answers) aliases.push_back(normalize_text(a));

    RetrievalSet out{query, {}};
    out.documents.reserve(docs.size());
    for (auto& d : docs) {
        const bool evidential = contains_normalized(normalize_text(d.text), aliases);
        out.documents.push_back(
            {std::move(d), {evidential ? DocKind::Evidential : DocKind::Irrelevant, Provenance::Natural}});
    }
    return out;
}

DatasetStats dataset_stats(std::size_t full, std::size_t subset) {
    DatasetStats s{full, subset, 0.0};
    if (full > 0) {
        s.percentage = std::round(10000.0 * static_cast<double>(subset) / static_cast<double>(full)) / 100.0;
    }
    return s;
}

std::string DatasetStats::percentage_text() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", percentage);
    return buf;
}

}  // namespace acorn
