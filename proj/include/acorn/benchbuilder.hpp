#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "acorn/augmentor.hpp"

namespace acorn {

enum class ScenarioKind { EvidentialOnly, WithIrrelevant, WithFactualError };
inline constexpr ScenarioKind kAllScenarios[] = {
    ScenarioKind::EvidentialOnly, ScenarioKind::WithIrrelevant, ScenarioKind::WithFactualError};

std::string_view to_string(ScenarioKind k) noexcept;
ScenarioKind parse_scenario(std::string_view s);

struct ScenarioCase {
    QueryRecord query;
    ScenarioKind kind = ScenarioKind::EvidentialOnly;
    std::vector<LabeledDocument> documents;
};

struct BenchmarkManifest {
    std::string name;
    std::string dataset_tag;
    std::uint64_t seed = 0;
    DatasetStats stats;
    std::map<std::string, std::string> parameters;
};

template <class T>
struct Subset {
    std::vector<T> records;
    BenchmarkManifest manifest;
};

/// Records with at least one document still evidential after augmentation.
Subset<AugmentedSet> build_par_subset(std::span<const AugmentedSet> sets);

/// Records that contain evidential, irrelevant and factual-error documents.
Subset<AugmentedSet> build_noise_type_subset(std::span<const AugmentedSet> sets);

/// The three cases for one record, each built from the highest-ranked
/// document of every type. Throws InputError when a type is missing.
std::vector<ScenarioCase> build_scenarios(const AugmentedSet& record);

struct Stratum {
    int n_evidential = 0;
    std::size_t group_size = 0;
    std::size_t requested = 0;
    std::vector<RetrievalSet> sample;
    /// Group smaller than the requested sample size.
    bool shortfall() const noexcept { return group_size < requested; }
};

struct Strata {
    std::size_t sample_size = 0;
    std::map<int, Stratum> by_count;
};

/// Groups by evidential count N and draws min(sample_size, group size) per group
/// without replacement; sampled records keep input order.
Strata stratify_by_evidential_count(std::span<const RetrievalSet> sets, std::size_t sample_size,
                                    std::uint64_t seed);

}  // namespace acorn
