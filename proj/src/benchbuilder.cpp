#include "acorn/benchbuilder.hpp"

#include <algorithm>

#include "acorn/hashing.hpp"

namespace acorn {

std::string_view to_string(ScenarioKind k) noexcept {
    switch (k) {
        case ScenarioKind::EvidentialOnly: return "evidential_only";
        case ScenarioKind::WithIrrelevant: return "with_irrelevant";
        case ScenarioKind::WithFactualError: return "with_factual_error";
    }
    return "evidential_only";
}

ScenarioKind parse_scenario(std::string_view s) {
    for (auto k : kAllScenarios) {
        if (to_string(k) == s) return k;
    }
    throw InputError("unknown scenario '" + std::string(s) + "'");
}

namespace {

template <class Pred>
Subset<AugmentedSet> filter_sets(std::span<const AugmentedSet> sets, std::string name, Pred&& keep) {
    Subset<AugmentedSet> out;
    for (const auto& s : sets) {
        if (keep(s)) out.records.push_back(s);
    }
    out.manifest.name = std::move(name);
    if (!sets.empty()) {
        out.manifest.dataset_tag = sets.front().query().dataset_tag;
        out.manifest.seed = sets.front().decision.seed;
    }
    out.manifest.stats = dataset_stats(sets.size(), out.records.size());
    return out;
}

}  // namespace

Subset<AugmentedSet> build_par_subset(std::span<const AugmentedSet> sets) {
    auto out = filter_sets(sets, "par_subset", [](const AugmentedSet& s) { return s.count(DocKind::Evidential) > 0; });
    out.manifest.parameters["predicate"] = "at least one evidential document after augmentation";
    return out;
}

Subset<AugmentedSet> build_noise_type_subset(std::span<const AugmentedSet> sets) {
    auto out = filter_sets(sets, "noise_type_subset", [](const AugmentedSet& s) {
        return s.count(DocKind::Evidential) > 0 && s.count(DocKind::Irrelevant) > 0 &&
               s.count(DocKind::FactualError) > 0;
    });
    out.manifest.parameters["predicate"] = "evidential, irrelevant and factual-error documents present";
    return out;
}

std::vector<ScenarioCase> build_scenarios(const AugmentedSet& record) {
    auto first_of = [&](DocKind k) -> const LabeledDocument& {
        const LabeledDocument* best = nullptr;
        for (const auto& d : record.documents) {
            if (d.is(k) && (best == nullptr || d.doc.rank < best->doc.rank)) best = &d;
        }
        if (best == nullptr) {
            throw InputError("build_scenarios: record " + record.query().id + " has no " +
                             std::string(to_string(k)) + " document");
        }
        return *best;
    };
    const auto& evidential = first_of(DocKind::Evidential);
    const auto& irrelevant = first_of(DocKind::Irrelevant);
    const auto& factual = first_of(DocKind::FactualError);

    auto ordered = [](const LabeledDocument& a, const LabeledDocument& b) {
        return a.doc.rank < b.doc.rank ? std::vector{a, b} : std::vector{b, a};
    };
    return {
        {record.query(), ScenarioKind::EvidentialOnly, {evidential}},
        {record.query(), ScenarioKind::WithIrrelevant, ordered(evidential, irrelevant)},
        {record.query(), ScenarioKind::WithFactualError, ordered(evidential, factual)},
    };
}

Strata stratify_by_evidential_count(std::span<const RetrievalSet> sets, std::size_t sample_size,
                                    std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        groups[static_cast<int>(sets[i].count(DocKind::Evidential))].push_back(i);
    }
    Strata out;
    out.sample_size = sample_size;
    for (auto& [n, members] : groups) {
        SeededRng rng(StableHasher{}.str("acorn.strata").u64(seed).i64(n).digest64());
        auto picked = members;
        rng.shuffle(picked);
        picked.resize(std::min(sample_size, picked.size()));
        std::sort(picked.begin(), picked.end());

        Stratum s;
        s.n_evidential = n;
        s.group_size = members.size();
        s.requested = sample_size;
        for (auto i : picked) s.sample.push_back(sets[i]);
        out.by_count.emplace(n, std::move(s));
    }
    return out;
}

}  // namespace acorn
