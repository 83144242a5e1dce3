#include "acorn/evaluator.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "acorn/benchbuilder.hpp"
#include "acorn/text.hpp"

namespace acorn {

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const {
    return normalized_tokens(text);
}

CompressionOutput make_compression_output(std::string query_id, std::string summary,
                                          std::span<const std::string> documents, std::string compressor_id,
                                          const Tokenizer& tokenizer) {
    std::string joined;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (i) joined.push_back('\n');
        joined += documents[i];
    }
    CompressionOutput out;
    out.query_id = std::move(query_id);
    out.original_token_count = tokenizer.count(joined);
    out.compressed_token_count = tokenizer.count(summary);
    out.summary = std::move(summary);
    out.compressor_id = std::move(compressor_id);
    return out;
}

int exact_match(std::string_view prediction, std::span<const std::string> aliases) {
    const auto pred = normalize_text(prediction);
    for (const auto& a : aliases) {
        if (normalize_text(a) == pred) return 1;
    }
    return 0;
}

double token_f1(std::string_view prediction, std::span<const std::string> aliases) {
    const auto pred = normalized_tokens(prediction);
    std::unordered_map<std::string, int> pred_counts;
    for (const auto& t : pred) ++pred_counts[t];

    double best = 0.0;
    for (const auto& alias : aliases) {
        const auto gold = normalized_tokens(alias);
        if (pred.empty() && gold.empty()) return 1.0;
        if (pred.empty() || gold.empty()) continue;
        auto remaining = pred_counts;
        std::size_t overlap = 0;
        for (const auto& t : gold) {
            auto it = remaining.find(t);
            if (it != remaining.end() && it->second > 0) {
                --it->second;
                ++overlap;
            }
        }
        if (overlap == 0) continue;
        const double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
        const double recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
        best = std::max(best, 2.0 * precision * recall / (precision + recall));
    }
    return best;
}

double compression_ratio(const CompressionOutput& out) {
    if (out.original_token_count == 0) {
        throw InputError("compression_ratio: query " + out.query_id + " has zero original tokens");
    }
    return static_cast<double>(out.compressed_token_count) / static_cast<double>(out.original_token_count);
}

double par(std::span<const CompressionOutput> outputs, std::span<const AugmentedSet> subset) {
    std::unordered_map<std::string, const AugmentedSet*> by_id;
    for (const auto& s : subset) by_id.emplace(s.query().id, &s);
    if (outputs.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& o : outputs) {
        auto it = by_id.find(o.query_id);
        if (it == by_id.end() || it->second->count(DocKind::Evidential) == 0) {
            throw InputError("par: query " + o.query_id + " is not in the PAR subset");
        }
        if (contains_answer(o.summary, it->second->query().answers)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(outputs.size());
}

namespace {

MetricSummary summarize(const std::vector<const ScoredItem*>& items) {
    MetricSummary m;
    m.n = items.size();
    if (items.empty()) return m;
    double em = 0, f1 = 0, secs = 0, cr = 0, par_hits = 0;
    std::size_t cr_n = 0, par_n = 0;
    for (const auto* it : items) {
        em += it->em;
        f1 += it->f1;
        secs += it->seconds;
        if (it->cr) {
            cr += *it->cr;
            ++cr_n;
        }
        if (it->par_hit) {
            par_hits += *it->par_hit ? 1.0 : 0.0;
            ++par_n;
        }
    }
    const auto n = static_cast<double>(items.size());
    m.em = 100.0 * em / n;
    m.f1 = 100.0 * f1 / n;
    m.inference_time = secs / n;
    if (cr_n) m.cr = cr / static_cast<double>(cr_n);
    if (par_n) m.par = par_hits / static_cast<double>(par_n);
    return m;
}

}  // namespace

MetricsReport aggregate(std::span<const ScoredItem> items) {
    std::set<std::pair<std::string, std::string>> keys;
    bool any_scenario = false;
    int max_stratum = -1;
    for (const auto& it : items) {
        if (!keys.emplace(it.query_id, it.scenario.value_or("")).second) {
            throw InputError("aggregate: duplicate outcome for query " + it.query_id +
                             (it.scenario ? " scenario " + *it.scenario : std::string()));
        }
        any_scenario = any_scenario || it.scenario.has_value();
        if (it.stratum) max_stratum = std::max(max_stratum, *it.stratum);
    }

    MetricsReport report;
    std::vector<const ScoredItem*> all;
    for (const auto& it : items) all.push_back(&it);
    report.overall = summarize(all);

    if (any_scenario) {
        for (auto kind : kAllScenarios) {
            const std::string name(to_string(kind));
            std::vector<const ScoredItem*> group;
            for (const auto& it : items) {
                if (it.scenario == name) group.push_back(&it);
            }
            report.by_scenario[name] = summarize(group);
        }
    }
    for (int n = 0; n <= max_stratum; ++n) {
        std::vector<const ScoredItem*> group;
        for (const auto& it : items) {
            if (it.stratum == n) group.push_back(&it);
        }
        report.by_stratum[n] = summarize(group);
    }
    return report;
}

int metric_decimals(std::string_view metric) noexcept {
    if (metric == "em" || metric == "f1") return 2;
    if (metric == "cr" || metric == "par") return 4;
    if (metric == "inference_time") return 3;
    return 2;
}

std::string format_delta(double clean, double noisy, int decimals) {
    const double scale = std::pow(10.0, decimals);
    const double a = std::round(clean * scale) / scale;
    const double b = std::round(noisy * scale) / scale;
    double d = std::round((b - a) * scale) / scale;
    if (d == 0.0) d = 0.0;  // no "-0.00"
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.*f \xE2\x86\x92 %.*f (%+.*f)", decimals, a, decimals, b, decimals, d);
    return buf;
}

namespace {

void delta_group(const std::string& group, const MetricSummary& clean, const MetricSummary& noisy,
                 DeltaReport& out) {
    if ((clean.n == 0) != (noisy.n == 0)) {
        throw InputError("degradation_delta: group " + group + " is empty in only one report");
    }
    if (clean.n == 0) return;
    auto row = [&](const std::string& metric, double a, double b) {
        out.rows.push_back({group, metric, a, b, b - a, format_delta(a, b, metric_decimals(metric))});
    };
    row("em", clean.em, noisy.em);
    row("f1", clean.f1, noisy.f1);
    auto optional_row = [&](const std::string& metric, const std::optional<double>& a,
                            const std::optional<double>& b) {
        if (a.has_value() != b.has_value()) {
            throw InputError("degradation_delta: metric " + metric + " present in only one report (group " +
                             group + ")");
        }
        if (a) row(metric, *a, *b);
    };
    optional_row("cr", clean.cr, noisy.cr);
    optional_row("par", clean.par, noisy.par);
    row("inference_time", clean.inference_time, noisy.inference_time);
}

template <class K>
void delta_groups(const std::string& prefix, const std::map<K, MetricSummary>& clean,
                  const std::map<K, MetricSummary>& noisy, DeltaReport& out) {
    if (clean.size() != noisy.size()) throw InputError("degradation_delta: " + prefix + " groups differ");
    for (const auto& [key, summary] : clean) {
        auto it = noisy.find(key);
        if (it == noisy.end()) throw InputError("degradation_delta: " + prefix + " groups differ");
        std::string name;
        if constexpr (std::is_same_v<K, int>) {
            name = prefix + ":" + std::to_string(key);
        } else {
            name = prefix + ":" + key;
        }
        delta_group(name, summary, it->second, out);
    }
}

}  // namespace

DeltaReport degradation_delta(const MetricsReport& clean, const MetricsReport& noisy) {
    DeltaReport out;
    delta_group("overall", clean.overall, noisy.overall, out);
    delta_groups("scenario", clean.by_scenario, noisy.by_scenario, out);
    delta_groups("stratum", clean.by_stratum, noisy.by_stratum, out);
    return out;
}

}  // namespace acorn
