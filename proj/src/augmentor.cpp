#include "acorn/augmentor.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <unordered_set>

#include "acorn/gateway.hpp"
#include "acorn/hashing.hpp"
#include "acorn/text.hpp"
#include "http.hpp"

namespace acorn {
namespace {

std::vector<std::string> normalize_all(std::span<const std::string> xs) {
    std::vector<std::string> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(normalize_text(x));
    return out;
}

bool equals_any(const std::string& norm, const std::vector<std::string>& norms) {
    return std::find(norms.begin(), norms.end(), norm) != norms.end();
}

}  // namespace

std::size_t AugmentedSet::count(DocKind k) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(documents.begin(), documents.end(), [k](const auto& d) { return d.is(k); }));
}

int draw_outcome(std::string_view query_id, std::uint64_t seed, int n_evidential) {
    if (n_evidential < 0) throw InputError("draw_outcome: negative evidential count");
    if (n_evidential == 0) return 0;
    return static_cast<int>(hashed_uniform("acorn.augment.outcome", seed, query_id,
                                           static_cast<std::uint64_t>(n_evidential) + 1));
}

// ---------------------------------------------------------------------------
// DistractorPool

DistractorPool::DistractorPool(std::vector<std::string> entries, std::size_t max_candidates)
    : max_candidates_(std::max<std::size_t>(1, max_candidates)) {
    std::unordered_set<std::string> seen;
    for (auto& e : entries) {
        auto surface = trim(e);
        auto norm = normalize_text(surface);
        if (norm.empty() || !seen.insert(norm).second) continue;
        entries_.push_back(std::move(surface));
        normalized_.push_back(std::move(norm));
    }
    if (entries_.empty()) throw InputError("distractor pool is empty");
}

std::string DistractorPool::id() const { return "distractor-pool"; }

std::vector<std::string> DistractorPool::propose(const ProposalRequest& request) const {
    auto excluded = normalize_all(request.aliases);
    excluded.push_back(normalize_text(request.span));

    std::vector<std::string> out;
    std::vector<bool> taken(entries_.size(), false);
    auto try_take = [&](std::size_t idx) {
        if (taken[idx]) return;
        taken[idx] = true;
        if (!equals_any(normalized_[idx], excluded)) out.push_back(entries_[idx]);
    };

    const auto n = entries_.size();
    const std::size_t hashed_tries = 4 * max_candidates_;
    std::size_t last = 0;
    for (std::size_t j = 0; j < hashed_tries && out.size() < max_candidates_; ++j) {
        last = hashed_uniform("acorn.distractor", request.seed, std::to_string(j), n);
        try_take(last);
    }
    for (std::size_t step = 1; step <= n && out.size() < max_candidates_; ++step) {
        try_take((last + step) % n);
    }
    return out;
}

// ---------------------------------------------------------------------------
// FillMaskCorruptor

struct FillMaskCorruptor::Impl {
    explicit Impl(int cap) : limiter(cap) {}
    InFlightLimiter limiter;
    std::string scheme_host;
    std::string path;
};

FillMaskCorruptor::FillMaskCorruptor(FillMaskOptions options)
    : options_(std::move(options)), impl_(std::make_unique<Impl>(std::max(1, options_.max_in_flight))) {
    if (options_.url.empty()) throw InputError("fill-mask corruptor: url is empty");
    std::tie(impl_->scheme_host, impl_->path) = split_url(options_.url);
}

FillMaskCorruptor::~FillMaskCorruptor() = default;

std::string FillMaskCorruptor::id() const { return "fill-mask:" + options_.url; }

std::vector<std::string> FillMaskCorruptor::propose(const ProposalRequest& request) const {
    const nlohmann::json body{{"text", request.masked_text}, {"top_k", options_.top_k}};
    detail::HttpResponse res;
    {
        InFlightLimiter::Slot slot(impl_->limiter);
        peak_.store(impl_->limiter.peak());
        res = detail::http_post_json(impl_->scheme_host, impl_->path, body.dump(), {},
                                     {options_.timeout_ms, options_.timeout_ms});
    }
    if (res.status == 0) throw TransportError("fill-mask service unreachable: " + res.error, true);
    if (res.status != 200) {
        throw TransportError("fill-mask service returned HTTP " + std::to_string(res.status),
                             res.status == 429 || res.status >= 500, res.status);
    }
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(res.body);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("fill-mask response is not JSON: ") + e.what());
    }
    if (!parsed.contains("candidates") || !parsed["candidates"].is_array()) {
        throw ProtocolError("fill-mask response lacks a 'candidates' array");
    }
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& c : parsed["candidates"]) {
        if (!c.is_object() || !c.contains("token") || !c["token"].is_string()) {
            throw ProtocolError("fill-mask candidate lacks a string 'token'");
        }
        const double score = c.contains("score") && c["score"].is_number() ? c["score"].get<double>() : 0.0;
        scored.emplace_back(score, trim(c["token"].get<std::string>()));
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> out;
    out.reserve(scored.size());
    for (auto& [score, token] : scored) {
        if (!token.empty()) out.push_back(std::move(token));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> filter_candidates(std::span<const std::string> candidates,
                                           std::span<const std::string> aliases) {
    const auto norm_aliases = normalize_all(aliases);
    std::unordered_set<std::string> seen;
    std::vector<std::string> out;
    for (const auto& c : candidates) {
        const auto norm = normalize_text(c);
        if (norm.empty() || equals_any(norm, norm_aliases) || !seen.insert(norm).second) continue;
        out.push_back(c);
    }
    return out;
}

CorruptionResult corrupt_document(const LabeledDocument& doc, std::span<const std::string> aliases,
                                  const Corruptor& corruptor, std::uint64_t seed, int max_attempts) {
    if (!doc.is(DocKind::Evidential)) {
        throw InputError("corrupt_document: document " + doc.doc.doc_id + " is not evidential");
    }
    if (aliases.empty()) throw InputError("corrupt_document: alias list is empty");

    const auto& text = doc.doc.text;
    const auto normalized = normalize_with_offsets(text);
    const auto norm_aliases = normalize_all(aliases);

    // Longest alias present; earliest occurrence breaks ties.
    std::size_t best_len = 0;
    std::size_t best_pos = std::string::npos;
    std::string best;
    for (const auto& a : norm_aliases) {
        if (a.empty()) continue;
        const auto pos = normalized.text.find(a);
        if (pos == std::string::npos) continue;
        if (a.size() > best_len || (a.size() == best_len && pos < best_pos)) {
            best_len = a.size();
            best_pos = pos;
            best = a;
        }
    }
    if (best.empty()) {
        throw InputError("corrupt_document: document " + doc.doc.doc_id + " contains no alias");
    }

    std::vector<NormalizedText::Span> ranges;
    for (auto pos = best_pos; pos != std::string::npos; pos = normalized.text.find(best, pos + best.size())) {
        ranges.push_back(normalized.source_range(pos, pos + best.size()));
    }
    const auto& first = ranges.front();
    const std::string original_span = text.substr(first.begin, first.end - first.begin);
    std::string masked = text;
    masked.replace(first.begin, first.end - first.begin, kMaskToken);

    auto substitute = [&](const std::string& replacement) {
        std::string out = text;
        for (auto it = ranges.rbegin(); it != ranges.rend(); ++it) {
            out.replace(it->begin, it->end - it->begin, replacement);
        }
        return out;
    };

    int attempts = 0;
    int round = 0;
    std::unordered_set<std::string> tried;
    std::string last_reason = "no candidates proposed";
    while (attempts < max_attempts) {
        std::vector<std::string> proposals;
        try {
            const auto round_seed =
                round == 0 ? seed : StableHasher{}.str("acorn.corrupt.round").u64(seed).u64(round).digest64();
            proposals = corruptor.propose({masked, original_span, round_seed, aliases});
        } catch (const TransportError& e) {
            ++attempts;
            ++round;
            last_reason = std::string("transport: ") + e.what();
            continue;
        }
        ++round;
        bool fresh = false;
        for (const auto& raw : proposals) {
            if (attempts >= max_attempts) break;
            auto candidate = trim(raw);
            if (!tried.insert(candidate).second) continue;
            fresh = true;
            ++attempts;
            const auto norm = normalize_text(candidate);
            if (norm.empty() || equals_any(norm, norm_aliases)) {
                last_reason = "candidate '" + candidate + "' matches an alias";
                continue;
            }
            auto corrupted = substitute(candidate);
            if (corrupted == text) {
                last_reason = "candidate '" + candidate + "' leaves the text unchanged";
                continue;
            }
            if (contains_normalized(normalize_text(corrupted), norm_aliases)) {
                last_reason = "candidate '" + candidate + "' leaves an alias in the text";
                continue;
            }
            LabeledDocument result = doc;
            result.doc.text = std::move(corrupted);
            result.label = {DocKind::FactualError, Provenance::Augmented};
            return {std::move(result), original_span, candidate};
        }
        if (!fresh) break;
    }
    throw CorruptionFailed("corruption of " + doc.doc.doc_id + " failed after " + std::to_string(attempts) +
                           " attempts: " + last_reason);
}

AugmentedSet augment_set(const RetrievalSet& set, std::uint64_t seed, const Corruptor& corruptor,
                         const AugmentOptions& options) {
    AugmentedSet out{set, {}, set.documents};
    auto& d = out.decision;
    d.query_id = set.query.id;
    d.seed = seed;
    d.corruptor_id = corruptor.id();
    d.n_evidential = static_cast<int>(set.count(DocKind::Evidential));
    const int m = draw_outcome(set.query.id, seed, d.n_evidential);
    if (m == 0) return out;

    std::size_t target = 0;
    for (int seen = 0; target < out.documents.size(); ++target) {
        if (out.documents[target].is(DocKind::Evidential) && ++seen == m) break;
    }
    const auto corrupt_seed = StableHasher{}.str("acorn.augment.corrupt").u64(seed).str(set.query.id).digest64();
    try {
        auto result = corrupt_document(out.documents[target], set.query.answers, corruptor, corrupt_seed,
                                       options.max_attempts);
        d.outcome = m;
        d.corrupted_doc_id = result.document.doc.doc_id;
        d.original_span = std::move(result.original_span);
        d.replacement_span = std::move(result.replacement_span);
        d.original_text = out.documents[target].doc.text;
        out.documents[target] = std::move(result.document);
    } catch (const CorruptionFailed& e) {
        spdlog::warn("query {}: {}; keeping the set unaugmented", set.query.id, e.what());
        d.outcome = 0;
        d.failure = CorruptionFailure{m, e.what()};
    }
    return out;
}

RetrievalSet recover_base(const QueryRecord& query, const std::vector<LabeledDocument>& documents,
                          const AugmentationDecision& decision) {
    RetrievalSet base{query, documents};
    if (!decision.corrupted_doc_id) return base;
    if (!decision.original_text) {
        throw InputError("augmentation of " + query.id + " lacks original_text for the corrupted document");
    }
    for (auto& doc : base.documents) {
        if (doc.doc.doc_id == *decision.corrupted_doc_id) {
            doc.doc.text = *decision.original_text;
            doc.label = {DocKind::Evidential, Provenance::Natural};
            return base;
        }
    }
    throw InputError("augmentation of " + query.id + " names unknown document " + *decision.corrupted_doc_id);
}

}  // namespace acorn
