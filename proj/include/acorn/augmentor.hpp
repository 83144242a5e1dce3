#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acorn/corpus.hpp"

namespace acorn {

inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr int kDefaultCorruptionAttempts = 5;

struct CorruptionFailure {
    int drawn_outcome = 0;
    std::string reason;

    bool operator==(const CorruptionFailure&) const = default;
};

/// Full record of what augmentation did to one retrieval set.
/// outcome 0 means nothing was corrupted; m >= 1 names the m-th evidential
/// document in rank order.
struct AugmentationDecision {
    std::string query_id;
    int n_evidential = 0;
    int outcome = 0;
    std::uint64_t seed = 0;
    std::optional<std::string> corrupted_doc_id;
    std::optional<std::string> original_span;
    std::optional<std::string> replacement_span;
    /// Pre-corruption text of the corrupted document, so the base set can be
    /// recovered from an augmented file.
    std::optional<std::string> original_text;
    std::string corruptor_id;
    std::optional<CorruptionFailure> failure;

    bool operator==(const AugmentationDecision&) const = default;
};

struct AugmentedSet {
    RetrievalSet base;
    AugmentationDecision decision;
    std::vector<LabeledDocument> documents;

    const QueryRecord& query() const noexcept { return base.query; }
    std::size_t count(DocKind k) const noexcept;
    bool operator==(const AugmentedSet&) const = default;
};

/// Outcome m in {0..N}, uniform over the N+1 choices, as a pure function of
/// (seed, query_id, N). Throws InputError for negative N.
int draw_outcome(std::string_view query_id, std::uint64_t seed, int n_evidential);

struct ProposalRequest {
    std::string_view masked_text;  ///< contains kMaskToken exactly once
    std::string_view span;         ///< surface form being replaced
    std::uint64_t seed = 0;
    /// The record's own aliases; candidates equal to one of them are useless.
    std::span<const std::string> aliases;
};

/// Source of replacement entities. Implementations must be safe to call
/// concurrently.
class Corruptor {
public:
    virtual ~Corruptor() = default;
    virtual std::string id() const = 0;
    /// Ordered candidate list, most preferred first. May throw TransportError.
    virtual std::vector<std::string> propose(const ProposalRequest& request) const = 0;
};

/// Offline corruptor: draws answers of other queries by seeded hash.
class DistractorPool final : public Corruptor {
public:
    /// Entries are deduplicated by normalization, keeping the first surface
    /// form. Throws InputError when no entry survives.
    explicit DistractorPool(std::vector<std::string> entries, std::size_t max_candidates = 5);

    std::string id() const override;
    std::vector<std::string> propose(const ProposalRequest& request) const override;
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::vector<std::string> entries_;
    std::vector<std::string> normalized_;
    std::size_t max_candidates_;
};

struct FillMaskOptions {
    std::string url;  ///< full endpoint, e.g. http://127.0.0.1:9000/fill-mask
    int top_k = 10;
    int max_in_flight = 4;
    int timeout_ms = 30000;
};

/// Adapter for an external fill-mask HTTP service:
/// POST {"text", "top_k"} -> {"candidates": [{"token", "score"}, ..]}.
class FillMaskCorruptor final : public Corruptor {
public:
    explicit FillMaskCorruptor(FillMaskOptions options);
    ~FillMaskCorruptor() override;

    std::string id() const override;
    std::vector<std::string> propose(const ProposalRequest& request) const override;

    int peak_in_flight() const noexcept { return peak_.load(); }

private:
    struct Impl;
    FillMaskOptions options_;
    std::unique_ptr<Impl> impl_;
    mutable std::atomic<int> peak_{0};
};

/// Drops candidates that normalize to "" or to one of the aliases, and
/// duplicates. Order is preserved.
std::vector<std::string> filter_candidates(std::span<const std::string> candidates,
                                           std::span<const std::string> aliases);

struct CorruptionResult {
    LabeledDocument document;
    std::string original_span;
    std::string replacement_span;
};

/// Replaces every occurrence of the longest alias found in the document
/// (earliest occurrence wins ties) with a corruptor-proposed entity. The
/// result is labeled (FactualError, Augmented) and contains no alias.
/// Throws InputError when the document is not evidential and
/// CorruptionFailed when `max_attempts` candidates were all unusable.
CorruptionResult corrupt_document(const LabeledDocument& doc, std::span<const std::string> aliases,
                                  const Corruptor& corruptor, std::uint64_t seed,
                                  int max_attempts = kDefaultCorruptionAttempts);

struct AugmentOptions {
    int max_attempts = kDefaultCorruptionAttempts;
};

/// Draws the outcome for `set` and corrupts the chosen evidential document.
/// CorruptionFailed is absorbed: the decision falls back to outcome 0 and
/// records the failure.
AugmentedSet augment_set(const RetrievalSet& set, std::uint64_t seed, const Corruptor& corruptor,
                         const AugmentOptions& options = {});

/// Rebuilds the pre-augmentation set from documents and decision.
RetrievalSet recover_base(const QueryRecord& query, const std::vector<LabeledDocument>& documents,
                          const AugmentationDecision& decision);

}  // namespace acorn
