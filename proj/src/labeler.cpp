#include "acorn/labeler.hpp"

#include <spdlog/spdlog.h>

#include "acorn/parallel.hpp"

namespace acorn {

std::string_view to_string(LabelMode m) noexcept {
    return m == LabelMode::EvidentialOnly ? "evidential_only" : "all_docs";
}

LabelMode parse_label_mode(std::string_view s) {
    if (s == "evidential_only" || s == "evidential") return LabelMode::EvidentialOnly;
    if (s == "all_docs" || s == "all") return LabelMode::AllDocs;
    throw InputError("unknown label mode '" + std::string(s) + "'");
}

EmptyEvidentialPolicy parse_empty_policy(std::string_view s) {
    if (s == "exclude") return EmptyEvidentialPolicy::Exclude;
    if (s == "sentinel") return EmptyEvidentialPolicy::Sentinel;
    throw InputError("unknown empty-evidential policy '" + std::string(s) + "'");
}

std::string_view to_string(EmptyEvidentialPolicy p) noexcept {
    return p == EmptyEvidentialPolicy::Exclude ? "exclude" : "sentinel";
}

LabelError::LabelError(std::string record_id, const std::string& cause)
    : Error("labeling " + record_id + ": " + cause), record_id_(std::move(record_id)) {}

ChatRequest build_teacher_prompt(const TeacherSettings& settings, std::span<const LabeledDocument> docs,
                                 std::string_view question) {
    if (docs.empty()) throw InputError("build_teacher_prompt: no documents");
    ChatRequest req;
    req.model_id = settings.model_id;
    req.system_prompt = settings.instruction;
    req.max_output_tokens = settings.max_output_tokens;
    req.temperature = settings.temperature;
    std::string& user = req.user_prompt;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        user += "Document [" + std::to_string(i + 1) + "]: ";
        user += docs[i].doc.text;
        user += "\n\n";
    }
    user += "Question: ";
    user += question;
    return req;
}

SummaryLabel generate_label(const AugmentedSet& set, LabelMode mode, ChatClient& client,
                            const TeacherSettings& settings) {
    SummaryLabel label;
    label.query_id = set.query().id;
    label.teacher_model = settings.model_id;
    label.mode = mode;

    std::vector<LabeledDocument> shown;
    for (const auto& d : set.documents) {
        if (mode == LabelMode::AllDocs || d.is(DocKind::Evidential)) shown.push_back(d);
    }
    if (shown.empty()) {
        label.evidential_empty = true;
        return label;
    }
    for (const auto& d : shown) label.source_doc_ids.push_back(d.doc.doc_id);
    try {
        label.text = client.complete(build_teacher_prompt(settings, shown, set.query().question));
    } catch (const Error& e) {
        throw LabelError(set.query().id, e.what());
    }
    return label;
}

TrainDataset build_train_dataset(std::span<const AugmentedSet> sets, const LabelSource& labels,
                                 EmptyEvidentialPolicy policy, int workers) {
    struct Outcome {
        std::optional<SummaryLabel> label;
        std::string failure;
    };
    auto outcomes = parallel_map<Outcome>(sets.size(), workers, [&](std::size_t i) {
        Outcome o;
        try {
            o.label = labels(sets[i]);
        } catch (const std::exception& e) {
            o.failure = e.what();
        }
        return o;
    });

    TrainDataset out;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const auto& set = sets[i];
        if (set.decision.failure) ++out.report.corruption_fallbacks;
        auto& o = outcomes[i];
        if (!o.label) {
            spdlog::warn("skipping {}: {}", set.query().id, o.failure);
            ++out.report.failed;
            out.report.failures.emplace_back(set.query().id, o.failure);
            continue;
        }
        if (o.label->mode != LabelMode::EvidentialOnly) {
            throw InputError("training examples need evidential-only labels; record " + set.query().id +
                             " has mode " + std::string(to_string(o.label->mode)));
        }
        if (o.label->evidential_empty && policy == EmptyEvidentialPolicy::Exclude) {
            ++out.report.skipped_empty_evidential;
            continue;
        }
        out.examples.push_back({set.query(), set.documents, std::move(*o.label)});
        ++out.report.emitted;
    }
    return out;
}

}  // namespace acorn
