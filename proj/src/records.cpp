#include "acorn/records.hpp"

#include <spdlog/spdlog.h>

#include <set>
#include <unistd.h>

#include "acorn/text.hpp"

namespace acorn {
namespace {

class FieldReader {
public:
    FieldReader(const std::string& file, std::size_t line) : file_(file), line_(line) {}

    [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
        throw ValidationError(file_, line_, field, msg);
    }

    const Json& require(const Json& obj, const char* key, const std::string& path) const {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) fail(path, "missing required field");
        return *it;
    }

    std::string string(const Json& obj, const char* key, const std::string& path, bool allow_empty = false) const {
        const auto& v = require(obj, key, path);
        if (!v.is_string()) fail(path, "expected a string");
        auto s = v.get<std::string>();
        if (!allow_empty && trim(s).empty()) fail(path, "must not be empty");
        return s;
    }

    std::optional<std::string> optional_string(const Json& obj, const char* key, const std::string& path) const {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) fail(path, "expected a string");
        return it->get<std::string>();
    }

    std::int64_t integer(const Json& obj, const char* key, const std::string& path) const {
        const auto& v = require(obj, key, path);
        if (!v.is_number_integer()) fail(path, "expected an integer");
        return v.get<std::int64_t>();
    }

private:
    const std::string& file_;
    std::size_t line_;
};

std::string id_string(const Json& v, const FieldReader& r, const std::string& path) {
    if (v.is_string()) {
        auto s = v.get<std::string>();
        if (s.empty()) r.fail(path, "must not be empty");
        return s;
    }
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    r.fail(path, "expected a string id");
}

AugmentationDecision parse_decision(const Json& a, const std::string& query_id, const FieldReader& r) {
    if (!a.is_object()) r.fail("augmentation", "expected an object");
    AugmentationDecision d;
    d.query_id = query_id;
    d.outcome = static_cast<int>(r.integer(a, "outcome", "augmentation.outcome"));
    d.n_evidential = static_cast<int>(r.integer(a, "n_evidential", "augmentation.n_evidential"));
    const auto& seed = r.require(a, "seed", "augmentation.seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) r.fail("augmentation.seed", "expected an integer");
    d.seed = seed.get<std::uint64_t>();
    d.corrupted_doc_id = r.optional_string(a, "corrupted_doc_id", "augmentation.corrupted_doc_id");
    d.original_span = r.optional_string(a, "original_span", "augmentation.original_span");
    d.replacement_span = r.optional_string(a, "replacement_span", "augmentation.replacement_span");
    d.original_text = r.optional_string(a, "original_text", "augmentation.original_text");
    d.corruptor_id = r.string(a, "corruptor", "augmentation.corruptor", true);
    if (auto f = a.find("failure"); f != a.end() && !f->is_null()) {
        d.failure = CorruptionFailure{static_cast<int>(r.integer(*f, "drawn_outcome", "augmentation.failure.drawn_outcome")),
                                      r.string(*f, "reason", "augmentation.failure.reason", true)};
    }
    if (d.n_evidential < 0 || d.outcome < 0 || d.outcome > d.n_evidential) {
        r.fail("augmentation.outcome", "must lie in 0..n_evidential");
    }
    if ((d.outcome == 0) != !d.corrupted_doc_id.has_value()) {
        r.fail("augmentation.corrupted_doc_id", "present iff outcome >= 1");
    }
    return d;
}

}  // namespace

bool Record::labeled() const noexcept {
    for (const auto& c : ctxs) {
        if (!c.label) return false;
    }
    return !ctxs.empty();
}

std::string Record::key() const {
    return scenario ? query.id + "\x1f" + std::string(to_string(*scenario)) : query.id;
}

OnError parse_on_error(std::string_view s) {
    if (s == "fail") return OnError::FailFast;
    if (s == "skip") return OnError::Skip;
    throw InputError("unknown error mode '" + std::string(s) + "' (expected fail or skip)");
}

Record parse_record(std::string_view line, const std::string& file, std::size_t line_no) {
    const FieldReader r(file, line_no);
    if (!is_valid_utf8(line)) r.fail("<line>", "not valid UTF-8");
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::exception& e) {
        r.fail("<line>", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) r.fail("<line>", "expected a JSON object");

    Record rec;
    rec.line = line_no;
    rec.query.id = id_string(r.require(j, "id", "id"), r, "id");
    rec.query.question = r.string(j, "question", "question");
    const auto& answers = r.require(j, "answers", "answers");
    if (!answers.is_array()) r.fail("answers", "expected an array of strings");
    if (answers.empty()) r.fail("answers", "must not be empty");
    for (const auto& a : answers) {
        if (!a.is_string()) r.fail("answers", "expected an array of strings");
        auto alias = a.get<std::string>();
        if (normalize_text(alias).empty()) r.fail("answers", "alias '" + alias + "' normalizes to empty");
        rec.query.answers.push_back(std::move(alias));
    }
    rec.query.dataset_tag = r.optional_string(j, "dataset", "dataset").value_or("");

    const auto& ctxs = r.require(j, "ctxs", "ctxs");
    if (!ctxs.is_array()) r.fail("ctxs", "expected an array");
    if (ctxs.empty()) r.fail("ctxs", "must not be empty");
    std::set<std::int64_t> ranks;
    std::set<std::string> ids;
    std::size_t labeled = 0;
    for (std::size_t i = 0; i < ctxs.size(); ++i) {
        const auto& c = ctxs[i];
        const auto path = "ctxs[" + std::to_string(i) + "]";
        if (!c.is_object()) r.fail(path, "expected an object");
        Record::Ctx ctx;
        ctx.doc.doc_id = id_string(r.require(c, "id", path + ".id"), r, path + ".id");
        ctx.doc.title = r.optional_string(c, "title", path + ".title");
        ctx.doc.text = r.string(c, "text", path + ".text");
        const auto rank = r.integer(c, "rank", path + ".rank");
        if (rank < 1) r.fail(path + ".rank", "must be >= 1");
        if (!ranks.insert(rank).second) r.fail(path + ".rank", "duplicate rank " + std::to_string(rank));
        ctx.doc.rank = static_cast<int>(rank);
        if (!ids.insert(ctx.doc.doc_id).second) r.fail(path + ".id", "duplicate document id " + ctx.doc.doc_id);
        if (auto s = c.find("score"); s != c.end() && !s->is_null()) {
            if (s->is_number()) {
                ctx.doc.score = s->get<double>();
            } else if (s->is_string()) {
                try {
                    ctx.doc.score = std::stod(s->get<std::string>());
                } catch (const std::exception&) {
                    r.fail(path + ".score", "expected a number");
                }
            } else {
                r.fail(path + ".score", "expected a number");
            }
        }
        const auto label = r.optional_string(c, "label", path + ".label");
        const auto provenance = r.optional_string(c, "provenance", path + ".provenance");
        if (label.has_value() != provenance.has_value()) {
            r.fail(path + (label ? ".provenance" : ".label"), "label and provenance must appear together");
        }
        if (label) {
            NoiseLabel nl;
            try {
                nl.kind = parse_doc_kind(*label);
            } catch (const InputError& e) {
                r.fail(path + ".label", e.what());
            }
            try {
                nl.provenance = parse_provenance(*provenance);
            } catch (const InputError& e) {
                r.fail(path + ".provenance", e.what());
            }
            if (nl.kind == DocKind::FactualError && nl.provenance != Provenance::Augmented) {
                r.fail(path + ".provenance", "factual_error documents must be augmented");
            }
            ctx.label = nl;
            ++labeled;
        }
        rec.ctxs.push_back(std::move(ctx));
    }
    if (labeled != 0 && labeled != rec.ctxs.size()) r.fail("ctxs", "either every document is labeled or none is");

    if (auto a = j.find("augmentation"); a != j.end() && !a->is_null()) {
        rec.augmentation = parse_decision(*a, rec.query.id, r);
    }
    if (auto s = r.optional_string(j, "scenario", "scenario")) {
        try {
            rec.scenario = parse_scenario(*s);
        } catch (const InputError& e) {
            r.fail("scenario", e.what());
        }
    }
    if (j.contains("stratum") && !j["stratum"].is_null()) {
        rec.stratum = static_cast<int>(r.integer(j, "stratum", "stratum"));
    }
    return rec;
}

DatasetReader::DatasetReader(const std::filesystem::path& path, OnError on_error)
    : path_(path), file_(path.string()), in_(path, std::ios::binary), on_error_(on_error) {
    if (!in_) throw InputError("cannot open " + file_);
}

std::optional<Record> DatasetReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        try {
            auto rec = parse_record(line, file_, line_no_);
            if (!seen_keys_.insert(rec.key()).second) {
                throw ValidationError(file_, line_no_, "id", "duplicate id " + rec.query.id);
            }
            return rec;
        } catch (const ValidationError& e) {
            if (on_error_ == OnError::FailFast) throw;
            spdlog::warn("skipping record: {}", e.what());
            errors_.push_back(e);
        }
    }
    return std::nullopt;
}

LoadResult load_dataset(const std::filesystem::path& path, OnError on_error) {
    DatasetReader reader(path, on_error);
    LoadResult out;
    while (auto rec = reader.next()) out.records.push_back(std::move(*rec));
    out.errors = reader.errors();
    return out;
}

std::vector<RetrievedDocument> documents_of(const Record& r) {
    std::vector<RetrievedDocument> out;
    out.reserve(r.ctxs.size());
    for (const auto& c : r.ctxs) out.push_back(c.doc);
    return out;
}

RetrievalSet to_retrieval_set(const Record& r) {
    if (!r.labeled()) throw InputError("record " + r.query.id + " is not classified");
    RetrievalSet set{r.query, {}};
    for (const auto& c : r.ctxs) set.documents.push_back({c.doc, *c.label});
    std::stable_sort(set.documents.begin(), set.documents.end(),
                     [](const auto& a, const auto& b) { return a.doc.rank < b.doc.rank; });
    return set;
}

AugmentedSet to_augmented_set(const Record& r) {
    if (!r.augmentation) throw InputError("record " + r.query.id + " has no augmentation block");
    auto current = to_retrieval_set(r);
    AugmentedSet out;
    out.decision = *r.augmentation;
    out.documents = current.documents;
    out.base = recover_base(r.query, current.documents, out.decision);
    return out;
}

Json to_json(const LabeledDocument& d) {
    Json c;
    c["id"] = d.doc.doc_id;
    if (d.doc.title) c["title"] = *d.doc.title;
    c["text"] = d.doc.text;
    c["rank"] = d.doc.rank;
    if (d.doc.score) c["score"] = *d.doc.score;
    c["label"] = to_string(d.label.kind);
    c["provenance"] = to_string(d.label.provenance);
    return c;
}

namespace {

Json record_json(const QueryRecord& q, const std::vector<LabeledDocument>& docs) {
    Json j;
    j["id"] = q.id;
    j["question"] = q.question;
    j["answers"] = q.answers;
    j["dataset"] = q.dataset_tag;
    Json ctxs = Json::array();
    for (const auto& d : docs) ctxs.push_back(to_json(d));
    j["ctxs"] = std::move(ctxs);
    return j;
}

}  // namespace

Json to_json(const RetrievalSet& set) { return record_json(set.query, set.documents); }

Json to_json(const AugmentationDecision& d) {
    Json a;
    a["outcome"] = d.outcome;
    a["n_evidential"] = d.n_evidential;
    a["seed"] = d.seed;
    if (d.corrupted_doc_id) a["corrupted_doc_id"] = *d.corrupted_doc_id;
    if (d.original_span) a["original_span"] = *d.original_span;
    if (d.replacement_span) a["replacement_span"] = *d.replacement_span;
    if (d.original_text) a["original_text"] = *d.original_text;
    a["corruptor"] = d.corruptor_id;
    if (d.failure) a["failure"] = {{"drawn_outcome", d.failure->drawn_outcome}, {"reason", d.failure->reason}};
    return a;
}

Json to_json(const AugmentedSet& set) {
    auto j = record_json(set.query(), set.documents);
    j["augmentation"] = to_json(set.decision);
    return j;
}

Json to_json(const ScenarioCase& c) {
    auto j = record_json(c.query, c.documents);
    j["scenario"] = to_string(c.kind);
    return j;
}

Json label_to_json(const SummaryLabel& label) {
    Json j;
    j["id"] = label.query_id;
    j["mode"] = to_string(label.mode);
    j["teacher"] = label.teacher_model;
    j["source_doc_ids"] = label.source_doc_ids;
    j["evidential_empty"] = label.evidential_empty;
    if (label.text) j["summary"] = *label.text;
    return j;
}

SummaryLabel label_from_json(const Json& j) {
    try {
        SummaryLabel l;
        l.query_id = j.at("id").get<std::string>();
        l.mode = parse_label_mode(j.at("mode").get<std::string>());
        l.teacher_model = j.at("teacher").get<std::string>();
        l.source_doc_ids = j.at("source_doc_ids").get<std::vector<std::string>>();
        l.evidential_empty = j.at("evidential_empty").get<bool>();
        if (j.contains("summary") && !j["summary"].is_null()) l.text = j["summary"].get<std::string>();
        if (l.evidential_empty && (l.text || !l.source_doc_ids.empty())) {
            throw InputError("label " + l.query_id + ": evidential_empty label carries a summary or sources");
        }
        if (!l.evidential_empty && !l.text) throw InputError("label " + l.query_id + ": missing summary");
        return l;
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed label record: ") + e.what());
    }
}

Json train_example_to_json(const TrainExample& ex, std::string_view summary) {
    Json j;
    j["id"] = ex.query.id;
    j["question"] = ex.query.question;
    Json docs = Json::array();
    for (const auto& d : ex.documents) {
        docs.push_back({{"text", d.doc.text}, {"label", to_string(d.label.kind)}, {"rank", d.doc.rank}});
    }
    j["documents"] = std::move(docs);
    j["summary"] = summary;
    j["teacher"] = ex.label.teacher_model;
    j["mode"] = to_string(ex.label.mode);
    return j;
}

std::vector<std::string> validate_train_json(const Json& j) {
    std::vector<std::string> problems;
    auto need_string = [&](const char* key, bool nonempty) {
        if (!j.contains(key) || !j[key].is_string()) {
            problems.push_back(std::string(key) + ": expected a string");
        } else if (nonempty && trim(j[key].get<std::string>()).empty()) {
            problems.push_back(std::string(key) + ": must not be empty");
        }
    };
    if (!j.is_object()) return {"<line>: expected an object"};
    need_string("id", true);
    need_string("question", true);
    need_string("summary", true);
    need_string("teacher", false);
    need_string("mode", true);
    if (j.contains("mode") && j["mode"].is_string()) {
        try {
            parse_label_mode(j["mode"].get<std::string>());
        } catch (const InputError& e) {
            problems.push_back(std::string("mode: ") + e.what());
        }
    }
    if (!j.contains("documents") || !j["documents"].is_array()) {
        problems.push_back("documents: expected an array");
    } else {
        for (std::size_t i = 0; i < j["documents"].size(); ++i) {
            const auto& d = j["documents"][i];
            const auto path = "documents[" + std::to_string(i) + "]";
            if (!d.is_object() || !d.contains("text") || !d["text"].is_string()) {
                problems.push_back(path + ".text: expected a string");
                continue;
            }
            if (!d.contains("rank") || !d["rank"].is_number_integer()) problems.push_back(path + ".rank: expected an integer");
            if (!d.contains("label") || !d["label"].is_string()) {
                problems.push_back(path + ".label: expected a string");
            } else {
                try {
                    parse_doc_kind(d["label"].get<std::string>());
                } catch (const InputError& e) {
                    problems.push_back(path + ".label: " + e.what());
                }
            }
        }
    }
    const std::set<std::string> allowed{"id", "question", "documents", "summary", "teacher", "mode"};
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) problems.push_back(key + ": unexpected field");
    }
    return problems;
}

Json compression_to_json(const CompressionOutput& c, const std::optional<ScenarioKind>& scenario) {
    Json j;
    j["id"] = c.query_id;
    if (scenario) j["scenario"] = to_string(*scenario);
    j["summary"] = c.summary;
    j["original_tokens"] = c.original_token_count;
    j["compressed_tokens"] = c.compressed_token_count;
    j["compressor"] = c.compressor_id;
    return j;
}

std::pair<CompressionOutput, std::optional<ScenarioKind>> compression_from_json(const Json& j) {
    try {
        CompressionOutput c;
        c.query_id = j.at("id").get<std::string>();
        c.summary = j.at("summary").get<std::string>();
        c.original_token_count = j.at("original_tokens").get<std::size_t>();
        c.compressed_token_count = j.at("compressed_tokens").get<std::size_t>();
        c.compressor_id = j.at("compressor").get<std::string>();
        std::optional<ScenarioKind> scenario;
        if (j.contains("scenario")) scenario = parse_scenario(j["scenario"].get<std::string>());
        return {std::move(c), scenario};
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed compression record: ") + e.what());
    }
}

Json answer_to_json(const AnswerOutcome& a, const std::optional<ScenarioKind>& scenario,
                    std::string_view context_mode) {
    Json j;
    j["id"] = a.query_id;
    if (scenario) j["scenario"] = to_string(*scenario);
    j["prediction"] = a.prediction;
    j["seconds"] = a.seconds;
    j["context"] = context_mode;
    return j;
}

std::pair<AnswerOutcome, std::optional<ScenarioKind>> answer_from_json(const Json& j) {
    try {
        AnswerOutcome a;
        a.query_id = j.at("id").get<std::string>();
        a.prediction = j.at("prediction").get<std::string>();
        a.seconds = j.at("seconds").get<double>();
        if (a.seconds < 0) throw InputError("answer " + a.query_id + ": negative seconds");
        std::optional<ScenarioKind> scenario;
        if (j.contains("scenario")) scenario = parse_scenario(j["scenario"].get<std::string>());
        return {std::move(a), scenario};
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed answer record: ") + e.what());
    }
}

Json to_json(const MetricSummary& m) {
    Json j;
    j["n"] = m.n;
    if (m.n == 0) return j;
    j["em"] = m.em;
    j["f1"] = m.f1;
    if (m.cr) j["cr"] = *m.cr;
    if (m.par) j["par"] = *m.par;
    j["inference_time"] = m.inference_time;
    return j;
}

namespace {

MetricSummary summary_from_json(const Json& j) {
    MetricSummary m;
    m.n = j.at("n").get<std::size_t>();
    if (m.n == 0) return m;
    m.em = j.at("em").get<double>();
    m.f1 = j.at("f1").get<double>();
    if (j.contains("cr")) m.cr = j["cr"].get<double>();
    if (j.contains("par")) m.par = j["par"].get<double>();
    m.inference_time = j.at("inference_time").get<double>();
    return m;
}

}  // namespace

Json to_json(const MetricsReport& r) {
    auto j = to_json(r.overall);
    Json groups = Json::object();
    if (!r.by_scenario.empty()) {
        Json s = Json::object();
        for (auto kind : kAllScenarios) {
            const std::string name(to_string(kind));
            if (auto it = r.by_scenario.find(name); it != r.by_scenario.end()) s[name] = to_json(it->second);
        }
        groups["scenario"] = std::move(s);
    }
    if (!r.by_stratum.empty()) {
        Json s = Json::object();
        for (const auto& [n, m] : r.by_stratum) s[std::to_string(n)] = to_json(m);
        groups["stratum"] = std::move(s);
    }
    j["groups"] = std::move(groups);
    return j;
}

MetricsReport report_from_json(const Json& j) {
    try {
        MetricsReport r;
        r.overall = summary_from_json(j);
        if (j.contains("groups")) {
            const auto& g = j["groups"];
            if (g.contains("scenario")) {
                for (const auto& [name, m] : g["scenario"].items()) r.by_scenario[name] = summary_from_json(m);
            }
            if (g.contains("stratum")) {
                for (const auto& [n, m] : g["stratum"].items()) r.by_stratum[std::stoi(n)] = summary_from_json(m);
            }
        }
        return r;
    } catch (const std::exception& e) {
        throw InputError(std::string("malformed metrics report: ") + e.what());
    }
}

Json to_json(const DeltaReport& d) {
    Json rows = Json::array();
    for (const auto& r : d.rows) {
        rows.push_back({{"group", r.group},
                        {"metric", r.metric},
                        {"clean", r.clean},
                        {"noisy", r.noisy},
                        {"delta", r.delta},
                        {"formatted", r.formatted}});
    }
    return rows;
}

Json to_json(const BenchmarkManifest& m) {
    Json j;
    j["name"] = m.name;
    j["dataset"] = m.dataset_tag;
    j["seed"] = m.seed;
    j["full"] = m.stats.full;
    j["subset"] = m.stats.subset;
    j["percentage"] = m.stats.percentage;
    j["percentage_text"] = m.stats.percentage_text();
    Json params = Json::object();
    for (const auto& [k, v] : m.parameters) params[k] = v;
    j["parameters"] = std::move(params);
    return j;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<Json> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::exception& e) {
            throw ValidationError(path.string(), line_no, "<line>", std::string("malformed JSON: ") + e.what());
        }
    }
    return out;
}

std::string dump_line(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::strict); }

AtomicWriter::AtomicWriter(std::filesystem::path target) : target_(std::move(target)) {
    if (target_.has_parent_path()) std::filesystem::create_directories(target_.parent_path());
    tmp_ = target_;
    tmp_ += ".tmp-" + std::to_string(::getpid());
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot write " + tmp_.string());
}

AtomicWriter::~AtomicWriter() {
    if (!committed_) {
        out_.close();
        std::error_code ec;
        std::filesystem::remove(tmp_, ec);
    }
}

void AtomicWriter::write_line(const Json& j) { out_ << dump_line(j) << '\n'; }

void AtomicWriter::commit() {
    out_.flush();
    if (!out_) throw Error("write to " + tmp_.string() + " failed");
    out_.close();
    std::filesystem::rename(tmp_, target_);
    committed_ = true;
}

}  // namespace acorn
