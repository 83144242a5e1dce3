#include "acorn/pipeline.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "acorn/hashing.hpp"
#include "acorn/parallel.hpp"
#include "acorn/text.hpp"

namespace acorn {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// RunConfig

Json to_json(const RunConfig& c) {
    Json e;
    e["base_url"] = c.endpoint.base_url;
    e["teacher_model"] = c.endpoint.teacher_model;
    e["answer_model"] = c.endpoint.answer_model;
    e["api_key_env"] = c.endpoint.api_key_env;
    e["max_attempts"] = c.endpoint.max_attempts;
    e["initial_backoff_ms"] = c.endpoint.initial_backoff_ms;
    e["max_in_flight"] = c.endpoint.max_in_flight;
    e["teacher_max_tokens"] = c.endpoint.teacher_max_tokens;
    e["answer_max_tokens"] = c.endpoint.answer_max_tokens;
    e["temperature"] = c.endpoint.temperature;
    e["compress_instruction_file"] = c.endpoint.compress_instruction_file;
    e["answer_instruction_file"] = c.endpoint.answer_instruction_file;

    Json k;
    k["kind"] = c.corruptor.kind;
    k["url"] = c.corruptor.url;
    k["top_k"] = c.corruptor.top_k;
    k["max_attempts"] = c.corruptor.max_attempts;
    k["max_in_flight"] = c.corruptor.max_in_flight;

    Json j;
    j["command"] = c.command;
    j["inputs"] = c.inputs;
    j["output"] = c.output;
    j["table"] = c.table;
    j["seed"] = c.seed;
    j["k"] = c.k;
    j["endpoint"] = std::move(e);
    j["corruptor"] = std::move(k);
    j["label_mode"] = c.label_mode;
    j["empty_policy"] = c.empty_policy;
    j["workers"] = c.workers;
    j["cache_dir"] = c.cache_dir;
    j["on_error"] = c.on_error;
    j["strata_sample_size"] = c.strata_sample_size;
    j["adapter"] = c.adapter;
    j["adapter_cmd"] = c.adapter_cmd;
    j["adapter_url"] = c.adapter_url;
    j["context_mode"] = c.context_mode;
    j["view"] = c.view;
    j["par_subset"] = c.par_subset;
    j["sections"] = c.sections;
    return j;
}

RunConfig run_config_from_json(const Json& j) {
    try {
        RunConfig c;
        c.command = j.at("command").get<std::string>();
        c.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        c.output = j.at("output").get<std::string>();
        c.table = j.at("table").get<std::string>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.k = j.at("k").get<int>();
        const auto& e = j.at("endpoint");
        c.endpoint.base_url = e.at("base_url").get<std::string>();
        c.endpoint.teacher_model = e.at("teacher_model").get<std::string>();
        c.endpoint.answer_model = e.at("answer_model").get<std::string>();
        c.endpoint.api_key_env = e.at("api_key_env").get<std::string>();
        c.endpoint.max_attempts = e.at("max_attempts").get<int>();
        c.endpoint.initial_backoff_ms = e.at("initial_backoff_ms").get<int>();
        c.endpoint.max_in_flight = e.at("max_in_flight").get<int>();
        c.endpoint.teacher_max_tokens = e.at("teacher_max_tokens").get<int>();
        c.endpoint.answer_max_tokens = e.at("answer_max_tokens").get<int>();
        c.endpoint.temperature = e.at("temperature").get<double>();
        c.endpoint.compress_instruction_file = e.at("compress_instruction_file").get<std::string>();
        c.endpoint.answer_instruction_file = e.at("answer_instruction_file").get<std::string>();
        const auto& k = j.at("corruptor");
        c.corruptor.kind = k.at("kind").get<std::string>();
        c.corruptor.url = k.at("url").get<std::string>();
        c.corruptor.top_k = k.at("top_k").get<int>();
        c.corruptor.max_attempts = k.at("max_attempts").get<int>();
        c.corruptor.max_in_flight = k.at("max_in_flight").get<int>();
        c.label_mode = j.at("label_mode").get<std::string>();
        c.empty_policy = j.at("empty_policy").get<std::string>();
        c.workers = j.at("workers").get<int>();
        c.cache_dir = j.at("cache_dir").get<std::string>();
        c.on_error = j.at("on_error").get<std::string>();
        c.strata_sample_size = j.at("strata_sample_size").get<std::size_t>();
        c.adapter = j.at("adapter").get<std::string>();
        c.adapter_cmd = j.at("adapter_cmd").get<std::string>();
        c.adapter_url = j.at("adapter_url").get<std::string>();
        c.context_mode = j.at("context_mode").get<std::string>();
        c.view = j.at("view").get<std::string>();
        c.par_subset = j.at("par_subset").get<bool>();
        c.sections = j.at("sections").get<std::map<std::string, std::string>>();
        return c;
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed run config: ") + e.what());
    }
}

namespace {

std::string base_name(const std::string& p) { return p.empty() ? p : fs::path(p).filename().string(); }

}  // namespace

Json redacted_config(const RunConfig& c) {
    auto copy = c;
    for (auto& [role, path] : copy.inputs) path = base_name(path);
    for (auto& [name, path] : copy.sections) path = base_name(path);
    copy.output = base_name(copy.output);
    copy.table = base_name(copy.table);
    copy.cache_dir = base_name(copy.cache_dir);
    copy.endpoint.compress_instruction_file = base_name(copy.endpoint.compress_instruction_file);
    copy.endpoint.answer_instruction_file = base_name(copy.endpoint.answer_instruction_file);
    if (!copy.adapter_cmd.empty()) {
        std::istringstream in(copy.adapter_cmd);
        std::string word;
        std::string out;
        while (in >> word) {
            if (!out.empty()) out.push_back(' ');
            out += word.find('/') != std::string::npos ? base_name(word) : word;
        }
        copy.adapter_cmd = out;
    }
    return to_json(copy);
}

std::string config_hash(const RunConfig& c) { return sha256_hex(dump_line(redacted_config(c))); }

// ---------------------------------------------------------------------------
// Tables

namespace {

std::string fmt_value(double v, int decimals) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(decimals) << v;
    return s.str();
}

}  // namespace

std::string render_table(const MetricsReport& report, const std::string& title) {
    std::vector<std::pair<std::string, const MetricSummary*>> columns{{"overall", &report.overall}};
    for (auto kind : kAllScenarios) {
        const std::string name(to_string(kind));
        if (auto it = report.by_scenario.find(name); it != report.by_scenario.end()) {
            columns.emplace_back(name, &it->second);
        }
    }
    for (const auto& [n, m] : report.by_stratum) columns.emplace_back("N=" + std::to_string(n), &m);

    const std::vector<std::string> metrics{"n", "em", "f1", "cr", "par", "inference_time"};
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"metric"});
    for (const auto& [name, m] : columns) cells.back().push_back(name);
    for (const auto& metric : metrics) {
        std::vector<std::string> row{metric};
        for (const auto& [name, m] : columns) {
            std::string cell = "-";
            if (metric == "n") {
                cell = std::to_string(m->n);
            } else if (m->n > 0) {
                const int d = metric_decimals(metric);
                if (metric == "em") cell = fmt_value(m->em, d);
                if (metric == "f1") cell = fmt_value(m->f1, d);
                if (metric == "cr" && m->cr) cell = fmt_value(*m->cr, d);
                if (metric == "par" && m->par) cell = fmt_value(*m->par, d);
                if (metric == "inference_time") cell = fmt_value(m->inference_time, d);
            }
            row.push_back(cell);
        }
        cells.push_back(std::move(row));
    }
    std::vector<std::size_t> widths(cells.front().size(), 0);
    for (const auto& row : cells) {
        for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    }
    std::ostringstream out;
    out << title << '\n';
    for (const auto& row : cells) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << "  ";
            if (i == 0) {
                out << std::left << std::setw(static_cast<int>(widths[i])) << row[i];
            } else {
                out << std::right << std::setw(static_cast<int>(widths[i])) << row[i];
            }
        }
        out << '\n';
    }
    return out.str();
}

std::string render_delta_table(const DeltaReport& delta) {
    std::size_t gw = 5, mw = 6;
    for (const auto& r : delta.rows) {
        gw = std::max(gw, r.group.size());
        mw = std::max(mw, r.metric.size());
    }
    std::ostringstream out;
    out << "degradation (clean \xE2\x86\x92 noisy)\n";
    out << std::left << std::setw(static_cast<int>(gw)) << "group" << "  " << std::setw(static_cast<int>(mw))
        << "metric" << "  change\n";
    for (const auto& r : delta.rows) {
        out << std::left << std::setw(static_cast<int>(gw)) << r.group << "  " << std::setw(static_cast<int>(mw))
            << r.metric << "  " << r.formatted << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Commands

namespace {

std::string utc_now() {
    const auto now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string file_digest(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read " + p.string());
    StableHasher h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h.bytes(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
    }
    return h.hex();
}

void write_manifest(const RunConfig& cfg, const fs::path& path, const Json& counts,
                    const std::vector<fs::path>& outputs, const Json& extra = Json::object()) {
    Json m;
    m["command"] = cfg.command;
    m["tool_version"] = kToolVersion;
    m["config_hash"] = config_hash(cfg);
    m["config"] = redacted_config(cfg);
    m["seed"] = cfg.seed;
    Json inputs = Json::array();
    for (const auto& [role, p] : cfg.inputs) {
        if (p.empty()) continue;
        inputs.push_back({{"role", role}, {"name", base_name(p)}, {"sha256", file_digest(p)}});
    }
    m["inputs"] = std::move(inputs);
    Json outs = Json::array();
    for (const auto& p : outputs) outs.push_back({{"name", p.filename().string()}, {"sha256", file_digest(p)}});
    m["outputs"] = std::move(outs);
    m["counts"] = counts;
    for (const auto& [k, v] : extra.items()) m[k] = v;
    m["created_at"] = utc_now();
    AtomicWriter w(path);
    w.stream() << m.dump(2) << '\n';
    w.commit();
}

fs::path manifest_for(const fs::path& output) {
    auto p = output;
    p.replace_extension(".manifest.json");
    return p;
}

const std::string& input(const RunConfig& cfg, const std::string& role) {
    static const std::string empty;
    auto it = cfg.inputs.find(role);
    return it == cfg.inputs.end() ? empty : it->second;
}

std::vector<Record> read_records(const RunConfig& cfg, const std::string& path, Json& counts) {
    auto loaded = load_dataset(path, parse_on_error(cfg.on_error));
    if (!loaded.errors.empty()) {
        Json errs = Json::array();
        for (const auto& e : loaded.errors) {
            errs.push_back({{"file", base_name(e.file())}, {"line", e.line()}, {"field", e.field()}, {"message", e.detail()}});
        }
        counts["invalid_records"] = loaded.errors.size();
        counts["invalid"] = std::move(errs);
    }
    if (cfg.view == "base") {
        for (auto& r : loaded.records) {
            if (!r.augmentation) continue;
            const auto base = to_augmented_set(r).base;
            r.ctxs.clear();
            for (const auto& d : base.documents) r.ctxs.push_back({d.doc, d.label});
            r.augmentation.reset();
        }
    } else if (cfg.view != "augmented") {
        throw InputError("unknown view '" + cfg.view + "' (expected augmented or base)");
    }
    return std::move(loaded.records);
}

std::shared_ptr<ChatClient> make_client(const RunConfig& cfg) {
    std::string key;
    if (!cfg.endpoint.api_key_env.empty()) {
        if (const char* v = std::getenv(cfg.endpoint.api_key_env.c_str())) key = v;
    }
    if (key.empty() && cfg.endpoint.base_url.rfind("mock://", 0) != 0) {
        spdlog::warn("environment variable {} is unset; calling {} without a credential", cfg.endpoint.api_key_env,
                     cfg.endpoint.base_url);
    }
    auto endpoint = make_chat_endpoint(cfg.endpoint.base_url, key);
    auto cache = cfg.cache_dir.empty() ? std::make_shared<ResponseCache>()
                                       : std::make_shared<ResponseCache>(fs::path(cfg.cache_dir));
    ClientOptions options;
    options.retry.max_attempts = cfg.endpoint.max_attempts;
    options.retry.initial_backoff = std::chrono::milliseconds(cfg.endpoint.initial_backoff_ms);
    options.max_in_flight = cfg.endpoint.max_in_flight;
    return std::make_shared<ChatClient>(std::move(endpoint), std::move(cache), options);
}

Json client_counts(const ChatClient& client) {
    const auto s = client.stats();
    return {{"network_calls", s.network_calls}, {"cache_hits", s.cache_hits}, {"retries", s.retries}};
}

TeacherSettings teacher_settings(const RunConfig& cfg) {
    TeacherSettings t;
    t.model_id = cfg.endpoint.teacher_model;
    t.instruction = load_instruction(cfg.endpoint.compress_instruction_file, kDefaultCompressInstruction);
    t.max_output_tokens = cfg.endpoint.teacher_max_tokens;
    t.temperature = cfg.endpoint.temperature;
    return t;
}

std::vector<std::string> sorted_texts(const Record& r) {
    auto ctxs = r.ctxs;
    std::stable_sort(ctxs.begin(), ctxs.end(), [](const auto& a, const auto& b) { return a.doc.rank < b.doc.rank; });
    std::vector<std::string> out;
    for (const auto& c : ctxs) out.push_back(c.doc.text);
    return out;
}

std::string key_of(const std::string& id, const std::optional<ScenarioKind>& s) {
    return s ? id + "\x1f" + std::string(to_string(*s)) : id;
}

// --- classify ---------------------------------------------------------------

int cmd_classify(const RunConfig& cfg) {
    if (cfg.k < 1) throw InputError("--k must be >= 1");
    Json counts;
    auto records = read_records(cfg, input(cfg, "input"), counts);
    auto sets = parallel_map<RetrievalSet>(records.size(), cfg.workers, [&](std::size_t i) {
        auto docs = documents_of(records[i]);
        std::stable_sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
        if (docs.size() > static_cast<std::size_t>(cfg.k)) docs.resize(static_cast<std::size_t>(cfg.k));
        return classify_documents(records[i].query, std::move(docs));
    });
    std::size_t evidential = 0, irrelevant = 0, with_evidential = 0;
    AtomicWriter w(cfg.output);
    for (const auto& s : sets) {
        evidential += s.count(DocKind::Evidential);
        irrelevant += s.count(DocKind::Irrelevant);
        with_evidential += s.count(DocKind::Evidential) > 0;
        w.write_line(to_json(s));
    }
    w.commit();
    counts["records"] = sets.size();
    counts["evidential_documents"] = evidential;
    counts["irrelevant_documents"] = irrelevant;
    counts["records_with_evidential"] = with_evidential;
    write_manifest(cfg, manifest_for(cfg.output), counts, {cfg.output});
    return 0;
}

// --- augment ----------------------------------------------------------------

std::unique_ptr<Corruptor> make_corruptor(const RunConfig& cfg, const std::vector<RetrievalSet>& sets) {
    if (cfg.corruptor.kind == "distractor") {
        std::vector<std::string> pool;
        for (const auto& s : sets) pool.insert(pool.end(), s.query.answers.begin(), s.query.answers.end());
        return std::make_unique<DistractorPool>(std::move(pool), static_cast<std::size_t>(cfg.corruptor.max_attempts));
    }
    if (cfg.corruptor.kind == "fill-mask") {
        return std::make_unique<FillMaskCorruptor>(
            FillMaskOptions{cfg.corruptor.url, cfg.corruptor.top_k, cfg.corruptor.max_in_flight});
    }
    throw InputError("unknown corruptor '" + cfg.corruptor.kind + "' (expected distractor or fill-mask)");
}

int cmd_augment(const RunConfig& cfg) {
    Json counts;
    auto records = read_records(cfg, input(cfg, "input"), counts);
    std::vector<RetrievalSet> sets;
    sets.reserve(records.size());
    for (const auto& r : records) sets.push_back(to_retrieval_set(r));
    if (sets.empty()) {
        AtomicWriter w(cfg.output);
        w.commit();
        counts["records"] = 0;
        write_manifest(cfg, manifest_for(cfg.output), counts, {cfg.output});
        return 0;
    }
    auto corruptor = make_corruptor(cfg, sets);
    AugmentOptions options{cfg.corruptor.max_attempts};
    auto augmented = parallel_map<AugmentedSet>(sets.size(), cfg.workers, [&](std::size_t i) {
        return augment_set(sets[i], cfg.seed, *corruptor, options);
    });
    std::size_t corrupted = 0, fallbacks = 0;
    std::map<int, std::size_t> by_outcome;
    AtomicWriter w(cfg.output);
    for (const auto& a : augmented) {
        corrupted += a.decision.outcome > 0;
        fallbacks += a.decision.failure.has_value();
        ++by_outcome[a.decision.outcome];
        w.write_line(to_json(a));
    }
    w.commit();
    counts["records"] = augmented.size();
    counts["corrupted"] = corrupted;
    counts["corruption_fallbacks"] = fallbacks;
    Json outcomes = Json::object();
    for (const auto& [m, n] : by_outcome) outcomes[std::to_string(m)] = n;
    counts["outcomes"] = std::move(outcomes);
    counts["corruptor"] = corruptor->id();
    write_manifest(cfg, manifest_for(cfg.output), counts, {cfg.output});
    return 0;
}

// --- label ------------------------------------------------------------------

std::vector<AugmentedSet> read_augmented(const RunConfig& cfg, const std::string& path, Json& counts) {
    auto records = read_records(cfg, path, counts);
    std::vector<AugmentedSet> sets;
    sets.reserve(records.size());
    for (const auto& r : records) sets.push_back(to_augmented_set(r));
    return sets;
}

int cmd_label(const RunConfig& cfg) {
    Json counts;
    const auto sets = read_augmented(cfg, input(cfg, "input"), counts);
    const auto mode = parse_label_mode(cfg.label_mode);
    const auto client = make_client(cfg);
    const auto settings = teacher_settings(cfg);

    struct Result {
        std::optional<SummaryLabel> label;
        std::string error;
    };
    auto results = parallel_map<Result>(sets.size(), cfg.workers, [&](std::size_t i) {
        Result r;
        try {
            r.label = generate_label(sets[i], mode, *client, settings);
        } catch (const LabelError& e) {
            spdlog::warn("{}", e.what());
            r.error = e.what();
        }
        return r;
    });
    std::size_t emitted = 0, empty = 0;
    Json failures = Json::array();
    AtomicWriter w(cfg.output);
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].label) {
            failures.push_back({{"id", sets[i].query().id}, {"reason", results[i].error}});
            continue;
        }
        ++emitted;
        empty += results[i].label->evidential_empty;
        w.write_line(label_to_json(*results[i].label));
    }
    w.commit();
    counts["records"] = sets.size();
    counts["labels"] = emitted;
    counts["evidential_empty"] = empty;
    counts["failed"] = failures.size();
    counts["failures"] = std::move(failures);
    counts["gateway"] = client_counts(*client);
    write_manifest(cfg, manifest_for(cfg.output), counts, {cfg.output});
    return 0;
}

// --- build-train ------------------------------------------------------------

int cmd_build_train(const RunConfig& cfg) {
    Json counts;
    const auto sets = read_augmented(cfg, input(cfg, "input"), counts);
    const auto policy = parse_empty_policy(cfg.empty_policy);

    LabelSource source;
    std::shared_ptr<ChatClient> client;
    std::unordered_map<std::string, SummaryLabel> labels;
    if (const auto& labels_path = input(cfg, "labels"); !labels_path.empty()) {
        for (const auto& j : read_jsonl(labels_path)) {
            auto l = label_from_json(j);
            auto id = l.query_id;
            labels.insert_or_assign(std::move(id), std::move(l));
        }
        source = [&labels](const AugmentedSet& s) -> SummaryLabel {
            auto it = labels.find(s.query().id);
            if (it == labels.end()) throw InputError("no label for record " + s.query().id);
            return it->second;
        };
    } else {
        client = make_client(cfg);
        source = [client, settings = teacher_settings(cfg)](const AugmentedSet& s) {
            return generate_label(s, LabelMode::EvidentialOnly, *client, settings);
        };
    }

    auto dataset = build_train_dataset(sets, source, policy, cfg.workers);
    AtomicWriter w(cfg.output);
    for (const auto& ex : dataset.examples) {
        const std::string summary = ex.label.text.value_or(std::string(kAbstentionSentinel));
        auto line = train_example_to_json(ex, summary);
        if (auto problems = validate_train_json(line); !problems.empty()) {
            throw Error("train example " + ex.query.id + " fails the schema: " + problems.front());
        }
        w.write_line(line);
    }
    w.commit();
    counts["records"] = sets.size();
    counts["emitted"] = dataset.report.emitted;
    counts["skipped_empty_evidential"] = dataset.report.skipped_empty_evidential;
    counts["corruption_fallbacks"] = dataset.report.corruption_fallbacks;
    counts["failed"] = dataset.report.failed;
    Json failures = Json::array();
    for (const auto& [id, why] : dataset.report.failures) failures.push_back({{"id", id}, {"reason", why}});
    counts["failures"] = std::move(failures);
    if (client) counts["gateway"] = client_counts(*client);
    write_manifest(cfg, manifest_for(cfg.output), counts, {cfg.output});
    return 0;
}

// --- build-bench ------------------------------------------------------------

int cmd_build_bench(const RunConfig& cfg) {
    Json counts;
    const auto sets = read_augmented(cfg, input(cfg, "input"), counts);
    const fs::path dir = cfg.output;
    fs::create_directories(dir);
    std::vector<fs::path> outputs;

    auto write_subset = [&](const Subset<AugmentedSet>& subset, const std::string& name) {
        const auto path = dir / (name + ".jsonl");
        AtomicWriter w(path);
        for (const auto& s : subset.records) w.write_line(to_json(s));
        w.commit();
        auto manifest = subset.manifest;
        manifest.seed = cfg.seed;
        write_manifest(cfg, dir / (name + ".manifest.json"), {{"records", subset.records.size()}}, {path},
                       {{"benchmark", to_json(manifest)}});
        outputs.push_back(path);
        counts[name] = {{"full", manifest.stats.full},
                        {"subset", manifest.stats.subset},
                        {"percentage", manifest.stats.percentage_text()}};
    };

    const auto par_subset = build_par_subset(sets);
    write_subset(par_subset, "par_subset");
    const auto noise_subset = build_noise_type_subset(sets);
    write_subset(noise_subset, "noise_subset");

    {
        const auto path = dir / "scenarios.jsonl";
        AtomicWriter w(path);
        std::size_t cases = 0;
        for (const auto& s : noise_subset.records) {
            for (const auto& c : build_scenarios(s)) {
                w.write_line(to_json(c));
                ++cases;
            }
        }
        w.commit();
        BenchmarkManifest m = noise_subset.manifest;
        m.name = "scenarios";
        m.seed = cfg.seed;
        m.parameters["selection"] = "highest-ranked document of each type";
        m.parameters["cases_per_record"] = "3";
        write_manifest(cfg, dir / "scenarios.manifest.json", {{"records", noise_subset.records.size()}, {"cases", cases}},
                       {path}, {{"benchmark", to_json(m)}});
        outputs.push_back(path);
        counts["scenario_cases"] = cases;
    }

    {
        std::vector<RetrievalSet> base;
        base.reserve(sets.size());
        for (const auto& s : sets) base.push_back(s.base);
        const auto strata = stratify_by_evidential_count(base, cfg.strata_sample_size, cfg.seed);
        const auto path = dir / "strata.jsonl";
        AtomicWriter w(path);
        Json groups = Json::object();
        for (const auto& [n, stratum] : strata.by_count) {
            for (const auto& s : stratum.sample) {
                auto j = to_json(s);
                j["stratum"] = n;
                w.write_line(j);
            }
            Json g{{"group_size", stratum.group_size}, {"sampled", stratum.sample.size()}};
            if (stratum.shortfall()) {
                g["note"] = "group smaller than sample size " + std::to_string(cfg.strata_sample_size);
            }
            groups[std::to_string(n)] = std::move(g);
        }
        w.commit();
        write_manifest(cfg, dir / "strata.manifest.json", {{"groups", groups}}, {path},
                       {{"benchmark", {{"name", "strata"},
                                       {"seed", cfg.seed},
                                       {"sample_size", cfg.strata_sample_size}}}});
        outputs.push_back(path);
        counts["strata"] = std::move(groups);
    }
    counts["records"] = sets.size();
    write_manifest(cfg, dir / "manifest.json", counts, outputs);
    return 0;
}

// --- compress ---------------------------------------------------------------

fs::path bundled_adapter() {
    if (const char* env = std::getenv("ACORN_ADAPTER_BIN")) return env;
    std::error_code ec;
    const auto self = fs::read_symlink("/proc/self/exe", ec);
    if (!ec) {
        const auto sibling = self.parent_path() / "acorn-adapter";
        if (fs::exists(sibling)) return sibling;
    }
    return "acorn-adapter";
}

std::unique_ptr<CompressorAdapter> make_adapter(const RunConfig& cfg) {
    if (!cfg.adapter_url.empty()) return std::make_unique<HttpCompressorAdapter>(cfg.adapter_url);
    std::vector<std::string> argv;
    if (!cfg.adapter_cmd.empty()) {
        std::istringstream in(cfg.adapter_cmd);
        for (std::string w; in >> w;) argv.push_back(w);
    } else if (cfg.adapter == "echo") {
        argv = {bundled_adapter().string(), "echo"};
    } else if (cfg.adapter.rfind("truncate", 0) == 0) {
        const auto colon = cfg.adapter.find(':');
        argv = {bundled_adapter().string(), "truncate", colon == std::string::npos ? "10" : cfg.adapter.substr(colon + 1)};
    } else {
        throw InputError("no compressor: pass --adapter echo|truncate[:N], --adapter-cmd or --adapter-url");
    }
    return std::make_unique<SubprocessAdapter>(std::move(argv));
}

int cmd_compress(const RunConfig& cfg) {
    Json counts;
    const auto records = read_records(cfg, input(cfg, "input"), counts);
    auto adapter = make_adapter(cfg);
    const WhitespaceTokenizer tokenizer;
    const std::size_t window = static_cast<std::size_t>(std::max(1, cfg.workers)) * 8;

    AtomicWriter w(cfg.output);
    std::size_t original = 0, compressed = 0;
    for (std::size_t start = 0; start < records.size(); start += window) {
        const auto end = std::min(records.size(), start + window);
        std::vector<std::future<std::string>> futures;
        std::vector<std::vector<std::string>> docs;
        for (auto i = start; i < end; ++i) {
            docs.push_back(sorted_texts(records[i]));
            futures.push_back(adapter->submit({"r" + std::to_string(i), records[i].query.question, docs.back()}));
        }
        for (auto i = start; i < end; ++i) {
            auto summary = futures[i - start].get();
            auto out = make_compression_output(records[i].query.id, std::move(summary), docs[i - start],
                                               adapter->identity(), tokenizer);
            original += out.original_token_count;
            compressed += out.compressed_token_count;
            w.write_line(compression_to_json(out, records[i].scenario));
        }
    }
    w.commit();
    counts["records"] = records.size();
    counts["original_tokens"] = original;
    counts["compressed_tokens"] = compressed;
    counts["compressor"] = adapter->identity();
    write_manifest(cfg, manifest_for(cfg.output), counts, {cfg.output});
    return 0;
}

// --- answer -----------------------------------------------------------------

int cmd_answer(const RunConfig& cfg) {
    Json counts;
    const auto records = read_records(cfg, input(cfg, "input"), counts);
    std::unordered_map<std::string, std::string> summaries;
    const auto& comp_path = input(cfg, "compressions");
    if (cfg.context_mode == "summary") {
        if (comp_path.empty()) throw InputError("--context summary needs --compressions");
        for (const auto& j : read_jsonl(comp_path)) {
            auto [c, scenario] = compression_from_json(j);
            summaries.emplace(key_of(c.query_id, scenario), std::move(c.summary));
        }
    } else if (cfg.context_mode != "none" && cfg.context_mode != "documents") {
        throw InputError("unknown context mode '" + cfg.context_mode + "' (expected summary, none or documents)");
    }
    const auto client = make_client(cfg);
    AnswerSettings settings;
    settings.model_id = cfg.endpoint.answer_model;
    settings.instruction = load_instruction(cfg.endpoint.answer_instruction_file, kDefaultAnswerInstruction);
    settings.max_output_tokens = cfg.endpoint.answer_max_tokens;

    auto outcomes = parallel_map<AnswerOutcome>(records.size(), cfg.workers, [&](std::size_t i) {
        const auto& r = records[i];
        std::optional<std::string> context;
        if (cfg.context_mode == "summary") {
            auto it = summaries.find(r.key());
            if (it == summaries.end()) throw InputError("no compression for record " + r.query.id);
            context = it->second;
        } else if (cfg.context_mode == "documents") {
            std::string joined;
            for (const auto& t : sorted_texts(r)) joined += (joined.empty() ? "" : "\n\n") + t;
            context = joined;
        }
        const auto t0 = std::chrono::steady_clock::now();
        auto prediction = answer(*client, r.query, context, settings);
        const auto t1 = std::chrono::steady_clock::now();
        return AnswerOutcome{r.query.id, std::move(prediction), std::chrono::duration<double>(t1 - t0).count()};
    });
    AtomicWriter w(cfg.output);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        w.write_line(answer_to_json(outcomes[i], records[i].scenario, cfg.context_mode));
    }
    w.commit();
    counts["records"] = outcomes.size();
    counts["gateway"] = client_counts(*client);
    write_manifest(cfg, manifest_for(cfg.output), counts, {cfg.output});
    return 0;
}

// --- score ------------------------------------------------------------------

int cmd_score(const RunConfig& cfg) {
    Json counts;
    const auto records = read_records(cfg, input(cfg, "input"), counts);
    std::unordered_map<std::string, AnswerOutcome> answers;
    for (const auto& j : read_jsonl(input(cfg, "answers"))) {
        auto [a, scenario] = answer_from_json(j);
        const auto key = key_of(a.query_id, scenario);
        if (!answers.emplace(key, std::move(a)).second) throw InputError("duplicate answer for " + key);
    }
    std::unordered_map<std::string, CompressionOutput> compressions;
    if (const auto& p = input(cfg, "compressions"); !p.empty()) {
        for (const auto& j : read_jsonl(p)) {
            auto [c, scenario] = compression_from_json(j);
            const auto key = key_of(c.query_id, scenario);
            compressions.emplace(key, std::move(c));
        }
    }

    std::vector<ScoredItem> items;
    items.reserve(records.size());
    for (const auto& r : records) {
        auto it = answers.find(r.key());
        if (it == answers.end()) throw InputError("no answer for record " + r.query.id);
        ScoredItem item;
        item.query_id = r.query.id;
        if (r.scenario) item.scenario = std::string(to_string(*r.scenario));
        item.stratum = r.stratum;
        item.em = exact_match(it->second.prediction, r.query.answers);
        item.f1 = token_f1(it->second.prediction, r.query.answers);
        item.seconds = it->second.seconds;
        if (!compressions.empty()) {
            auto c = compressions.find(r.key());
            if (c == compressions.end()) throw InputError("no compression for record " + r.query.id);
            item.cr = compression_ratio(c->second);
            if (cfg.par_subset) {
                const bool has_evidential = std::any_of(r.ctxs.begin(), r.ctxs.end(), [](const auto& x) {
                    return x.label && x.label->kind == DocKind::Evidential;
                });
                if (!has_evidential) throw InputError("record " + r.query.id + " is outside the PAR subset");
                item.par_hit = contains_answer(c->second.summary, r.query.answers);
            }
        } else if (cfg.par_subset) {
            throw InputError("--par-subset needs --compressions");
        }
        items.push_back(std::move(item));
    }
    const auto report = aggregate(items);
    AtomicWriter w(cfg.output);
    w.stream() << to_json(report).dump(2) << '\n';
    w.commit();
    std::vector<fs::path> outputs{cfg.output};
    if (!cfg.table.empty()) {
        AtomicWriter t(cfg.table);
        t.stream() << render_table(report, "metrics: " + base_name(input(cfg, "answers")));
        t.commit();
        outputs.push_back(cfg.table);
    }
    counts["records"] = items.size();
    write_manifest(cfg, manifest_for(cfg.output), counts, outputs);
    return 0;
}

// --- report -----------------------------------------------------------------

MetricsReport read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path);
    try {
        return report_from_json(Json::parse(in));
    } catch (const Json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

int cmd_report(const RunConfig& cfg) {
    std::map<std::string, std::string> sections = cfg.sections;
    const auto& clean = input(cfg, "clean");
    const auto& noisy = input(cfg, "noisy");
    if (clean.empty() != noisy.empty()) throw InputError("--clean and --noisy go together");
    if (!clean.empty()) {
        sections.emplace("clean", clean);
        sections.emplace("noisy", noisy);
    }
    if (sections.empty()) throw InputError("nothing to report: pass --clean/--noisy or --section");

    Json out;
    Json sec = Json::object();
    std::ostringstream table;
    std::map<std::string, MetricsReport> reports;
    for (const auto& [name, path] : sections) {
        reports[name] = read_report(path);
        sec[name] = to_json(reports[name]);
        table << render_table(reports[name], name) << '\n';
    }
    out["sections"] = std::move(sec);
    if (!clean.empty()) {
        const auto delta = degradation_delta(reports.at("clean"), reports.at("noisy"));
        out["degradation"] = to_json(delta);
        table << render_delta_table(delta);
    }
    AtomicWriter w(cfg.output);
    w.stream() << out.dump(2) << '\n';
    w.commit();
    std::vector<fs::path> outputs{cfg.output};
    if (!cfg.table.empty()) {
        AtomicWriter t(cfg.table);
        t.stream() << table.str();
        t.commit();
        outputs.push_back(cfg.table);
    } else {
        std::cout << table.str();
    }
    auto manifest_cfg = cfg;
    for (const auto& [name, path] : cfg.sections) manifest_cfg.inputs["section:" + name] = path;
    write_manifest(manifest_cfg, manifest_for(cfg.output), {{"sections", sections.size()}}, outputs);
    return 0;
}

// --- CLI wiring ---------------------------------------------------------------

constexpr const char* kFooter = R"(Data files are JSON Lines, one record per line.

retrieval record   {"id", "question", "answers": [..], "dataset"?,
                    "ctxs": [{"id", "title"?, "text", "rank", "score"?}]}
classified record  as above; every ctx gains "label" (evidential | irrelevant
                   | factual_error) and "provenance" (natural | augmented)
augmented record   as classified, plus "augmentation": {"outcome", "n_evidential",
                   "seed", "corrupted_doc_id"?, "original_span"?,
                   "replacement_span"?, "original_text"?, "corruptor",
                   "failure"?}
benchmark record   augmented or classified, plus "scenario"? / "stratum"?
labels line        {"id", "mode", "teacher", "source_doc_ids",
                    "evidential_empty", "summary"?}
train line         {"id", "question", "documents": [{"text", "label", "rank"}],
                    "summary", "teacher", "mode"}
compression line   {"id", "scenario"?, "summary", "original_tokens",
                    "compressed_tokens", "compressor"}
answer line        {"id", "scenario"?, "prediction", "seconds", "context"}

Compressor adapters read {"id", "query", "documents"} lines on stdin and
write {"id", "summary"} lines on stdout, in any order.

Every command writes <output>.manifest.json next to its output. The API
credential is read from the variable named by --api-key-env.
Exit codes: 0 success, 1 runtime failure, 2 usage error.)";

void add_endpoint_options(CLI::App& sub, RunConfig& cfg) {
    sub.add_option("--base-url", cfg.endpoint.base_url,
                   "OpenAI-compatible base URL, or mock:// for the offline endpoint")
        ->capture_default_str();
    sub.add_option("--teacher-model", cfg.endpoint.teacher_model)->capture_default_str();
    sub.add_option("--answer-model", cfg.endpoint.answer_model)->capture_default_str();
    sub.add_option("--api-key-env", cfg.endpoint.api_key_env, "environment variable holding the API key")
        ->capture_default_str();
    sub.add_option("--max-attempts", cfg.endpoint.max_attempts)->capture_default_str()->check(CLI::PositiveNumber);
    sub.add_option("--initial-backoff-ms", cfg.endpoint.initial_backoff_ms)
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    sub.add_option("--max-in-flight", cfg.endpoint.max_in_flight)->capture_default_str()->check(CLI::PositiveNumber);
    sub.add_option("--temperature", cfg.endpoint.temperature)->capture_default_str();
    sub.add_option("--cache-dir", cfg.cache_dir, "response cache directory");
}

void add_workers(CLI::App& sub, RunConfig& cfg) {
    sub.add_option("--workers", cfg.workers)->capture_default_str()->check(CLI::PositiveNumber);
}

void add_view(CLI::App& sub, RunConfig& cfg) {
    sub.add_option("--view", cfg.view, "documents after augmentation, or the recovered originals")
        ->capture_default_str()
        ->check(CLI::IsMember({"augmented", "base"}));
}

void add_io(CLI::App& sub, RunConfig& cfg, const std::string& output_help = "output file") {
    sub.add_option("--input", cfg.inputs["input"], "input JSONL")->required()->check(CLI::ExistingFile);
    sub.add_option("--output", cfg.output, output_help)->required();
    sub.add_option("--on-error", cfg.on_error, "invalid records: fail or skip")
        ->capture_default_str()
        ->check(CLI::IsMember({"fail", "skip"}));
}

std::string json_error(const std::string& kind, const std::string& message, Json extra = Json::object()) {
    Json j{{"error", kind}, {"message", message}};
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return j.dump();
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"acorn: dataset and evaluation toolkit for noise-robust context compression", "acorn"};
    app.footer(kFooter);
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
        ->capture_default_str()
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    RunConfig cfg;
    std::vector<std::string> section_args;

    auto* classify = app.add_subcommand("classify", "label each document evidential or irrelevant");
    add_io(*classify, cfg);
    classify->add_option("--k", cfg.k, "documents kept per query")->capture_default_str();
    add_workers(*classify, cfg);

    auto* augment = app.add_subcommand("augment", "corrupt one evidential document per record by seeded draw");
    add_io(*augment, cfg);
    augment->add_option("--seed", cfg.seed)->required();
    augment->add_option("--corruptor", cfg.corruptor.kind)
        ->capture_default_str()
        ->check(CLI::IsMember({"distractor", "fill-mask"}));
    augment->add_option("--fill-mask-url", cfg.corruptor.url, "fill-mask service endpoint");
    augment->add_option("--top-k", cfg.corruptor.top_k)->capture_default_str()->check(CLI::PositiveNumber);
    augment->add_option("--max-attempts", cfg.corruptor.max_attempts)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    augment->add_option("--max-in-flight", cfg.corruptor.max_in_flight)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    add_workers(*augment, cfg);

    auto* label = app.add_subcommand("label", "generate teacher summaries");
    add_io(*label, cfg);
    label->add_option("--mode", cfg.label_mode)
        ->capture_default_str()
        ->check(CLI::IsMember({"evidential_only", "all_docs"}));
    label->add_option("--instruction-file", cfg.endpoint.compress_instruction_file)->check(CLI::ExistingFile);
    label->add_option("--max-tokens", cfg.endpoint.teacher_max_tokens)->capture_default_str();
    add_endpoint_options(*label, cfg);
    add_workers(*label, cfg);

    auto* train = app.add_subcommand("build-train", "emit the training JSONL");
    add_io(*train, cfg);
    train->add_option("--labels", cfg.inputs["labels"], "labels JSONL from `acorn label`")->check(CLI::ExistingFile);
    train->add_option("--empty-policy", cfg.empty_policy, "records without evidential documents")
        ->capture_default_str()
        ->check(CLI::IsMember({"exclude", "sentinel"}));
    train->add_option("--instruction-file", cfg.endpoint.compress_instruction_file)->check(CLI::ExistingFile);
    train->add_option("--max-tokens", cfg.endpoint.teacher_max_tokens)->capture_default_str();
    add_endpoint_options(*train, cfg);
    add_workers(*train, cfg);

    auto* bench = app.add_subcommand("build-bench", "derive PAR, noise-type and stratified benchmarks");
    add_io(*bench, cfg, "output directory");
    bench->add_option("--seed", cfg.seed)->required();
    bench->add_option("--sample-size", cfg.strata_sample_size, "records per evidential-count stratum")
        ->capture_default_str();

    auto* compress = app.add_subcommand("compress", "run a compressor adapter over a dataset");
    add_view(*compress, cfg);
    add_io(*compress, cfg);
    auto* bundled = compress->add_option("--adapter", cfg.adapter, "bundled adapter: echo or truncate[:N]");
    auto* cmd = compress->add_option("--adapter-cmd", cfg.adapter_cmd, "command line of an adapter process");
    auto* url = compress->add_option("--adapter-url", cfg.adapter_url, "HTTP adapter endpoint");
    bundled->excludes(cmd)->excludes(url);
    cmd->excludes(url);
    add_workers(*compress, cfg);

    auto* ans = app.add_subcommand("answer", "answer each question with the downstream model");
    add_view(*ans, cfg);
    add_io(*ans, cfg);
    ans->add_option("--compressions", cfg.inputs["compressions"])->check(CLI::ExistingFile);
    ans->add_option("--context", cfg.context_mode, "summary, documents or none")
        ->capture_default_str()
        ->check(CLI::IsMember({"summary", "documents", "none"}));
    ans->add_option("--instruction-file", cfg.endpoint.answer_instruction_file)->check(CLI::ExistingFile);
    ans->add_option("--max-tokens", cfg.endpoint.answer_max_tokens)->capture_default_str();
    add_endpoint_options(*ans, cfg);
    add_workers(*ans, cfg);

    auto* score = app.add_subcommand("score", "compute EM, F1, CR, PAR and timing");
    add_view(*score, cfg);
    add_io(*score, cfg, "metrics JSON");
    score->add_option("--answers", cfg.inputs["answers"])->required()->check(CLI::ExistingFile);
    score->add_option("--compressions", cfg.inputs["compressions"])->check(CLI::ExistingFile);
    score->add_flag("--par-subset", cfg.par_subset, "report PAR (input must be the PAR subset)");
    score->add_option("--table", cfg.table, "write a text table here");

    auto* report = app.add_subcommand("report", "tabulate metrics and clean-to-noisy degradation");
    auto* clean = report->add_option("--clean", cfg.inputs["clean"], "metrics JSON of the clean run")
                      ->check(CLI::ExistingFile);
    auto* noisy = report->add_option("--noisy", cfg.inputs["noisy"], "metrics JSON of the noisy run")
                      ->check(CLI::ExistingFile);
    clean->needs(noisy);
    noisy->needs(clean);
    report->add_option("--section", section_args, "extra metrics JSON as name=path");
    report->add_option("--output", cfg.output)->required();
    report->add_option("--table", cfg.table, "write the text tables here instead of stdout");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kToolVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << json_error("usage", e.what()) << '\n';
        return 2;
    }

    auto logger = spdlog::stderr_logger_mt("acorn-cli-" + std::to_string(reinterpret_cast<std::uintptr_t>(&cfg)));
    logger->set_level(spdlog::level::from_str(log_level));
    auto previous = spdlog::default_logger();
    spdlog::set_default_logger(logger);
    struct Restore {
        std::shared_ptr<spdlog::logger> prev;
        std::shared_ptr<spdlog::logger> mine;
        ~Restore() {
            spdlog::set_default_logger(prev);
            spdlog::drop(mine->name());
        }
    } restore{previous, logger};

    for (auto it = cfg.inputs.begin(); it != cfg.inputs.end();) {
        it = it->second.empty() ? cfg.inputs.erase(it) : std::next(it);
    }
    for (const auto& s : section_args) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
            std::cerr << json_error("usage", "--section expects name=path, got '" + s + "'") << '\n';
            return 2;
        }
        cfg.sections[s.substr(0, eq)] = s.substr(eq + 1);
    }

    const auto* sub = app.get_subcommands().front();
    cfg.command = sub->get_name();
    try {
        if (cfg.command == "classify") return cmd_classify(cfg);
        if (cfg.command == "augment") return cmd_augment(cfg);
        if (cfg.command == "label") return cmd_label(cfg);
        if (cfg.command == "build-train") return cmd_build_train(cfg);
        if (cfg.command == "build-bench") return cmd_build_bench(cfg);
        if (cfg.command == "compress") return cmd_compress(cfg);
        if (cfg.command == "answer") return cmd_answer(cfg);
        if (cfg.command == "score") return cmd_score(cfg);
        if (cfg.command == "report") return cmd_report(cfg);
    } catch (const ValidationError& e) {
        std::cerr << json_error("validation", e.detail(),
                                {{"file", e.file()}, {"line", e.line()}, {"field", e.field()}})
                  << '\n';
        return 1;
    } catch (const InputError& e) {
        std::cerr << json_error("input", e.what()) << '\n';
        return 1;
    } catch (const TransportError& e) {
        std::cerr << json_error("transport", e.what()) << '\n';
        return 1;
    } catch (const AdapterError& e) {
        std::cerr << json_error("adapter", e.what()) << '\n';
        return 1;
    } catch (const ProtocolError& e) {
        std::cerr << json_error("protocol", e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json_error("runtime", e.what()) << '\n';
        return 1;
    }
    std::cerr << json_error("usage", "unknown command " + cfg.command) << '\n';
    return 2;
}

}  // namespace acorn
