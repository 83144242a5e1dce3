// Acceptance checks A1-A8. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "acorn/augmentor.hpp"
#include "acorn/benchbuilder.hpp"
#include "acorn/corpus.hpp"
#include "acorn/evaluator.hpp"
#include "acorn/gateway.hpp"
#include "acorn/pipeline.hpp"
#include "acorn/records.hpp"
#include "acorn/text.hpp"
#include "support.hpp"

using namespace acorn;
using testing_support::oracle_contains;
using testing_support::oracle_em;
using testing_support::oracle_f1;
using testing_support::read_file;
using testing_support::read_lines;
using testing_support::TempDir;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

struct Check {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok && failures.size() < 10) failures.push_back(what);
    }
    bool ok() const { return failures.empty(); }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

std::vector<std::string> texts(const std::vector<LabeledDocument>& docs) {
    std::vector<std::string> out;
    for (const auto& d : docs) out.push_back(d.doc.text);
    return out;
}

// --- A1 ---------------------------------------------------------------------

void a1(Check& c) {
    const auto start = Clock::now();
    constexpr int kIds = 30000;
    for (int n : {2, 4}) {
        std::vector<int> freq(static_cast<std::size_t>(n) + 1, 0);
        for (int i = 0; i < kIds; ++i) ++freq[static_cast<std::size_t>(draw_outcome("q" + std::to_string(i), 2024, n))];
        for (int m = 0; m <= n; ++m) {
            const double f = static_cast<double>(freq[static_cast<std::size_t>(m)]) / kIds;
            c.expect(std::abs(f - 1.0 / (n + 1)) <= 0.01,
                     "N=" + std::to_string(n) + " outcome " + std::to_string(m) + " freq " + std::to_string(f));
        }
    }
    const double t = seconds_since(start);
    c.expect(t < 5.0, "runtime " + std::to_string(t) + " s");
}

// --- A2 ---------------------------------------------------------------------

std::string nonempty_alias(std::mt19937_64& rng) {
    for (;;) {
        auto a = testing_support::random_text(rng, 3);
        if (!testing_support::oracle_normalize(a).empty()) return a;
    }
}

void a2(Check& c) {
    std::mt19937_64 rng(99);
    std::size_t compared = 0;
    std::size_t evidential = 0;
    for (int r = 0; r < 1000; ++r) {
        QueryRecord q{"s" + std::to_string(r), "question " + std::to_string(r), {}, "synthetic"};
        const int n_alias = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < n_alias; ++i) q.answers.push_back(nonempty_alias(rng));
        std::vector<RetrievedDocument> docs;
        const int k = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < k; ++i) {
            auto text = testing_support::random_text(rng, 14);
            if (rng() % 3 == 0) text += " " + q.answers[rng() % q.answers.size()] + " " + testing_support::random_text(rng, 3);
            docs.push_back({"d" + std::to_string(i), std::nullopt, text, k - i, std::nullopt});
        }
        const auto set = classify_documents(q, docs);
        for (const auto& d : set.documents) {
            const bool oracle = oracle_contains(d.doc.text, q.answers);
            const bool got = d.label.kind == DocKind::Evidential;
            c.expect(got == oracle, q.id + "/" + d.doc.doc_id + " label mismatch");
            c.expect(d.label.provenance == Provenance::Natural, q.id + " provenance");
            ++compared;
            evidential += got ? 1 : 0;
        }
    }
    c.expect(evidential > 0 && evidential < compared, "degenerate mix of labels");
}

// --- A3 ---------------------------------------------------------------------

const std::vector<std::string> kEntities{
    "Paris",       "Lyon",          "Nile",           "Amazon River", "Anna Karenina", "Mount Everest",
    "Blue Whale",  "Marie Curie",   "Alan Turing",    "Kyoto",        "Lagos",         "Lake Baikal",
    "Ada Lovelace", "Sahara",       "Danube",         "Reykjavik",    "Ulan Bator",    "Tierra del Fuego"};

std::vector<RetrievalSet> entity_sets(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<RetrievalSet> out;
    for (std::size_t r = 0; r < count; ++r) {
        const auto& answer = kEntities[rng() % kEntities.size()];
        QueryRecord q{"e" + std::to_string(r), "Which entity is meant in case " + std::to_string(r) + "?", {answer},
                      "synthetic"};
        std::vector<RetrievedDocument> docs;
        const int k = 5;
        for (int i = 0; i < k; ++i) {
            std::string text = testing_support::random_text(rng, 10);
            if (rng() % 2 == 0) {
                text += " " + answer + " is described here, " + testing_support::random_text(rng, 4);
                if (rng() % 3 == 0) text += " and again " + answer + ".";
            }
            docs.push_back({"d" + std::to_string(i), std::nullopt, text, i + 1, std::nullopt});
        }
        out.push_back(classify_documents(q, docs));
    }
    return out;
}

void a3(Check& c) {
    const DistractorPool pool(kEntities);
    std::size_t corrupted = 0;
    std::size_t batch = 0;
    while (corrupted < 500 && batch < 20) {
        for (const auto& set : entity_sets(400, 1000 + batch)) {
            if (corrupted >= 500) break;
            const auto aug = augment_set(set, 31337, pool);
            std::size_t factual = 0;
            for (const auto& d : aug.documents) factual += d.label.kind == DocKind::FactualError ? 1 : 0;
            c.expect(factual <= 1, aug.query().id + " has " + std::to_string(factual) + " factual errors");
            c.expect(aug.documents.size() == set.documents.size(), aug.query().id + " document count changed");
            if (aug.decision.outcome == 0) {
                c.expect(aug.documents == set.documents, aug.query().id + " outcome 0 changed documents");
                continue;
            }
            ++corrupted;
            for (std::size_t i = 0; i < set.documents.size(); ++i) {
                const auto& before = set.documents[i];
                const auto& after = aug.documents[i];
                if (after.doc.doc_id == aug.decision.corrupted_doc_id) {
                    c.expect(!oracle_contains(after.doc.text, set.query.answers),
                             aug.query().id + " corrupted document still contains an alias");
                    c.expect(after.label.kind == DocKind::FactualError && after.label.provenance == Provenance::Augmented,
                             aug.query().id + " corrupted document label");
                    c.expect(before.label.kind == DocKind::Evidential, aug.query().id + " corrupted a non-evidential document");
                } else {
                    c.expect(after.doc.text == before.doc.text && after.doc == before.doc && after.label == before.label,
                             aug.query().id + "/" + before.doc.doc_id + " not byte-identical");
                }
            }
        }
        ++batch;
    }
    c.expect(corrupted >= 500, "only " + std::to_string(corrupted) + " corrupted records");
}

// --- A4 ---------------------------------------------------------------------

struct Golden {
    std::string pred;
    std::vector<std::string> aliases;
    int em;
    double f1;
};

void a4(Check& c) {
    const std::vector<Golden> golden{
        {"Paris", {"Paris"}, 1, 1.0},
        {"paris.", {"Paris"}, 1, 1.0},
        {"The Paris", {"Paris"}, 1, 1.0},
        {"Paris France", {"Paris"}, 0, 2.0 / 3.0},
        {"in Paris France", {"Paris, France"}, 0, 0.8},
        {"London", {"Paris"}, 0, 0.0},
        {"", {"Paris"}, 0, 0.0},
        {"Paris", {"London", "Paris"}, 1, 1.0},
        {"blue whale shark", {"blue whale", "whale shark"}, 0, 0.8},
        {"red red fish", {"red fish"}, 0, 0.8},
        {"red", {"red red fish"}, 0, 0.5},
        {"U.S.", {"US"}, 1, 1.0},
        {"don't", {"dont"}, 1, 1.0},
        {"e-mail", {"email"}, 1, 1.0},
        {"Nile River", {"river nile"}, 0, 1.0},
        {"42 years", {"42"}, 0, 2.0 / 3.0},
        {"a b c d", {"b c d e f"}, 0, 0.75},
        {"x y", {"z"}, 0, 0.0},
        {"Anna  Karenina\t", {"anna karenina"}, 1, 1.0},
        {"capital city of France", {"France"}, 0, 0.4},
        {"$5", {"5"}, 0, 0.0},
        {"An apple", {"apple", "pear"}, 1, 1.0},
        {"pear tree", {"apple", "pear"}, 0, 2.0 / 3.0},
    };
    c.expect(golden.size() >= 20, "fewer than 20 golden pairs");
    for (const auto& g : golden) {
        const auto em = exact_match(g.pred, g.aliases);
        const auto f1 = token_f1(g.pred, g.aliases);
        c.expect(em == g.em, "EM('" + g.pred + "') = " + std::to_string(em));
        c.expect(std::abs(f1 - g.f1) <= 1e-9, "F1('" + g.pred + "') = " + std::to_string(f1));
        c.expect(oracle_em(g.pred, g.aliases) == g.em && std::abs(oracle_f1(g.pred, g.aliases) - g.f1) <= 1e-9,
                 "oracle disagrees with golden value for '" + g.pred + "'");
    }

    std::mt19937_64 rng(4242);
    std::size_t em_hits = 0;
    for (int i = 0; i < 10000; ++i) {
        std::vector<std::string> aliases;
        const int n = 1 + static_cast<int>(rng() % 3);
        for (int a = 0; a < n; ++a) aliases.push_back(nonempty_alias(rng));
        std::string pred;
        if (i % 3 == 0) {
            pred = aliases[rng() % aliases.size()];
            if (rng() % 2) pred = "The " + pred + "!";
            if (rng() % 2) std::transform(pred.begin(), pred.end(), pred.begin(), ::toupper);
        } else {
            pred = testing_support::random_text(rng, 4);
        }
        const int em = exact_match(pred, aliases);
        const double f1 = token_f1(pred, aliases);
        em_hits += static_cast<std::size_t>(em);
        if (em == 1) c.expect(f1 == 1.0, "EM without F1 = 1 for '" + pred + "'");
        c.expect(em == oracle_em(pred, aliases), "EM oracle mismatch for '" + pred + "'");
        c.expect(std::abs(f1 - oracle_f1(pred, aliases)) <= 1e-9, "F1 oracle mismatch for '" + pred + "'");
        c.expect(f1 >= 0.0 && f1 <= 1.0, "F1 out of range");
    }
    c.expect(em_hits >= 1000, "fuzz produced only " + std::to_string(em_hits) + " EM hits");
}

// --- A5 ---------------------------------------------------------------------

void par_extremes(Check& c, const std::vector<AugmentedSet>& sets, const std::string& name) {
    const auto subset = build_par_subset(sets);
    c.expect(!subset.records.empty(), name + " PAR subset empty");
    const WhitespaceTokenizer tok;
    std::vector<CompressionOutput> identity;
    std::vector<CompressionOutput> empty;
    for (const auto& s : subset.records) {
        const auto docs = texts(s.documents);
        identity.push_back(make_compression_output(s.query().id, join(docs, "\n"), docs, "identity", tok));
        empty.push_back(make_compression_output(s.query().id, "", docs, "empty", tok));
        c.expect(compression_ratio(identity.back()) == 1.0, name + " identity CR != 1 for " + s.query().id);
    }
    c.expect(par(identity, subset.records) == 1.0, name + " identity PAR != 1");
    c.expect(par(empty, subset.records) == 0.0, name + " empty PAR != 0");
}

void a5(Check& c) {
    std::vector<AugmentedSet> toy;
    std::vector<std::string> answers;
    const auto loaded = load_dataset(ACORN_TOY_DATA);
    for (const auto& r : loaded.records) answers.insert(answers.end(), r.query.answers.begin(), r.query.answers.end());
    const DistractorPool pool(answers);
    for (const auto& r : loaded.records) toy.push_back(augment_set(classify_documents(r.query, documents_of(r)), 7, pool));
    par_extremes(c, toy, "toy");

    std::vector<AugmentedSet> synthetic;
    const DistractorPool entities(kEntities);
    for (const auto& s : entity_sets(300, 5)) synthetic.push_back(augment_set(s, 9, entities));
    par_extremes(c, synthetic, "synthetic");
}

// --- CLI driver ---------------------------------------------------------------

int cli(std::vector<std::string> args, Check& c) {
    args.insert(args.begin(), {"--log-level", "off"});
    const int code = run_cli(args);
    c.expect(code == 0, "acorn " + args[2] + " exited " + std::to_string(code));
    return code;
}

// --- A6 ---------------------------------------------------------------------

void a6(Check& c) {
    TempDir dir;
    {
        std::ofstream out(dir / "toy10.jsonl");
        for (int r = 0; r < 10; ++r) {
            const bool qualifies = r % 3 == 0 && r < 10;  // r = 0, 3, 6, 9
            Json j{{"id", "t" + std::to_string(r)},
                   {"question", "Where is item " + std::to_string(r) + "?"},
                   {"answers", {"Oslo"}},
                   {"dataset", "toy10"}};
            Json ctxs = Json::array();
            for (int i = 0; i < 4; ++i) {
                const bool evidential = qualifies && i < 3;
                ctxs.push_back({{"id", "d" + std::to_string(i)},
                                {"text", evidential ? "Item " + std::to_string(r) + " is kept in Oslo."
                                                    : "Item " + std::to_string(r) + " has no location here."},
                                {"rank", i + 1}});
            }
            j["ctxs"] = ctxs;
            out << dump_line(j) << '\n';
        }
    }
    if (cli({"classify", "--input", (dir / "toy10.jsonl").string(), "--output", (dir / "c.jsonl").string()}, c) ||
        cli({"augment", "--input", (dir / "c.jsonl").string(), "--output", (dir / "a.jsonl").string(), "--seed", "3"}, c) ||
        cli({"build-bench", "--input", (dir / "a.jsonl").string(), "--output", (dir / "bench").string(), "--seed", "3"},
            c)) {
        return;
    }
    const auto m = Json::parse(read_file(dir / "bench" / "par_subset.manifest.json"))["benchmark"];
    c.expect(m["full"] == 10 && m["subset"] == 4 && m["percentage_text"] == "40.00",
             "manifest is " + m.dump());
    const auto full = read_lines(dir / "a.jsonl").size();
    const auto subset_lines = read_lines(dir / "bench" / "par_subset.jsonl");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * static_cast<double>(subset_lines.size()) / static_cast<double>(full));
    c.expect(full == 10 && subset_lines.size() == 4 && std::string(buf) == m["percentage_text"],
             "files give " + std::to_string(subset_lines.size()) + "/" + std::to_string(full));
    std::size_t qualifying = 0;
    for (const auto& line : read_lines(dir / "a.jsonl")) {
        const auto j = Json::parse(line);
        bool any = false;
        for (const auto& ctx : j["ctxs"]) any = any || ctx["label"] == "evidential";
        qualifying += any ? 1 : 0;
    }
    c.expect(qualifying == 4, "recount of qualifying records gives " + std::to_string(qualifying));
}

// --- A7 ---------------------------------------------------------------------

bool timing_bearing(const std::string& name) {
    return name.rfind("ans_", 0) == 0 || name.rfind("m_", 0) == 0 || name.rfind("report", 0) == 0 ||
           (name.size() > 4 && name.substr(name.size() - 4) == ".txt");
}

Json mask(const Json& j) {
    if (j.is_object()) {
        Json out = Json::object();
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.key() == "created_at" || it.key() == "seconds" || it.key() == "inference_time") continue;
            out[it.key()] = mask(it.value());
        }
        if (out.contains("name") && out.contains("sha256") && out["name"].is_string() &&
            timing_bearing(out["name"].get<std::string>())) {
            out.erase("sha256");
        }
        return out;
    }
    if (j.is_array()) {
        Json out = Json::array();
        for (const auto& e : j) {
            if (e.is_object() && e.contains("metric") && e["metric"] == "inference_time") continue;
            out.push_back(mask(e));
        }
        return out;
    }
    return j;
}

std::string masked_content(const fs::path& p) {
    const auto raw = read_file(p);
    const auto ext = p.extension().string();
    if (ext == ".json") return mask(Json::parse(raw)).dump();
    if (ext == ".jsonl") {
        std::string out;
        for (const auto& line : read_lines(p)) out += mask(Json::parse(line)).dump() + "\n";
        return out;
    }
    std::istringstream in(raw);
    std::string out;
    for (std::string line; std::getline(in, line);)
        if (line.find("inference_time") == std::string::npos) out += line + "\n";
    return out;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = masked_content(e.path());
    }
    return out;
}

void chain(const fs::path& d, Check& c) {
    const auto p = [&](const std::string& n) { return (d / n).string(); };
    const auto bench = [&](const std::string& n) { return (d / "bench" / n).string(); };
    if (cli({"classify", "--input", ACORN_TOY_DATA, "--output", p("classified.jsonl")}, c) ||
        cli({"augment", "--input", p("classified.jsonl"), "--output", p("augmented.jsonl"), "--seed", "7"}, c) ||
        cli({"label", "--input", p("augmented.jsonl"), "--output", p("labels.jsonl")}, c) ||
        cli({"build-train", "--input", p("augmented.jsonl"), "--labels", p("labels.jsonl"), "--output",
             p("train.jsonl")},
            c) ||
        cli({"build-bench", "--input", p("augmented.jsonl"), "--output", p("bench"), "--seed", "7"}, c)) {
        return;
    }
    struct Arm {
        std::string name;
        std::string input;
        std::string view;
        bool par;
    };
    const std::vector<Arm> arms{{"base", bench("par_subset.jsonl"), "base", true},
                                {"augmented", bench("par_subset.jsonl"), "augmented", true},
                                {"scenarios", bench("scenarios.jsonl"), "augmented", false}};
    for (const auto& arm : arms) {
        const auto z = p("z_" + arm.name + ".jsonl");
        const auto ans = p("ans_" + arm.name + ".jsonl");
        if (cli({"compress", "--input", arm.input, "--output", z, "--adapter", "echo", "--view", arm.view}, c) ||
            cli({"answer", "--input", arm.input, "--compressions", z, "--output", ans, "--view", arm.view}, c)) {
            return;
        }
        std::vector<std::string> score{"score",         "--input",  arm.input,
                                       "--answers",     ans,        "--compressions",
                                       z,               "--output", p("m_" + arm.name + ".json"),
                                       "--table",       p("m_" + arm.name + ".txt"),
                                       "--view",        arm.view};
        if (arm.par) score.push_back("--par-subset");
        if (cli(score, c)) return;
    }
    cli({"report", "--clean", p("m_base.json"), "--noisy", p("m_augmented.json"), "--section",
         "scenarios=" + p("m_scenarios.json"), "--output", p("report.json"), "--table", p("report.txt")},
        c);
}

void a7(Check& c) {
    TempDir one;
    TempDir two;
    const auto start = Clock::now();
    chain(one.path(), c);
    const double t = seconds_since(start);
    c.expect(t < 60.0, "chain took " + std::to_string(t) + " s");
    chain(two.path(), c);
    if (!c.ok()) return;

    const auto s1 = snapshot(one.path());
    const auto s2 = snapshot(two.path());
    c.expect(s1.size() >= 30, "only " + std::to_string(s1.size()) + " artifacts");
    for (const auto& [name, content] : s1) {
        const auto it = s2.find(name);
        c.expect(it != s2.end() && it->second == content, name + " differs between runs");
    }
    c.expect(s1.size() == s2.size(), "artifact sets differ");
    // Untimed artifacts must match byte for byte, not just after masking.
    for (const auto& name : {"classified.jsonl", "augmented.jsonl", "labels.jsonl", "train.jsonl",
                             "bench/par_subset.jsonl", "bench/noise_subset.jsonl", "bench/scenarios.jsonl",
                             "bench/strata.jsonl", "z_base.jsonl", "z_augmented.jsonl", "z_scenarios.jsonl"}) {
        c.expect(read_file(one / name) == read_file(two / name), std::string(name) + " not byte-identical");
    }

    const auto report = Json::parse(read_file(one / "report.json"));
    for (const auto& section : {"clean", "noisy"}) {
        const auto& o = report["sections"][section];
        for (const auto& key : {"n", "em", "f1", "cr", "par", "inference_time"})
            c.expect(o.contains(key), std::string(section) + " lacks " + key);
    }
    const auto& scen = report["sections"]["scenarios"]["groups"]["scenario"];
    for (const auto k : kAllScenarios) {
        const std::string name(to_string(k));
        c.expect(scen.contains(name) && scen[name]["n"].get<int>() > 0, "scenario group " + name + " missing");
        if (scen.contains(name))
            for (const auto& key : {"em", "f1", "cr", "inference_time"})
                c.expect(scen[name].contains(key), name + " lacks " + key);
    }
    const std::regex delta(R"(^-?\d+\.\d+ \xE2\x86\x92 -?\d+\.\d+ \([+-]\d+\.\d+\)$)");
    std::set<std::string> metrics;
    for (const auto& row : report["degradation"]) {
        metrics.insert(row["metric"].get<std::string>());
        c.expect(std::regex_match(row["formatted"].get<std::string>(), delta), "delta format " + row.dump());
    }
    for (const auto& key : {"em", "f1", "cr", "par", "inference_time"})
        c.expect(metrics.count(key) == 1, std::string("degradation lacks ") + key);
    const auto table = read_file(one / "report.txt");
    c.expect(table.find("\xE2\x86\x92") != std::string::npos, "table has no degradation rows");
}

// --- A8 ---------------------------------------------------------------------

class CountingEndpoint final : public ChatEndpoint {
public:
    std::string complete(const ChatRequest& req) override {
        ++calls;
        const int now = ++active;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {}
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --active;
        return "reply to " + req.user_prompt;
    }
    std::atomic<int> calls{0};
    std::atomic<int> active{0};
    std::atomic<int> peak{0};
};

ChatRequest chat(const std::string& user) {
    ChatRequest r;
    r.model_id = "m";
    r.system_prompt = "s";
    r.user_prompt = user;
    return r;
}

void a8_cache(Check& c) {
    TempDir dir;
    auto mock = std::make_shared<MockChatEndpoint>();
    {
        ChatClient client(mock, std::make_shared<ResponseCache>(dir.path()));
        for (int i = 0; i < 20; ++i) client.complete(chat("Context:\nitem " + std::to_string(i) + "\n\nQuestion: q\nAnswer:"));
        c.expect(mock->calls() == 20, "warm-up made " + std::to_string(mock->calls()) + " calls");
        const auto before = mock->calls();
        for (int round = 0; round < 5; ++round)
            for (int i = 0; i < 20; ++i)
                client.complete(chat("Context:\nitem " + std::to_string(i) + "\n\nQuestion: q\nAnswer:"));
        c.expect(mock->calls() == before, "cache hits reached the endpoint");
        c.expect(client.stats().cache_hits == 100 && client.stats().network_calls == 20, "client stats disagree");
    }
    auto fresh = std::make_shared<MockChatEndpoint>();
    ChatClient reloaded(fresh, std::make_shared<ResponseCache>(dir.path()));
    for (int i = 0; i < 20; ++i) reloaded.complete(chat("Context:\nitem " + std::to_string(i) + "\n\nQuestion: q\nAnswer:"));
    c.expect(fresh->calls() == 0, "persisted cache made " + std::to_string(fresh->calls()) + " calls");
}

void a8_in_flight(Check& c) {
    for (int cap : {1, 3, 8}) {
        auto endpoint = std::make_shared<CountingEndpoint>();
        ClientOptions opts;
        opts.max_in_flight = cap;
        ChatClient client(endpoint, std::make_shared<ResponseCache>(), opts);
        std::vector<std::thread> threads;
        for (int t = 0; t < 32; ++t) {
            threads.emplace_back([&, t] {
                for (int i = 0; i < 8; ++i) client.complete(chat(std::to_string(t) + ":" + std::to_string(i)));
            });
        }
        for (auto& th : threads) th.join();
        c.expect(endpoint->peak.load() <= cap, "cap " + std::to_string(cap) + " exceeded: " +
                                                   std::to_string(endpoint->peak.load()));
        c.expect(client.stats().peak_in_flight <= cap, "limiter reports peak above cap");
        c.expect(endpoint->calls.load() == 256, "lost requests under cap " + std::to_string(cap));
    }
}

void a8_adapter(Check& c) {
    const AdapterRequest req{"x1", "q?", {"first doc", "second \"doc\"\nwith newline", "\xC3\xA9t\xC3\xA9"}};
    c.expect(decode_request(encode_request(req)).documents == req.documents, "request codec round trip");
    c.expect(decode_response(encode_response({"x1", "s\n"})).summary == "s\n", "response codec round trip");
    bool rejected = false;
    try {
        decode_response("{\"id\":1}");
    } catch (const ProtocolError&) {
        rejected = true;
    }
    c.expect(rejected, "malformed response accepted");

    SubprocessAdapter echo({ACORN_ADAPTER_PATH, "echo"});
    c.expect(!echo.identity().empty(), "adapter identity empty");
    c.expect(echo.compress("q", req.documents) == join(req.documents, "\n"), "echo output");
    c.expect(echo.compress("q", {}).empty(), "echo of no documents");

    std::vector<std::future<std::string>> futures;
    std::vector<std::string> expected;
    for (int i = 0; i < 300; ++i) {
        std::vector<std::string> docs{"doc " + std::to_string(i), "tail " + std::to_string(i * 7)};
        expected.push_back(join(docs, "\n"));
        futures.push_back(echo.submit({"p" + std::to_string(i), "q", docs}));
    }
    for (std::size_t i = 0; i < futures.size(); ++i)
        c.expect(futures[i].get() == expected[i], "pipelined response " + std::to_string(i));

    std::vector<std::thread> threads;
    std::atomic<int> wrong{0};
    for (int t = 0; t < 6; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 40; ++i) {
                const std::string doc = "t" + std::to_string(t) + "-" + std::to_string(i);
                if (echo.compress("q", {doc}) != doc) ++wrong;
            }
        });
    }
    for (auto& th : threads) th.join();
    c.expect(wrong.load() == 0, "concurrent submitters got wrong summaries");

    SubprocessAdapter reordering({ACORN_ADAPTER_PATH, "reverse-batch", "4"});
    std::vector<std::future<std::string>> rf;
    for (int i = 0; i < 8; ++i) rf.push_back(reordering.submit({"r" + std::to_string(i), "q", {"v" + std::to_string(i)}}));
    for (int i = 0; i < 8; ++i) c.expect(rf[static_cast<std::size_t>(i)].get() == "v" + std::to_string(i), "reordered match");

    SubprocessAdapter dying({ACORN_ADAPTER_PATH, "exit-after", "1"});
    c.expect(dying.compress("q", {"ok"}) == "ok", "exit-after first answer");
    bool failed = false;
    try {
        dying.compress("q", {"never"});
    } catch (const AdapterError&) {
        failed = true;
    }
    c.expect(failed, "adapter death not reported");
    echo.shutdown();
}

void a8(Check& c) {
    a8_cache(c);
    a8_in_flight(c);
    a8_adapter(c);
}

}  // namespace

int main() {
    setenv("ACORN_ADAPTER_BIN", ACORN_ADAPTER_PATH, 1);
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
        {"A1 outcome uniformity", a1},        {"A2 classification oracle", a2},
        {"A3 corruption invariants", a3},     {"A4 metric golden suite", a4},
        {"A5 PAR extremes", a5},              {"A6 subset arithmetic", a6},
        {"A7 end-to-end determinism", a7},    {"A8 gateway and adapter", a8}};
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Check c;
        const auto start = Clock::now();
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.failures.push_back(std::string("exception: ") + e.what());
        }
        char t[32];
        std::snprintf(t, sizeof t, "%.2fs", seconds_since(start));
        std::cout << (c.ok() ? "PASS " : "FAIL ") << name << " (" << t << ")";
        if (!c.ok()) {
            ++failed;
            std::cout << ": " << c.failures.front();
            for (std::size_t i = 1; i < c.failures.size(); ++i) std::cout << "; " << c.failures[i];
        }
        std::cout << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
