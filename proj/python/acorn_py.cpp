#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "acorn/augmentor.hpp"
#include "acorn/corpus.hpp"
#include "acorn/evaluator.hpp"
#include "acorn/gateway.hpp"
#include "acorn/pipeline.hpp"
#include "acorn/records.hpp"
#include "acorn/text.hpp"

namespace py = pybind11;
using namespace acorn;

namespace {

std::string classify_line(const std::string& line) {
    const auto r = parse_record(line, "<python>", 1);
    return dump_line(to_json(classify_documents(r.query, documents_of(r))));
}

py::dict stats(std::size_t full, std::size_t subset) {
    const auto s = dataset_stats(full, subset);
    py::dict d;
    d["full"] = s.full;
    d["subset"] = s.subset;
    d["percentage"] = s.percentage;
    d["percentage_text"] = s.percentage_text();
    return d;
}

double ratio(std::size_t original, std::size_t compressed) {
    CompressionOutput c;
    c.original_token_count = original;
    c.compressed_token_count = compressed;
    return compression_ratio(c);
}

py::dict decode_adapter_request(const std::string& line) {
    const auto r = decode_request(line);
    py::dict d;
    d["id"] = r.id;
    d["query"] = r.query;
    d["documents"] = r.documents;
    return d;
}

std::vector<std::string> validate_train_line(const std::string& line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::exception& e) {
        return {std::string("malformed JSON: ") + e.what()};
    }
    return validate_train_json(j);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "ACoRN dataset and evaluation core";
    m.attr("__version__") = std::string(kToolVersion);

    static py::exception<Error> base(m, "AcornError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            base(e.what());
        }
    });

    m.def("normalize_text", [](const std::string& s) { return normalize_text(s); }, py::arg("text"));
    m.def("contains_answer",
          [](const std::string& text, const std::vector<std::string>& aliases) { return contains_answer(text, aliases); },
          py::arg("text"), py::arg("aliases"));
    m.def("draw_outcome", &draw_outcome, py::arg("query_id"), py::arg("seed"), py::arg("n_evidential"));
    m.def("exact_match",
          [](const std::string& p, const std::vector<std::string>& a) { return exact_match(p, a); },
          py::arg("prediction"), py::arg("aliases"));
    m.def("token_f1", [](const std::string& p, const std::vector<std::string>& a) { return token_f1(p, a); },
          py::arg("prediction"), py::arg("aliases"));
    m.def("compression_ratio", &ratio, py::arg("original_tokens"), py::arg("compressed_tokens"));
    m.def("dataset_stats", &stats, py::arg("full"), py::arg("subset"));
    m.def("classify", &classify_line, py::arg("record_line"), "Label one retrieval JSONL line.");
    m.def("validate_train_line", &validate_train_line, py::arg("line"),
          "Schema problems of one train JSONL line; empty when valid.");
    m.def("decode_adapter_request", &decode_adapter_request, py::arg("line"));
    m.def("encode_adapter_response",
          [](const std::string& id, const std::string& summary) { return encode_response({id, summary}); },
          py::arg("id"), py::arg("summary"));
}
