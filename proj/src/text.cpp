#include "acorn/text.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <array>
#include <limits>

#include "acorn/error.hpp"

namespace acorn {
namespace {

constexpr std::array<std::string_view, 3> kArticles{"a", "an", "the"};

UChar32 lower_fixpoint(UChar32 c) {
    for (int i = 0; i < 4; ++i) {
        const UChar32 next = u_tolower(c);
        if (next == c) break;
        c = next;
    }
    return c;
}

void append_utf8(std::string& out, UChar32 c) {
    char buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool err = false;
    U8_APPEND(buf, len, U8_MAX_LENGTH, c, err);
    if (err) {
        out.append("\xEF\xBF\xBD");
        return;
    }
    out.append(buf, static_cast<std::size_t>(len));
}

struct Token {
    std::string text;
    std::vector<NormalizedText::Span> source;
};

}  // namespace

NormalizedText::Span NormalizedText::source_range(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > source.size()) return {};
    return {source[begin].begin, source[end - 1].end};
}

NormalizedText normalize_with_offsets(std::string_view s) {
    if (s.size() > static_cast<std::size_t>(std::numeric_limits<int32_t>::max())) {
        throw InputError("normalize_text: input exceeds 2 GiB");
    }
    NormalizedText out;
    Token token;
    bool first = true;

    auto flush = [&] {
        if (token.text.empty()) return;
        bool article = false;
        for (auto a : kArticles) article = article || token.text == a;
        if (!article) {
            if (!first) {
                out.text.push_back(' ');
                out.source.push_back({});
            }
            first = false;
            out.text += token.text;
            out.source.insert(out.source.end(), token.source.begin(), token.source.end());
        }
        token.text.clear();
        token.source.clear();
    };

    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    const auto length = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < length) {
        const int32_t start = i;
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
        if (c < 0) c = 0xFFFD;
        if (u_isUWhiteSpace(c)) {
            flush();
            continue;
        }
        const UChar32 lower = lower_fixpoint(c);
        if (u_ispunct(c) || u_ispunct(lower)) continue;
        const auto before = token.text.size();
        append_utf8(token.text, lower);
        const NormalizedText::Span span{static_cast<std::uint32_t>(start),
                                        static_cast<std::uint32_t>(i)};
        token.source.insert(token.source.end(), token.text.size() - before, span);
    }
    flush();
    return out;
}

std::string normalize_text(std::string_view s) { return normalize_with_offsets(s).text; }

bool contains_normalized(std::string_view normalized_text,
                         std::span<const std::string> normalized_aliases) {
    for (const auto& a : normalized_aliases) {
        if (!a.empty() && normalized_text.find(a) != std::string_view::npos) return true;
    }
    return false;
}

bool contains_answer(std::string_view text, std::span<const std::string> aliases) {
    if (aliases.empty()) throw InputError("contains_answer: alias list is empty");
    const auto norm = normalize_text(text);
    for (const auto& a : aliases) {
        const auto alias = normalize_text(a);
        if (!alias.empty() && norm.find(alias) != std::string::npos) return true;
    }
    return false;
}

bool is_valid_utf8(std::string_view s) noexcept {
    if (s.size() > static_cast<std::size_t>(std::numeric_limits<int32_t>::max())) return false;
    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    const auto length = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < length) {
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
        if (c < 0) return false;
    }
    return true;
}

std::vector<std::string> normalized_tokens(std::string_view s) {
    std::vector<std::string> out;
    const auto norm = normalize_text(s);
    std::size_t pos = 0;
    while (pos < norm.size()) {
        auto next = norm.find(' ', pos);
        if (next == std::string::npos) next = norm.size();
        if (next > pos) out.emplace_back(norm.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

std::string trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace acorn
