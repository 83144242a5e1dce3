#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace acorn {

/// Answer normalization used everywhere strings are compared: lowercase,
/// Unicode punctuation (general category P*) deleted, the tokens "a", "an"
/// and "the" dropped, whitespace collapsed and trimmed. Operates on Unicode
/// scalar values; ill-formed UTF-8 sequences are passed through as U+FFFD.
std::string normalize_text(std::string_view s);

/// Normalized text plus, for every output byte, the byte range of the source
/// code point that produced it. Separator spaces map to an empty range.
struct NormalizedText {
    struct Span {
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
    };

    std::string text;
    std::vector<Span> source;

    /// Source byte range covered by normalized bytes [begin, end).
    Span source_range(std::size_t begin, std::size_t end) const;
};

NormalizedText normalize_with_offsets(std::string_view s);

/// True iff the normalized text contains the normalization of some alias as a
/// contiguous substring. Aliases that normalize to "" never match.
/// Throws InputError when `aliases` is empty.
bool contains_answer(std::string_view text, std::span<const std::string> aliases);

/// Same check against aliases that are already normalized.
bool contains_normalized(std::string_view normalized_text,
                         std::span<const std::string> normalized_aliases);

bool is_valid_utf8(std::string_view s) noexcept;

/// Whitespace split of normalized text.
std::vector<std::string> normalized_tokens(std::string_view s);

std::string trim(std::string_view s);

}  // namespace acorn
