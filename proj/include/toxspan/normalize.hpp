#ifndef TOXSPAN_NORMALIZE_HPP
#define TOXSPAN_NORMALIZE_HPP

#include <string>
#include <string_view>
#include <vector>

#include "toxspan/span.hpp"
#include "toxspan/unicode.hpp"

namespace toxspan {

/// Maps each position of a normalized text back to the original text.
class OffsetMap {
public:
    OffsetMap() = default;
    explicit OffsetMap(std::vector<std::size_t> to_original) : to_original_(std::move(to_original)) {}

    std::size_t operator()(std::size_t normalized_pos) const { return to_original_.at(normalized_pos); }
    std::size_t size() const noexcept { return to_original_.size(); }
    bool empty() const noexcept { return to_original_.empty(); }
    const std::vector<std::size_t>& positions() const noexcept { return to_original_; }

    /// Original-text token for a token found in the normalized text. The
    /// span runs from the mapped first character to one past the mapped
    /// last character, so it covers any characters removed in between.
    Token to_original(const Token& t, std::u32string_view original) const {
        const std::size_t start = (*this)(t.start);
        const std::size_t end = (*this)(t.end - 1) + 1;
        const auto piece = original.substr(start, end - start);
        return Token{unicode::encode(piece), start, end, unicode::encode(unicode::to_lower(piece))};
    }

    friend bool operator==(const OffsetMap&, const OffsetMap&) = default;

private:
    std::vector<std::size_t> to_original_;
};

struct Normalized {
    std::u32string text;
    OffsetMap map;

    std::string utf8() const { return unicode::encode(text); }
};

/// Lowercases and drops punctuation, except punctuation inside a word: a
/// run of non-space symbols is kept when both of its outer neighbours are
/// alphanumeric ("a$$hole" survives, "fool!" loses the '!').
inline Normalized normalize(std::u32string_view text) {
    Normalized out;
    std::vector<std::size_t> positions;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        if (!unicode::is_punct(text[i])) {
            out.text.push_back(unicode::to_lower(text[i]));
            positions.push_back(i);
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && unicode::is_punct(text[j])) ++j;
        const bool interior = i > 0 && unicode::is_alnum(text[i - 1]) && j < n && unicode::is_alnum(text[j]);
        if (interior) {
            for (std::size_t k = i; k < j; ++k) {
                out.text.push_back(unicode::to_lower(text[k]));
                positions.push_back(k);
            }
        }
        i = j;
    }
    out.map = OffsetMap(std::move(positions));
    return out;
}

inline Normalized normalize(std::string_view utf8) { return normalize(unicode::decode(utf8)); }

} // namespace toxspan

#endif // TOXSPAN_NORMALIZE_HPP
