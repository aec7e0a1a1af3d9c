#ifndef TOXSPAN_SPAN_HPP
#define TOXSPAN_SPAN_HPP

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toxspan/error.hpp"
#include "toxspan/unicode.hpp"

namespace toxspan {

/// Character offset into a post, counted in Unicode scalars.
using CharIndex = std::uint32_t;

/// Sorted set of character offsets; the unit of gold annotation and of
/// every prediction.
class CharIndexSet {
public:
    CharIndexSet() = default;
    CharIndexSet(std::initializer_list<CharIndex> values) : CharIndexSet(from_unsorted(values)) {}

    static CharIndexSet from_unsorted(std::vector<CharIndex> values) {
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        CharIndexSet s;
        s.indices_ = std::move(values);
        return s;
    }

    /// Throws ValidationError unless `values` is strictly increasing.
    static CharIndexSet from_sorted(std::vector<CharIndex> values) {
        for (std::size_t i = 1; i < values.size(); ++i) {
            if (values[i] <= values[i - 1]) {
                throw ValidationError("index set is not strictly increasing at position " +
                                      std::to_string(i));
            }
        }
        CharIndexSet s;
        s.indices_ = std::move(values);
        return s;
    }

    static CharIndexSet range(CharIndex start, CharIndex end) {
        CharIndexSet s;
        for (CharIndex i = start; i < end; ++i) s.indices_.push_back(i);
        return s;
    }

    std::span<const CharIndex> values() const noexcept { return indices_; }
    std::size_t size() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }
    auto begin() const noexcept { return indices_.begin(); }
    auto end() const noexcept { return indices_.end(); }

    bool contains(CharIndex i) const { return std::binary_search(indices_.begin(), indices_.end(), i); }

    /// True when every index addresses a character of a text of `length` scalars.
    bool fits(std::size_t length) const { return indices_.empty() || indices_.back() < length; }

    /// Removes indices >= length; returns how many were dropped.
    std::size_t clamp(std::size_t length) {
        const auto it = std::lower_bound(indices_.begin(), indices_.end(), length,
                                         [](CharIndex a, std::size_t b) { return a < b; });
        const auto dropped = static_cast<std::size_t>(indices_.end() - it);
        indices_.erase(it, indices_.end());
        return dropped;
    }

    friend bool operator==(const CharIndexSet&, const CharIndexSet&) = default;

private:
    std::vector<CharIndex> indices_;
};

inline std::size_t intersection_size(const CharIndexSet& a, const CharIndexSet& b) {
    std::size_t n = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

inline bool is_subset(const CharIndexSet& a, const CharIndexSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

/// Half-open run [start, end) of character offsets.
struct CharSpan {
    CharIndex start = 0;
    CharIndex end = 0;

    friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

enum class Label : std::uint8_t { toxic = 0, nontoxic = 1, pad = 2 };

inline constexpr std::size_t kNumLabels = 3;

inline std::string_view to_string(Label l) {
    switch (l) {
    case Label::toxic: return "TOXIC";
    case Label::nontoxic: return "NONTOXIC";
    case Label::pad: return "PAD";
    }
    return "?";
}

inline std::ostream& operator<<(std::ostream& os, Label l) { return os << to_string(l); }

/// A word or symbol of a post with its offsets in the original text.
struct Token {
    std::string surface;
    std::size_t start = 0;
    std::size_t end = 0;
    std::string norm;

    friend bool operator==(const Token&, const Token&) = default;
};

namespace detail {

inline bool is_joiner(char32_t c) {
    return c == '\'' || c == '-' || c == '_' || c == '$' || c == '*' || c == '@' || c == '#';
}

} // namespace detail

/// Splits text into word tokens and single-symbol tokens.
///
/// A word is a maximal run of alphanumerics that may contain interior runs
/// of joiner characters (' - _ $ * @ #) when the run is flanked by
/// alphanumerics on both sides, so "a$$hole" and "pu55y" stay whole. Every
/// other non-space character is a token of its own.
inline std::vector<Token> tokenize(std::u32string_view text) {
    std::vector<Token> tokens;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        const char32_t c = text[i];
        if (unicode::is_space(c)) {
            ++i;
            continue;
        }
        std::size_t end = i + 1;
        if (unicode::is_alnum(c)) {
            while (end < n) {
                if (unicode::is_alnum(text[end])) {
                    ++end;
                    continue;
                }
                std::size_t j = end;
                while (j < n && detail::is_joiner(text[j])) ++j;
                if (j > end && j < n && unicode::is_alnum(text[j])) {
                    end = j;
                    continue;
                }
                break;
            }
        }
        const auto piece = text.substr(i, end - i);
        tokens.push_back(Token{unicode::encode(piece), i, end, unicode::encode(unicode::to_lower(piece))});
        i = end;
    }
    return tokens;
}

inline std::vector<Token> tokenize(std::string_view utf8) { return tokenize(unicode::decode(utf8)); }

/// Maximal runs of consecutive indices.
inline std::vector<CharSpan> index_set_to_spans(const CharIndexSet& s) {
    std::vector<CharSpan> spans;
    for (CharIndex i : s) {
        if (!spans.empty() && spans.back().end == i) {
            ++spans.back().end;
        } else {
            spans.push_back(CharSpan{i, i + 1});
        }
    }
    return spans;
}

inline CharIndexSet spans_to_index_set(std::span<const CharSpan> spans) {
    std::vector<CharIndex> values;
    for (const auto& sp : spans) {
        for (CharIndex i = sp.start; i < sp.end; ++i) values.push_back(i);
    }
    return CharIndexSet::from_unsorted(std::move(values));
}

/// A token is TOXIC when any of its characters is in the gold set.
inline std::vector<Label> project_gold_to_tokens(const CharIndexSet& gold, std::span<const Token> tokens) {
    std::vector<Label> labels;
    labels.reserve(tokens.size());
    for (const auto& t : tokens) {
        const auto it = std::lower_bound(gold.begin(), gold.end(), t.start,
                                         [](CharIndex a, std::size_t b) { return a < b; });
        labels.push_back(it != gold.end() && *it < t.end ? Label::toxic : Label::nontoxic);
    }
    return labels;
}

/// Characters of TOXIC tokens, plus every character between two TOXIC
/// tokens that are neighbours in token order. PAD counts as NONTOXIC.
inline CharIndexSet token_labels_to_index_set(std::span<const Token> tokens, std::span<const Label> labels) {
    if (tokens.size() != labels.size()) {
        throw ValidationError("token/label count mismatch: " + std::to_string(tokens.size()) + " vs " +
                              std::to_string(labels.size()));
    }
    std::vector<CharIndex> values;
    bool previous_toxic = false;
    std::size_t previous_end = 0;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        const bool toxic = labels[k] == Label::toxic;
        if (toxic) {
            const std::size_t from = previous_toxic ? previous_end : tokens[k].start;
            for (std::size_t i = from; i < tokens[k].end; ++i) values.push_back(static_cast<CharIndex>(i));
            previous_end = tokens[k].end;
        }
        previous_toxic = toxic;
    }
    return CharIndexSet::from_unsorted(std::move(values));
}

/// Per-post character Dice F1. Both empty scores 1, one empty scores 0.
inline double char_f1(const CharIndexSet& pred, const CharIndexSet& gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    if (pred.empty() || gold.empty()) return 0.0;
    const auto overlap = static_cast<double>(intersection_size(pred, gold));
    return 2.0 * overlap / static_cast<double>(pred.size() + gold.size());
}

using PredGold = std::pair<CharIndexSet, CharIndexSet>;

/// Unweighted mean of char_f1 over posts.
inline double corpus_f1(std::span<const PredGold> pairs) {
    if (pairs.empty()) throw ValidationError("no posts");
    double sum = 0.0;
    for (const auto& [pred, gold] : pairs) sum += char_f1(pred, gold);
    return sum / static_cast<double>(pairs.size());
}

/// "[3, 4, 5]" style serialization used by prediction files.
inline std::string format_index_list(const CharIndexSet& s) {
    std::string out = "[";
    bool first = true;
    for (CharIndex i : s) {
        if (!first) out += ", ";
        out += std::to_string(i);
        first = false;
    }
    out += "]";
    return out;
}

} // namespace toxspan

#endif // TOXSPAN_SPAN_HPP
