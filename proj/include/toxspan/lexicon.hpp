#ifndef TOXSPAN_LEXICON_HPP
#define TOXSPAN_LEXICON_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "toxspan/error.hpp"
#include "toxspan/span.hpp"

namespace toxspan {

/// Term normalization shared with corpus tokens: tokenize, lowercase, and
/// join the token forms with single spaces.
inline std::vector<std::string> term_tokens(std::string_view term) {
    std::vector<std::string> out;
    for (auto& t : tokenize(term)) out.push_back(std::move(t.norm));
    return out;
}

inline std::string normalize_term(std::string_view term) {
    std::string out;
    for (const auto& t : term_tokens(term)) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

} // namespace detail

/// Set of normalized terms; multiword terms are stored as token sequences
/// joined by single spaces.
class Lexicon {
public:
    Lexicon() = default;
    Lexicon(std::initializer_list<std::string_view> terms) {
        for (auto t : terms) add(t);
    }

    /// Adds a term after normalization. Returns false if it has no
    /// alphanumeric content.
    bool add(std::string_view raw) {
        auto parts = term_tokens(raw);
        const auto text = unicode::decode(raw);
        if (std::none_of(text.begin(), text.end(), [](char32_t c) { return unicode::is_alnum(c); })) return false;
        max_tokens_ = std::max(max_tokens_, parts.size());
        std::string joined;
        for (const auto& p : parts) {
            if (!joined.empty()) joined.push_back(' ');
            joined += p;
        }
        terms_.insert(std::move(joined));
        return true;
    }

    bool contains(std::string_view normalized) const { return terms_.find(normalized) != terms_.end(); }
    std::size_t size() const noexcept { return terms_.size(); }
    bool empty() const noexcept { return terms_.empty(); }
    std::size_t max_tokens() const noexcept { return max_tokens_; }
    const std::set<std::string, std::less<>>& terms() const noexcept { return terms_; }

    /// Marks tokens covered by any lexicon term, matching multiword terms
    /// as contiguous token n-grams.
    std::vector<bool> match(std::span<const Token> tokens) const {
        std::vector<bool> hit(tokens.size(), false);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            std::string gram;
            for (std::size_t len = 1; len <= max_tokens_ && i + len <= tokens.size(); ++len) {
                if (len > 1) gram.push_back(' ');
                gram += tokens[i + len - 1].norm;
                if (contains(gram)) {
                    for (std::size_t k = i; k < i + len; ++k) hit[k] = true;
                }
            }
        }
        return hit;
    }

private:
    std::set<std::string, std::less<>> terms_;
    std::size_t max_tokens_ = 0;
};

/// One term per line; blank lines and lines starting with '#' are ignored.
inline Lexicon load_lexicon(std::istream& in) {
    Lexicon lex;
    std::string line;
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        lex.add(t);
    }
    return lex;
}

inline Lexicon load_lexicon(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return load_lexicon(in);
}

/// Word polarity in [-1, 1]; unknown words score 0.
class SentimentLexicon {
public:
    SentimentLexicon() = default;
    SentimentLexicon(std::initializer_list<std::pair<std::string_view, double>> entries) {
        for (const auto& [term, polarity] : entries) set(term, polarity);
    }

    void set(std::string_view term, double polarity) {
        if (!std::isfinite(polarity) || polarity < -1.0 || polarity > 1.0) {
            throw ValidationError("polarity out of [-1, 1] for '" + std::string(term) + "'");
        }
        auto key = normalize_term(term);
        if (key.empty()) return;
        polarity_[std::move(key)] = polarity;
    }

    double polarity(std::string_view normalized) const {
        const auto it = polarity_.find(normalized);
        return it == polarity_.end() ? 0.0 : it->second;
    }

    std::size_t size() const noexcept { return polarity_.size(); }

private:
    std::map<std::string, double, std::less<>> polarity_;
};

/// Lines of `term<TAB>polarity`; '#' comments allowed.
inline SentimentLexicon load_sentiment_lexicon(std::istream& in) {
    SentimentLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto tab = t.find('\t');
        if (tab == std::string_view::npos) {
            throw DataError("sentiment lexicon line " + std::to_string(line_no) + ": expected term<TAB>polarity");
        }
        const auto value = detail::trim(t.substr(tab + 1));
        double polarity = 0.0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), polarity);
        if (ec != std::errc{} || ptr != value.data() + value.size()) {
            throw DataError("sentiment lexicon line " + std::to_string(line_no) + ": bad polarity '" +
                            std::string(value) + "'");
        }
        lex.set(t.substr(0, tab), polarity);
    }
    return lex;
}

inline SentimentLexicon load_sentiment_lexicon(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return load_sentiment_lexicon(in);
}

} // namespace toxspan

#endif // TOXSPAN_LEXICON_HPP
