#ifndef TOXSPAN_CORPUS_HPP
#define TOXSPAN_CORPUS_HPP

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxspan/csv.hpp"
#include "toxspan/error.hpp"
#include "toxspan/rng.hpp"
#include "toxspan/span.hpp"

namespace toxspan {

struct AnnotatedPost {
    std::string id;
    std::string text;
    CharIndexSet gold;
};

/// Parses a bracketed, comma-separated list of non-negative integers.
/// Whitespace is allowed anywhere between elements. The result is sorted
/// and deduplicated.
inline CharIndexSet parse_span_literal(std::string_view s) {
    std::size_t pos = 0;
    const auto skip_ws = [&] {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\r' || s[pos] == '\n')) ++pos;
    };
    const auto fail = [&](const std::string& what) -> ParseError { return ParseError(what, pos + 1); };

    skip_ws();
    if (pos >= s.size() || s[pos] != '[') throw fail("expected '['");
    ++pos;
    skip_ws();
    std::vector<CharIndex> values;
    if (pos < s.size() && s[pos] == ']') {
        ++pos;
    } else {
        while (true) {
            skip_ws();
            if (pos < s.size() && s[pos] == '-') {
                throw ValidationError("negative index at column " + std::to_string(pos + 1));
            }
            CharIndex v = 0;
            const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + s.size(), v);
            if (ec != std::errc{}) throw fail("expected integer");
            pos = static_cast<std::size_t>(ptr - s.data());
            values.push_back(v);
            skip_ws();
            if (pos < s.size() && s[pos] == ',') {
                ++pos;
                continue;
            }
            if (pos < s.size() && s[pos] == ']') {
                ++pos;
                break;
            }
            throw fail("expected ',' or ']'");
        }
    }
    skip_ws();
    if (pos != s.size()) throw fail("trailing characters after ']'");
    return CharIndexSet::from_unsorted(std::move(values));
}

struct ToxicSpansData {
    std::vector<AnnotatedPost> posts;
    std::size_t rows = 0;             ///< data rows read
    std::size_t skipped_rows = 0;     ///< malformed rows
    std::size_t dropped_indices = 0;  ///< gold indices past the end of the text
    std::size_t posts_with_gold = 0;
};

/// Reads a toxic-spans CSV with columns `spans` and `text` (and an
/// optional `id`; otherwise the 0-based row number is the id).
inline ToxicSpansData load_toxic_spans(std::istream& in, std::optional<std::size_t> limit = std::nullopt) {
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header) throw DataError("empty toxic-spans file");
    const auto spans_col = csv::column(*header, "spans");
    const auto text_col = csv::column(*header, "text");
    if (!spans_col) throw DataError("missing column 'spans'");
    if (!text_col) throw DataError("missing column 'text'");
    const auto id_col = csv::column(*header, "id");

    ToxicSpansData data;
    while (!limit || data.rows < *limit) {
        const auto record = reader.next();
        if (!record) break;
        const std::size_t row = data.rows++;
        if (record->size() != header->size()) {
            ++data.skipped_rows;
            continue;
        }
        AnnotatedPost post;
        try {
            post.gold = parse_span_literal((*record)[*spans_col]);
        } catch (const Error&) {
            ++data.skipped_rows;
            continue;
        }
        post.text = (*record)[*text_col];
        post.id = id_col ? (*record)[*id_col] : std::to_string(row);
        data.dropped_indices += post.gold.clamp(unicode::length(post.text));
        if (!post.gold.empty()) ++data.posts_with_gold;
        data.posts.push_back(std::move(post));
    }
    return data;
}

inline ToxicSpansData load_toxic_spans(const std::filesystem::path& path,
                                       std::optional<std::size_t> limit = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return load_toxic_spans(in, limit);
}

/// Sentence-level post with a toxicity score in [0, 1].
struct SentencePost {
    std::string id;
    std::string text;
    double toxicity = 0.0;
    bool hateful = false;
};

struct SentenceColumns {
    std::string id = "id";
    std::string text = "comment_text";
    std::string score = "target";
};

struct SentenceData {
    std::vector<SentencePost> posts;
    std::size_t rows = 0;
    std::size_t rejected_rows = 0;
};

/// hateful = score > threshold (strict).
inline SentenceData load_sentence_dataset(std::istream& in, double threshold = 0.5,
                                          const SentenceColumns& columns = {},
                                          std::optional<std::size_t> limit = std::nullopt) {
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header) throw DataError("empty sentence file");
    const auto id_col = csv::column(*header, columns.id);
    const auto text_col = csv::column(*header, columns.text);
    const auto score_col = csv::column(*header, columns.score);
    if (!id_col) throw DataError("missing column '" + columns.id + "'");
    if (!text_col) throw DataError("missing column '" + columns.text + "'");
    if (!score_col) throw DataError("missing column '" + columns.score + "'");

    SentenceData data;
    while (!limit || data.rows < *limit) {
        const auto record = reader.next();
        if (!record) break;
        ++data.rows;
        if (record->size() != header->size()) {
            ++data.rejected_rows;
            continue;
        }
        const std::string& raw = (*record)[*score_col];
        double score = 0.0;
        const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), score);
        if (ec != std::errc{} || ptr != raw.data() + raw.size() || !std::isfinite(score) || score < 0.0 ||
            score > 1.0) {
            ++data.rejected_rows;
            continue;
        }
        data.posts.push_back(SentencePost{(*record)[*id_col], (*record)[*text_col], score, score > threshold});
    }
    return data;
}

inline SentenceData load_sentence_dataset(const std::filesystem::path& path, double threshold = 0.5,
                                          const SentenceColumns& columns = {},
                                          std::optional<std::size_t> limit = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return load_sentence_dataset(in, threshold, columns, limit);
}

/// Draws n_total/2 hateful and n_total/2 non-hateful posts without
/// replacement, then shuffles the union. Deterministic for a fixed seed.
inline std::vector<SentencePost> balanced_sample(std::span<const SentencePost> posts, std::size_t n_total,
                                                 std::uint64_t seed) {
    if (n_total % 2 != 0) throw ValidationError("balanced sample size must be even");
    const std::size_t per_class = n_total / 2;
    std::vector<std::size_t> hateful;
    std::vector<std::size_t> benign;
    for (std::size_t i = 0; i < posts.size(); ++i) (posts[i].hateful ? hateful : benign).push_back(i);
    if (hateful.size() < per_class) {
        throw ValidationError("insufficient hateful posts: need " + std::to_string(per_class) + ", have " +
                              std::to_string(hateful.size()));
    }
    if (benign.size() < per_class) {
        throw ValidationError("insufficient non-hateful posts: need " + std::to_string(per_class) + ", have " +
                              std::to_string(benign.size()));
    }
    Rng rng(seed);
    const auto draw = [&](std::vector<std::size_t>& pool) {
        // partial Fisher-Yates: the first per_class slots become the sample
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(per_class);
    };
    draw(hateful);
    draw(benign);
    std::vector<std::size_t> chosen = hateful;
    chosen.insert(chosen.end(), benign.begin(), benign.end());
    rng.shuffle(std::span<std::size_t>(chosen));
    std::vector<SentencePost> out;
    out.reserve(chosen.size());
    for (std::size_t i : chosen) out.push_back(posts[i]);
    return out;
}

} // namespace toxspan

#endif // TOXSPAN_CORPUS_HPP
