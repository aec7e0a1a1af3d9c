#ifndef TOXSPAN_ATTN_HPP
#define TOXSPAN_ATTN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/error.hpp"
#include "toxspan/interchange.hpp"
#include "toxspan/lexicon.hpp"
#include "toxspan/span.hpp"
#include "toxspan/tree.hpp"

namespace toxspan {

/// Coarse universal part-of-speech tags.
enum class PosTag : std::uint8_t { noun, verb, adj, adv, pron, det, adp, num, conj, prt, punct, other };

inline constexpr std::size_t kNumPosTags = 12;

inline std::string_view to_string(PosTag t) {
    static constexpr std::array<std::string_view, kNumPosTags> names = {
        "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ", "PRT", ".", "X"};
    return names[static_cast<std::size_t>(t)];
}

/// Accepts universal tag names (UD variants included) and common Penn
/// Treebank tags; anything else maps to X.
inline PosTag parse_pos(std::string_view s) {
    static constexpr std::pair<std::string_view, PosTag> table[] = {
        {"NOUN", PosTag::noun}, {"PROPN", PosTag::noun}, {"NN", PosTag::noun},    {"NNS", PosTag::noun},
        {"NNP", PosTag::noun},  {"NNPS", PosTag::noun},  {"VERB", PosTag::verb},  {"AUX", PosTag::verb},
        {"VB", PosTag::verb},   {"VBD", PosTag::verb},   {"VBG", PosTag::verb},   {"VBN", PosTag::verb},
        {"VBP", PosTag::verb},  {"VBZ", PosTag::verb},   {"MD", PosTag::verb},    {"ADJ", PosTag::adj},
        {"JJ", PosTag::adj},    {"JJR", PosTag::adj},    {"JJS", PosTag::adj},    {"ADV", PosTag::adv},
        {"RB", PosTag::adv},    {"RBR", PosTag::adv},    {"RBS", PosTag::adv},    {"WRB", PosTag::adv},
        {"PRON", PosTag::pron}, {"PRP", PosTag::pron},   {"PRP$", PosTag::pron},  {"WP", PosTag::pron},
        {"WP$", PosTag::pron},  {"DET", PosTag::det},    {"DT", PosTag::det},     {"PDT", PosTag::det},
        {"WDT", PosTag::det},   {"ADP", PosTag::adp},    {"IN", PosTag::adp},     {"NUM", PosTag::num},
        {"CD", PosTag::num},    {"CONJ", PosTag::conj},  {"CCONJ", PosTag::conj}, {"SCONJ", PosTag::conj},
        {"CC", PosTag::conj},   {"PRT", PosTag::prt},    {"PART", PosTag::prt},   {"RP", PosTag::prt},
        {"TO", PosTag::prt},    {"POS", PosTag::prt},    {".", PosTag::punct},    {"PUNCT", PosTag::punct},
        {",", PosTag::punct},   {":", PosTag::punct},    {"SYM", PosTag::punct},
    };
    for (const auto& [name, tag] : table) {
        if (name == s) return tag;
    }
    return PosTag::other;
}

/// Closed-class word lists plus suffix rules. Good enough for a tree
/// feature, not a tagger.
inline PosTag heuristic_pos(std::string_view norm) {
    static const Lexicon pronouns{"i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself", "he", "him",
                                  "his", "himself", "she", "her", "hers", "herself", "it", "its", "itself", "we",
                                  "us", "our", "ours", "they", "them", "their", "theirs", "themselves", "who", "whom",
                                  "whose", "what", "which", "someone", "anyone", "everyone", "nobody", "somebody",
                                  "anybody", "everybody", "something", "anything", "everything", "nothing"};
    static const Lexicon determiners{"the", "a", "an", "this", "that", "these", "those", "each", "every", "some",
                                     "any", "no", "all", "both", "either", "neither", "another", "such"};
    static const Lexicon adpositions{"of", "in", "on", "at", "by", "for", "with", "about", "against", "between",
                                     "into", "through", "during", "before", "after", "above", "below", "from", "up",
                                     "down", "out", "off", "over", "under", "than", "like", "without", "within",
                                     "across", "toward", "towards", "upon", "among", "around"};
    static const Lexicon conjunctions{"and", "or", "but", "nor", "yet", "so", "because", "although", "though",
                                      "while", "if", "unless", "whether", "since"};
    static const Lexicon particles{"to", "not"};
    static const Lexicon auxiliaries{"is", "am", "are", "was", "were", "be", "been", "being", "have", "has", "had",
                                     "do", "does", "did", "will", "would", "shall", "should", "can", "could", "may",
                                     "might", "must", "get", "got", "go", "said", "say", "know", "think", "make"};
    static const Lexicon adverbs{"very", "really", "just", "too", "also", "only", "even", "still", "never", "always",
                                 "often", "here", "there", "now", "then", "again", "ever", "why", "how", "when",
                                 "where", "quite", "so", "much", "more", "most", "well", "back", "already"};

    if (norm.empty()) return PosTag::other;
    const auto cps = unicode::decode(norm);
    if (std::none_of(cps.begin(), cps.end(), unicode::is_alnum)) return PosTag::punct;
    if (std::all_of(cps.begin(), cps.end(), [](char32_t c) { return (c >= '0' && c <= '9') || c == ',' || c == '.'; })) {
        return PosTag::num;
    }
    if (pronouns.contains(norm)) return PosTag::pron;
    if (determiners.contains(norm)) return PosTag::det;
    if (particles.contains(norm)) return PosTag::prt;
    if (adpositions.contains(norm)) return PosTag::adp;
    if (conjunctions.contains(norm)) return PosTag::conj;
    if (auxiliaries.contains(norm)) return PosTag::verb;
    if (adverbs.contains(norm)) return PosTag::adv;
    const auto ends = [&](std::string_view suffix) { return norm.size() > suffix.size() + 2 && norm.ends_with(suffix); };
    if (ends("ly")) return PosTag::adv;
    if (ends("ing") || ends("ed") || ends("ize") || ends("ise") || ends("ify")) return PosTag::verb;
    if (ends("ous") || ends("ful") || ends("ive") || ends("ic") || ends("able") || ends("ible") || ends("ish") ||
        ends("less") || ends("al") || ends("est")) {
        return PosTag::adj;
    }
    return PosTag::noun;
}

struct WordScore {
    Token token;
    double attn = 0.0;
    PosTag pos = PosTag::other;
    double polarity = 0.0;
    bool is_hate = false;
    std::vector<double> emb;
};

struct ScoredPost {
    std::string id;
    std::string text;
    std::vector<WordScore> words;
    double sent_prob = 0.0;
};

struct SubwordGroup {
    Token word;
    std::vector<double> scores;
};

/// One WordScore per group, its attention the mean of the subword scores.
inline std::vector<WordScore> pool_subwords(std::span<const SubwordGroup> groups) {
    std::vector<WordScore> out;
    out.reserve(groups.size());
    for (const auto& g : groups) {
        WordScore w;
        w.token = g.word;
        w.attn = pool_mean(g.scores);
        w.pos = heuristic_pos(g.word.norm);
        out.push_back(std::move(w));
    }
    return out;
}

/// Builds a ScoredPost from an interchange record, filling POS (when the
/// record has none), polarity and hate-list membership from the lexicons.
inline ScoredPost score_post(const InterchangeRecord& record, const Lexicon& hate, const SentimentLexicon& sentiment) {
    ScoredPost post;
    post.id = record.id;
    post.text = record.text;
    post.sent_prob = record.sent_prob;
    const auto text = unicode::decode(record.text);
    std::vector<Token> tokens;
    tokens.reserve(record.words.size());
    for (const auto& w : record.words) {
        const auto piece = std::u32string_view(text).substr(w.start, w.end - w.start);
        tokens.push_back(Token{unicode::encode(piece), w.start, w.end, unicode::encode(unicode::to_lower(piece))});
    }
    const auto hits = hate.match(tokens);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& w = record.words[i];
        WordScore ws;
        ws.attn = w.attn;
        ws.pos = w.pos ? parse_pos(*w.pos) : heuristic_pos(tokens[i].norm);
        ws.polarity = sentiment.polarity(tokens[i].norm);
        ws.is_hate = hits[i];
        ws.emb = w.emb;
        ws.token = std::move(tokens[i]);
        post.words.push_back(std::move(ws));
    }
    return post;
}

/// Proceed to span selection only when the sentence probability exceeds tau.
inline bool gate(const ScoredPost& post, double tau) { return post.sent_prob > tau; }

/// Keeps the top ceil(p * n) words by attention (ties: earlier word first),
/// then drops kept words whose attention is below theta. Returns ascending
/// word indices.
inline std::vector<std::size_t> select_rule(std::span<const WordScore> words, double percentile, double threshold) {
    if (!(percentile > 0.0 && percentile <= 1.0)) throw ValidationError("percentile must lie in (0, 1]");
    if (!(threshold >= 0.0)) throw ValidationError("threshold must be >= 0");
    const std::size_t n = words.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return words[a].attn > words[b].attn; });
    // the small slack keeps e.g. 0.75 * 4 from rounding up to 4
    const auto keep = std::min(n, static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(n) - 1e-9)));
    std::vector<std::size_t> selected;
    for (std::size_t k = 0; k < keep; ++k) {
        if (words[order[k]].attn >= threshold) selected.push_back(order[k]);
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

enum class Rule { r1, r2, r3 };

inline Rule parse_rule(std::string_view s) {
    if (s == "R1" || s == "r1") return Rule::r1;
    if (s == "R2" || s == "r2") return Rule::r2;
    if (s == "R3" || s == "r3") return Rule::r3;
    throw ValidationError("unknown rule '" + std::string(s) + "'");
}

/// R1 removes stop-words from the selection, R2 additionally removes words
/// of positive polarity, R3 then adds every hate-list word regardless of
/// its attention.
inline std::vector<std::size_t> apply_rule_set(std::span<const WordScore> words, std::span<const std::size_t> selection,
                                               Rule rule, const Lexicon& stopwords) {
    std::vector<bool> keep(words.size(), false);
    for (auto i : selection) {
        if (i >= words.size()) throw ValidationError("selection index out of range");
        keep[i] = !stopwords.contains(words[i].token.norm);
        if (rule != Rule::r1 && words[i].polarity > 0.0) keep[i] = false;
    }
    if (rule == Rule::r3) {
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (words[i].is_hate) keep[i] = true;
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (keep[i]) out.push_back(i);
    }
    return out;
}

struct RuleConfig {
    double percentile = 0.75;
    double threshold = 1e-4;
    Rule rule = Rule::r1;
    double gate_tau = 0.5;
};

inline std::vector<Token> word_tokens(const ScoredPost& post) {
    std::vector<Token> tokens;
    tokens.reserve(post.words.size());
    for (const auto& w : post.words) tokens.push_back(w.token);
    return tokens;
}

inline CharIndexSet words_to_index_set(const ScoredPost& post, std::span<const std::size_t> chosen) {
    std::vector<Label> labels(post.words.size(), Label::nontoxic);
    for (auto i : chosen) labels[i] = Label::toxic;
    return token_labels_to_index_set(word_tokens(post), labels);
}

/// Full rule pipeline for one post. `gate_open` overrides the sentence
/// gate when set (e.g. an oracle gate from gold annotations).
inline CharIndexSet select_spans(const ScoredPost& post, const RuleConfig& config, const Lexicon& stopwords,
                                 std::optional<bool> gate_open = std::nullopt) {
    const bool open = gate_open.value_or(gate(post, config.gate_tau));
    if (!open) return {};
    const auto selection = select_rule(post.words, config.percentile, config.threshold);
    return words_to_index_set(post, apply_rule_set(post.words, selection, config.rule, stopwords));
}

struct DevPost {
    ScoredPost post;
    CharIndexSet gold;
};

struct GridCell {
    double percentile = 0.0;
    double threshold = 0.0;
    double f1 = 0.0;
};

struct GridResult {
    double percentile = 0.0;
    double threshold = 0.0;
    double f1 = 0.0;
    std::vector<GridCell> cells;
};

inline const std::vector<double>& default_thresholds() {
    static const std::vector<double> v{0.0, 1e-5, 1e-4, 1e-3, 1e-2};
    return v;
}

inline const std::vector<double>& default_percentiles() {
    static const std::vector<double> v{0.10, 0.25, 0.50, 0.75, 0.90, 1.0};
    return v;
}

/// Corpus F1 of one (percentile, threshold) cell on a dev set.
inline double evaluate_cell(std::span<const DevPost> dev, const RuleConfig& config, const Lexicon& stopwords,
                            bool gate_oracle = false) {
    std::vector<PredGold> pairs;
    pairs.reserve(dev.size());
    for (const auto& d : dev) {
        const std::optional<bool> open = gate_oracle ? std::optional<bool>(!d.gold.empty()) : std::nullopt;
        pairs.emplace_back(select_spans(d.post, config, stopwords, open), d.gold);
    }
    return corpus_f1(pairs);
}

/// Exhaustive search; ties go to the smaller percentile, then the larger
/// threshold.
inline GridResult grid_search(std::span<const DevPost> dev, std::vector<double> thresholds,
                              std::vector<double> percentiles, RuleConfig base, const Lexicon& stopwords,
                              bool gate_oracle = false) {
    if (thresholds.empty() || percentiles.empty()) throw ValidationError("grid must be non-empty");
    std::sort(percentiles.begin(), percentiles.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    GridResult result;
    bool first = true;
    for (double p : percentiles) {
        for (double t : thresholds) {
            base.percentile = p;
            base.threshold = t;
            const double f1 = evaluate_cell(dev, base, stopwords, gate_oracle);
            result.cells.push_back(GridCell{p, t, f1});
            if (first || f1 > result.f1) {
                result.percentile = p;
                result.threshold = t;
                result.f1 = f1;
                first = false;
            }
        }
    }
    return result;
}

/// Tree features per word: attention, POS category, polarity, hate flag.
inline const FeatureSchema& word_feature_schema() {
    static const FeatureSchema schema{{"attn", FeatureKind::numeric, 0},
                                      {"pos", FeatureKind::categorical, kNumPosTags},
                                      {"polarity", FeatureKind::numeric, 0},
                                      {"is_hate", FeatureKind::numeric, 0}};
    return schema;
}

inline std::vector<double> word_features(const WordScore& w) {
    return {w.attn, static_cast<double>(static_cast<std::uint8_t>(w.pos)), w.polarity, w.is_hate ? 1.0 : 0.0};
}

/// Training samples from the words of posts that pass the gate, labelled
/// by projecting gold spans onto the words.
inline std::vector<TreeSample> tree_samples(std::span<const DevPost> posts) {
    std::vector<TreeSample> samples;
    for (const auto& d : posts) {
        const auto tokens = word_tokens(d.post);
        const auto labels = project_gold_to_tokens(d.gold, tokens);
        for (std::size_t i = 0; i < d.post.words.size(); ++i) {
            samples.push_back(TreeSample{word_features(d.post.words[i]), labels[i]});
        }
    }
    return samples;
}

inline std::vector<Label> predict_tree(const DecisionTree& tree, std::span<const WordScore> words) {
    if (tree.schema() != word_feature_schema()) throw ValidationError("tree was trained on a different feature schema");
    std::vector<Label> labels;
    labels.reserve(words.size());
    for (const auto& w : words) labels.push_back(tree.predict(word_features(w)));
    return labels;
}

inline CharIndexSet predict_tree_post(const DecisionTree& tree, const ScoredPost& post, double gate_tau,
                                      std::optional<bool> gate_open = std::nullopt) {
    if (!gate_open.value_or(gate(post, gate_tau))) return {};
    return token_labels_to_index_set(word_tokens(post), predict_tree(tree, post.words));
}

} // namespace toxspan

#endif // TOXSPAN_ATTN_HPP
