#ifndef TOXSPAN_BASELINES_HPP
#define TOXSPAN_BASELINES_HPP

#include <span>
#include <string_view>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/error.hpp"
#include "toxspan/lexicon.hpp"
#include "toxspan/rng.hpp"
#include "toxspan/span.hpp"

namespace toxspan {

enum class BaselineMethod { random, hate, sentiment, combined };

inline BaselineMethod parse_baseline_method(std::string_view s) {
    if (s == "random") return BaselineMethod::random;
    if (s == "hate") return BaselineMethod::hate;
    if (s == "sentiment") return BaselineMethod::sentiment;
    if (s == "combined") return BaselineMethod::combined;
    throw ValidationError("unknown baseline method '" + std::string(s) + "'");
}

struct TaggerConfig {
    double p_toxic = 0.5;
    std::uint64_t seed = 0;
    bool use_hate = true;
    bool use_negative_sentiment = true;
};

/// Each token is TOXIC independently with probability p_toxic.
inline std::vector<Label> random_tagger(std::span<const Token> tokens, double p_toxic, Rng& rng) {
    if (!(p_toxic >= 0.0 && p_toxic <= 1.0)) throw ValidationError("p_toxic must lie in [0, 1]");
    std::vector<Label> labels;
    labels.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        labels.push_back(rng.bernoulli(p_toxic) ? Label::toxic : Label::nontoxic);
    }
    return labels;
}

inline std::vector<Label> random_tagger(std::span<const Token> tokens, double p_toxic, std::uint64_t seed) {
    Rng rng(seed);
    return random_tagger(tokens, p_toxic, rng);
}

inline std::vector<Label> hate_lexicon_tagger(std::span<const Token> tokens, const Lexicon& lexicon) {
    const auto hit = lexicon.match(tokens);
    std::vector<Label> labels;
    labels.reserve(tokens.size());
    for (bool h : hit) labels.push_back(h ? Label::toxic : Label::nontoxic);
    return labels;
}

inline std::vector<Label> sentiment_tagger(std::span<const Token> tokens, const SentimentLexicon& sentiment) {
    std::vector<Label> labels;
    labels.reserve(tokens.size());
    for (const auto& t : tokens) labels.push_back(sentiment.polarity(t.norm) < 0.0 ? Label::toxic : Label::nontoxic);
    return labels;
}

inline std::vector<Label> combined_tagger(std::span<const Token> tokens, const Lexicon& lexicon,
                                          const SentimentLexicon& sentiment) {
    auto labels = hate_lexicon_tagger(tokens, lexicon);
    const auto negative = sentiment_tagger(tokens, sentiment);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (negative[i] == Label::toxic) labels[i] = Label::toxic;
    }
    return labels;
}

/// Runs a baseline over a corpus. The random tagger draws each post from
/// its own stream derived from (seed, post position), so results do not
/// depend on evaluation order.
inline std::vector<CharIndexSet> run_baseline(std::span<const AnnotatedPost> posts, BaselineMethod method,
                                              const TaggerConfig& config, const Lexicon& lexicon,
                                              const SentimentLexicon& sentiment) {
    std::vector<CharIndexSet> out;
    out.reserve(posts.size());
    for (std::size_t i = 0; i < posts.size(); ++i) {
        const auto tokens = tokenize(posts[i].text);
        std::vector<Label> labels;
        switch (method) {
        case BaselineMethod::random:
            labels = random_tagger(tokens, config.p_toxic, derive_seed(config.seed, i));
            break;
        case BaselineMethod::hate:
            labels = hate_lexicon_tagger(tokens, lexicon);
            break;
        case BaselineMethod::sentiment:
            labels = sentiment_tagger(tokens, sentiment);
            break;
        case BaselineMethod::combined:
            labels = combined_tagger(tokens, config.use_hate ? lexicon : Lexicon{},
                                     config.use_negative_sentiment ? sentiment : SentimentLexicon{});
            break;
        }
        out.push_back(token_labels_to_index_set(tokens, labels));
    }
    return out;
}

} // namespace toxspan

#endif // TOXSPAN_BASELINES_HPP
