#ifndef TOXSPAN_CRF_HPP
#define TOXSPAN_CRF_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/error.hpp"
#include "toxspan/lexicon.hpp"
#include "toxspan/rng.hpp"
#include "toxspan/span.hpp"

namespace toxspan::crf {

inline constexpr std::size_t L = kNumLabels;

inline std::size_t label_index(Label l) { return static_cast<std::size_t>(l); }

// ---------------------------------------------------------------------------
// Features

/// Sparse binary features (ids into a hashed space) plus an optional dense
/// embedding.
struct FeatureVector {
    std::vector<std::uint32_t> sparse;
    std::vector<double> dense;

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct FeatureConfig {
    std::uint32_t hash_bits = 20;
    std::size_t window = 2;

    std::size_t hash_space() const { return std::size_t{1} << hash_bits; }
};

struct FeatureResources {
    const Lexicon* hate = nullptr;
    const SentimentLexicon* sentiment = nullptr;
};

/// FNV-1a, reduced to the hashed feature space. Collisions are tolerated.
inline std::uint32_t feature_id(std::string_view name, std::size_t space) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return static_cast<std::uint32_t>(h % space);
}

inline constexpr std::string_view kPadFeature = "__pad__";

inline FeatureVector pad_features(const FeatureConfig& config, std::size_t dense_dim) {
    return FeatureVector{{feature_id(kPadFeature, config.hash_space())}, std::vector<double>(dense_dim, 0.0)};
}

/// Template features per token: identity, affixes up to 3 scalars, lexicon
/// hits, polarity sign, digit/symbol/all-caps flags, neighbour identities
/// within the window, and sequence boundary markers. `embeddings`, when
/// non-empty, supplies one dense vector per token.
inline std::vector<FeatureVector> featurize(std::span<const Token> tokens, const FeatureConfig& config,
                                            const FeatureResources& resources = {},
                                            std::span<const std::vector<double>> embeddings = {}) {
    if (!embeddings.empty() && embeddings.size() != tokens.size()) {
        throw ValidationError("embedding count does not match token count");
    }
    const std::size_t space = config.hash_space();
    const std::size_t n = tokens.size();
    const std::vector<bool> hate = resources.hate ? resources.hate->match(tokens) : std::vector<bool>(n, false);
    std::vector<FeatureVector> out(n);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
        names.clear();
        const Token& t = tokens[i];
        const auto cps = unicode::decode(t.norm);
        names.emplace_back("bias");
        names.push_back("w=" + t.norm);
        for (std::size_t k = 1; k <= 3 && k <= cps.size(); ++k) {
            names.push_back("pre" + std::to_string(k) + "=" + unicode::encode(std::u32string_view(cps).substr(0, k)));
            names.push_back("suf" + std::to_string(k) + "=" +
                            unicode::encode(std::u32string_view(cps).substr(cps.size() - k)));
        }
        if (hate[i]) names.emplace_back("hate");
        if (resources.sentiment) {
            const double p = resources.sentiment->polarity(t.norm);
            names.emplace_back(p < 0.0 ? "pol=neg" : p > 0.0 ? "pol=pos" : "pol=0");
        }
        if (std::any_of(cps.begin(), cps.end(), [](char32_t c) { return c >= '0' && c <= '9'; })) {
            names.emplace_back("digit");
        }
        if (std::any_of(cps.begin(), cps.end(), [](char32_t c) { return !unicode::is_alnum(c); })) {
            names.emplace_back("sym");
        }
        const auto surface = unicode::decode(t.surface);
        const bool has_upper = std::any_of(surface.begin(), surface.end(),
                                           [](char32_t c) { return unicode::to_lower(c) != c; });
        const bool has_lower = std::any_of(surface.begin(), surface.end(), [](char32_t c) { return c >= 'a' && c <= 'z'; });
        if (surface.size() > 1 && has_upper && !has_lower) names.emplace_back("allcaps");
        const auto w = static_cast<std::ptrdiff_t>(config.window);
        for (std::ptrdiff_t d = -w; d <= w; ++d) {
            if (d == 0) continue;
            const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + d;
            const std::string& word = j < 0 ? std::string("<s>")
                                      : j >= static_cast<std::ptrdiff_t>(n) ? std::string("</s>")
                                                                            : tokens[static_cast<std::size_t>(j)].norm;
            names.push_back("w" + std::string(d < 0 ? "" : "+") + std::to_string(d) + "=" + word);
        }
        if (i == 0) names.emplace_back("bos");
        if (i + 1 == n) names.emplace_back("eos");

        auto& fv = out[i];
        fv.sparse.reserve(names.size());
        for (const auto& name : names) fv.sparse.push_back(feature_id(name, space));
        std::sort(fv.sparse.begin(), fv.sparse.end());
        fv.sparse.erase(std::unique(fv.sparse.begin(), fv.sparse.end()), fv.sparse.end());
        if (!embeddings.empty()) fv.dense = embeddings[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parameters

/// Dimensions of a model: hashed sparse features, dense embedding width,
/// and 0-2 tanh hidden layers of a common width.
struct ModelShape {
    std::size_t sparse_dim = 0;
    std::size_t dense_dim = 0;
    std::size_t hidden_layers = 0;
    std::size_t hidden_width = 0;

    std::size_t input_dim() const { return sparse_dim + dense_dim; }
    std::size_t emission_input_dim() const { return hidden_layers == 0 ? input_dim() : hidden_width; }

    friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// All trainable values in one flat vector:
///   transition (L x L, from-row, to-column) | start (L) | stop (L)
///   | per hidden layer: W (out x in, row-major), b (out)
///   | emission E (L x emission_input_dim, row-major)
class Layout {
public:
    explicit Layout(const ModelShape& shape) : shape_(shape) {
        if (shape.hidden_layers > 2) throw ValidationError("at most 2 hidden layers are supported");
        if (shape.hidden_layers > 0 && shape.hidden_width == 0) throw ValidationError("hidden width must be positive");
        std::size_t off = L * L + 2 * L;
        std::size_t in = shape.input_dim();
        for (std::size_t k = 0; k < shape.hidden_layers; ++k) {
            layer_w_.push_back(off);
            off += shape.hidden_width * in;
            layer_b_.push_back(off);
            off += shape.hidden_width;
            in = shape.hidden_width;
        }
        emission_ = off;
        total_ = off + L * in;
    }

    const ModelShape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return total_; }
    std::size_t transition(std::size_t from, std::size_t to) const { return from * L + to; }
    std::size_t start(std::size_t y) const { return L * L + y; }
    std::size_t stop(std::size_t y) const { return L * L + L + y; }
    std::size_t layer_in(std::size_t k) const { return k == 0 ? shape_.input_dim() : shape_.hidden_width; }
    std::size_t layer_out(std::size_t) const { return shape_.hidden_width; }
    std::size_t layer_weight(std::size_t k) const { return layer_w_[k]; }
    std::size_t layer_bias(std::size_t k) const { return layer_b_[k]; }
    std::size_t emission() const noexcept { return emission_; }

private:
    ModelShape shape_;
    std::vector<std::size_t> layer_w_;
    std::vector<std::size_t> layer_b_;
    std::size_t emission_ = 0;
    std::size_t total_ = 0;
};

struct CrfParams {
    explicit CrfParams(const ModelShape& shape) : layout(shape), values(layout.size(), 0.0) {}

    const ModelShape& shape() const { return layout.shape(); }

    Layout layout;
    std::vector<double> values;
};

/// Weights uniform in [-0.1, 0.1] from the seed; transitions, boundary
/// scores and biases start at zero.
inline CrfParams initialize(const ModelShape& shape, std::uint64_t seed) {
    CrfParams params(shape);
    Rng rng(seed);
    const Layout& lay = params.layout;
    for (std::size_t k = 0; k < shape.hidden_layers; ++k) {
        const std::size_t n = lay.layer_in(k) * lay.layer_out(k);
        for (std::size_t i = 0; i < n; ++i) params.values[lay.layer_weight(k) + i] = rng.uniform(-0.1, 0.1);
    }
    for (std::size_t i = lay.emission(); i < lay.size(); ++i) params.values[i] = rng.uniform(-0.1, 0.1);
    return params;
}

// ---------------------------------------------------------------------------
// Emissions

/// Row-major n x L score matrix.
struct Emissions {
    std::size_t n = 0;
    std::vector<double> scores;

    double operator()(std::size_t t, std::size_t y) const { return scores[t * L + y]; }
    double& operator()(std::size_t t, std::size_t y) { return scores[t * L + y]; }
};

/// Hidden activations kept for backpropagation: per layer, n x width.
struct ForwardCache {
    std::vector<std::vector<double>> hidden;
};

namespace detail {

inline void check_input(const ModelShape& shape, const FeatureVector& x) {
    if (x.dense.size() != shape.dense_dim) {
        throw ValidationError("dense feature dimension " + std::to_string(x.dense.size()) + " != model " +
                              std::to_string(shape.dense_dim));
    }
    if (!x.sparse.empty() && x.sparse.back() >= shape.sparse_dim) {
        throw ValidationError("sparse feature id " + std::to_string(x.sparse.back()) + " outside model space " +
                              std::to_string(shape.sparse_dim));
    }
}

/// row . x for a row of a matrix over the raw input space.
inline double dot_input(const double* row, std::size_t sparse_dim, const FeatureVector& x) {
    double s = 0.0;
    for (auto id : x.sparse) s += row[id];
    for (std::size_t j = 0; j < x.dense.size(); ++j) s += row[sparse_dim + j] * x.dense[j];
    return s;
}

inline double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

} // namespace detail

/// psi = E . h(x), h the identity or the tanh stack.
inline Emissions emission_scores(const CrfParams& params, std::span<const FeatureVector> features,
                                 ForwardCache* cache = nullptr) {
    const ModelShape& shape = params.shape();
    const Layout& lay = params.layout;
    const double* theta = params.values.data();
    const std::size_t n = features.size();
    for (const auto& x : features) detail::check_input(shape, x);

    Emissions psi{n, std::vector<double>(n * L, 0.0)};
    std::vector<std::vector<double>> hidden(shape.hidden_layers);
    for (std::size_t k = 0; k < shape.hidden_layers; ++k) {
        const std::size_t in = lay.layer_in(k);
        const std::size_t out = lay.layer_out(k);
        const double* w = theta + lay.layer_weight(k);
        const double* b = theta + lay.layer_bias(k);
        hidden[k].assign(n * out, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t r = 0; r < out; ++r) {
                double z = b[r];
                if (k == 0) {
                    z += detail::dot_input(w + r * in, shape.sparse_dim, features[t]);
                } else {
                    const double* prev = hidden[k - 1].data() + t * in;
                    for (std::size_t j = 0; j < in; ++j) z += w[r * in + j] * prev[j];
                }
                hidden[k][t * out + r] = std::tanh(z);
            }
        }
    }
    const std::size_t in = shape.emission_input_dim();
    const double* e = theta + lay.emission();
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t y = 0; y < L; ++y) {
            if (shape.hidden_layers == 0) {
                psi(t, y) = detail::dot_input(e + y * in, shape.sparse_dim, features[t]);
            } else {
                const double* h = hidden.back().data() + t * in;
                double s = 0.0;
                for (std::size_t j = 0; j < in; ++j) s += e[y * in + j] * h[j];
                psi(t, y) = s;
            }
        }
    }
    if (cache) cache->hidden = std::move(hidden);
    return psi;
}

// ---------------------------------------------------------------------------
// Chain inference

/// Transition, start and stop scores.
struct ChainParams {
    std::array<double, L * L> transition{};
    std::array<double, L> start{};
    std::array<double, L> stop{};

    double trans(std::size_t from, std::size_t to) const { return transition[from * L + to]; }
};

inline ChainParams chain_params(const CrfParams& params) {
    ChainParams c;
    const Layout& lay = params.layout;
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < L; ++j) c.transition[i * L + j] = params.values[lay.transition(i, j)];
        c.start[i] = params.values[lay.start(i)];
        c.stop[i] = params.values[lay.stop(i)];
    }
    return c;
}

inline double path_score(const Emissions& psi, const ChainParams& chain, std::span<const Label> labels) {
    if (labels.size() != psi.n || psi.n == 0) throw ValidationError("label path length mismatch");
    double s = chain.start[label_index(labels[0])] + chain.stop[label_index(labels.back())];
    for (std::size_t t = 0; t < psi.n; ++t) {
        s += psi(t, label_index(labels[t]));
        if (t > 0) s += chain.trans(label_index(labels[t - 1]), label_index(labels[t]));
    }
    return s;
}

/// Forward recursion in log space; alpha is n x L.
inline std::vector<double> forward_scores(const Emissions& psi, const ChainParams& chain) {
    const std::size_t n = psi.n;
    std::vector<double> alpha(n * L);
    std::array<double, L> terms{};
    for (std::size_t y = 0; y < L; ++y) alpha[y] = chain.start[y] + psi(0, y);
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t y = 0; y < L; ++y) {
            for (std::size_t i = 0; i < L; ++i) terms[i] = alpha[(t - 1) * L + i] + chain.trans(i, y);
            alpha[t * L + y] = psi(t, y) + detail::log_sum_exp(terms);
        }
    }
    return alpha;
}

/// log of the sum over all label paths of exp(path score).
inline double log_partition(const Emissions& psi, const ChainParams& chain) {
    if (psi.n == 0) throw ValidationError("log_partition needs at least one position");
    const auto alpha = forward_scores(psi, chain);
    std::array<double, L> terms{};
    for (std::size_t y = 0; y < L; ++y) terms[y] = alpha[(psi.n - 1) * L + y] + chain.stop[y];
    return detail::log_sum_exp(terms);
}

struct Marginals {
    double log_z = 0.0;
    std::vector<double> unary;    ///< n x L
    std::vector<double> pairwise; ///< (n-1) x L x L, [t-1][from][to]
};

inline Marginals forward_backward(const Emissions& psi, const ChainParams& chain) {
    const std::size_t n = psi.n;
    if (n == 0) throw ValidationError("forward_backward needs at least one position");
    const auto alpha = forward_scores(psi, chain);
    std::vector<double> beta(n * L);
    std::array<double, L> terms{};
    for (std::size_t y = 0; y < L; ++y) beta[(n - 1) * L + y] = chain.stop[y];
    for (std::size_t t = n - 1; t-- > 0;) {
        for (std::size_t i = 0; i < L; ++i) {
            for (std::size_t j = 0; j < L; ++j) terms[j] = chain.trans(i, j) + psi(t + 1, j) + beta[(t + 1) * L + j];
            beta[t * L + i] = detail::log_sum_exp(terms);
        }
    }
    Marginals m;
    for (std::size_t y = 0; y < L; ++y) terms[y] = alpha[(n - 1) * L + y] + chain.stop[y];
    m.log_z = detail::log_sum_exp(terms);
    m.unary.resize(n * L);
    for (std::size_t k = 0; k < n * L; ++k) m.unary[k] = std::exp(alpha[k] + beta[k] - m.log_z);
    m.pairwise.resize((n > 0 ? n - 1 : 0) * L * L);
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t i = 0; i < L; ++i) {
            for (std::size_t j = 0; j < L; ++j) {
                m.pairwise[((t - 1) * L + i) * L + j] =
                    std::exp(alpha[(t - 1) * L + i] + chain.trans(i, j) + psi(t, j) + beta[t * L + j] - m.log_z);
            }
        }
    }
    return m;
}

/// Highest-scoring path; ties go to the lower label index.
inline std::vector<Label> viterbi(const Emissions& psi, const ChainParams& chain) {
    const std::size_t n = psi.n;
    if (n == 0) throw ValidationError("viterbi needs at least one position");
    std::vector<double> delta(n * L);
    std::vector<std::size_t> back(n * L, 0);
    for (std::size_t y = 0; y < L; ++y) delta[y] = chain.start[y] + psi(0, y);
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t y = 0; y < L; ++y) {
            std::size_t best = 0;
            double best_score = delta[(t - 1) * L] + chain.trans(0, y);
            for (std::size_t i = 1; i < L; ++i) {
                const double s = delta[(t - 1) * L + i] + chain.trans(i, y);
                if (s > best_score) {
                    best_score = s;
                    best = i;
                }
            }
            delta[t * L + y] = best_score + psi(t, y);
            back[t * L + y] = best;
        }
    }
    std::size_t y = 0;
    double best_score = delta[(n - 1) * L] + chain.stop[0];
    for (std::size_t k = 1; k < L; ++k) {
        const double s = delta[(n - 1) * L + k] + chain.stop[k];
        if (s > best_score) {
            best_score = s;
            y = k;
        }
    }
    std::vector<Label> path(n);
    for (std::size_t t = n; t-- > 0;) {
        path[t] = static_cast<Label>(y);
        y = back[t * L + y];
    }
    return path;
}

// ---------------------------------------------------------------------------
// Likelihood and gradient

/// One training sequence; labels carry PAD exactly on padded positions.
struct Sequence {
    std::string id;
    std::vector<FeatureVector> features;
    std::vector<Label> labels;
};

/// Adds the gradient of (log Z - gold path score) for one sequence into
/// `grad` and returns that loss.
inline double accumulate_sequence(const CrfParams& params, const Sequence& seq, std::span<double> grad) {
    const std::size_t n = seq.features.size();
    if (n == 0 || seq.labels.size() != n) {
        throw ValidationError("sequence '" + seq.id + "' is empty or has mismatched labels");
    }
    const ModelShape& shape = params.shape();
    const Layout& lay = params.layout;
    ForwardCache cache;
    const Emissions psi = emission_scores(params, seq.features, &cache);
    const ChainParams chain = chain_params(params);
    const Marginals m = forward_backward(psi, chain);
    const double loss = m.log_z - path_score(psi, chain, seq.labels);
    if (!std::isfinite(loss)) throw NumericalError("non-finite loss on sequence '" + seq.id + "'");

    // d loss / d psi = marginal - indicator(gold)
    std::vector<double> dpsi = m.unary;
    for (std::size_t t = 0; t < n; ++t) dpsi[t * L + label_index(seq.labels[t])] -= 1.0;

    for (std::size_t y = 0; y < L; ++y) {
        grad[lay.start(y)] += m.unary[y];
        grad[lay.stop(y)] += m.unary[(n - 1) * L + y];
    }
    grad[lay.start(label_index(seq.labels.front()))] -= 1.0;
    grad[lay.stop(label_index(seq.labels.back()))] -= 1.0;
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t k = 0; k < L * L; ++k) grad[k] += m.pairwise[(t - 1) * L * L + k];
        grad[lay.transition(label_index(seq.labels[t - 1]), label_index(seq.labels[t]))] -= 1.0;
    }

    const double* theta = params.values.data();
    const std::size_t e_in = shape.emission_input_dim();
    double* ge = grad.data() + lay.emission();
    if (shape.hidden_layers == 0) {
        for (std::size_t t = 0; t < n; ++t) {
            const auto& x = seq.features[t];
            for (std::size_t y = 0; y < L; ++y) {
                const double d = dpsi[t * L + y];
                double* row = ge + y * e_in;
                for (auto id : x.sparse) row[id] += d;
                for (std::size_t j = 0; j < x.dense.size(); ++j) row[shape.sparse_dim + j] += d * x.dense[j];
            }
        }
        return loss;
    }

    const std::size_t H = shape.hidden_width;
    const double* e = theta + lay.emission();
    std::vector<double> da(H);
    std::vector<double> dz(H);
    for (std::size_t t = 0; t < n; ++t) {
        const double* h_top = cache.hidden.back().data() + t * H;
        std::fill(da.begin(), da.end(), 0.0);
        for (std::size_t y = 0; y < L; ++y) {
            const double d = dpsi[t * L + y];
            for (std::size_t j = 0; j < H; ++j) {
                ge[y * H + j] += d * h_top[j];
                da[j] += d * e[y * H + j];
            }
        }
        for (std::size_t k = shape.hidden_layers; k-- > 0;) {
            const double* h = cache.hidden[k].data() + t * H;
            for (std::size_t r = 0; r < H; ++r) dz[r] = da[r] * (1.0 - h[r] * h[r]);
            const std::size_t in = lay.layer_in(k);
            double* gw = grad.data() + lay.layer_weight(k);
            double* gb = grad.data() + lay.layer_bias(k);
            const double* w = theta + lay.layer_weight(k);
            for (std::size_t r = 0; r < H; ++r) gb[r] += dz[r];
            if (k == 0) {
                const auto& x = seq.features[t];
                for (std::size_t r = 0; r < H; ++r) {
                    double* row = gw + r * in;
                    for (auto id : x.sparse) row[id] += dz[r];
                    for (std::size_t j = 0; j < x.dense.size(); ++j) row[shape.sparse_dim + j] += dz[r] * x.dense[j];
                }
            } else {
                const double* prev = cache.hidden[k - 1].data() + t * H;
                std::fill(da.begin(), da.end(), 0.0);
                for (std::size_t r = 0; r < H; ++r) {
                    for (std::size_t j = 0; j < H; ++j) {
                        gw[r * H + j] += dz[r] * prev[j];
                        da[j] += dz[r] * w[r * H + j];
                    }
                }
            }
        }
    }
    return loss;
}

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

inline double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

/// sum over the batch of (log Z - gold score) + l2 * |theta|^2, with its
/// gradient. Sequences are reduced in batch order.
inline LossAndGrad neg_log_likelihood_and_grad(const CrfParams& params, std::span<const Sequence> batch, double l2) {
    LossAndGrad out;
    out.grad.assign(params.values.size(), 0.0);
    for (const auto& seq : batch) out.loss += accumulate_sequence(params, seq, out.grad);
    if (l2 != 0.0) {
        out.loss += l2 * squared_norm(params.values);
        for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += 2.0 * l2 * params.values[i];
    }
    if (!std::isfinite(out.loss)) throw NumericalError("non-finite batch loss");
    return out;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    std::size_t epochs = 10;
    double learning_rate = 1e-2;
    double l2 = 1e-4;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double clip = 5.0; ///< global gradient-norm clip; 0 disables
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool mask_padding = false; ///< true: no PAD positions are added
    std::optional<std::size_t> max_steps;

    /// Settings reported for fine-tuning pretrained encoders; meant for
    /// embedding-backed runs.
    static TrainConfig embedding_preset() {
        TrainConfig c;
        c.epochs = 2;
        c.learning_rate = 3e-5;
        return c;
    }

    void validate() const {
        if (epochs < 1) throw ValidationError("epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
        if (!(l2 >= 0.0)) throw ValidationError("l2 must be >= 0");
        if (batch_size < 1) throw ValidationError("batch size must be >= 1");
    }
};

struct TrainResult {
    CrfParams params;
    std::vector<double> epoch_loss; ///< mean batch objective per epoch
    std::size_t steps = 0;
};

/// Pads every sequence of a batch to the batch's longest length with PAD
/// positions.
inline std::vector<Sequence> pad_batch(std::span<const Sequence> batch, const FeatureVector& pad) {
    std::size_t longest = 0;
    for (const auto& s : batch) longest = std::max(longest, s.features.size());
    std::vector<Sequence> out(batch.begin(), batch.end());
    for (auto& s : out) {
        s.features.resize(longest, pad);
        s.labels.resize(longest, Label::pad);
    }
    return out;
}

/// Mini-batch Adam on the mean per-sequence negative log-likelihood plus
/// the L2 term. Shuffling uses one stream per epoch derived from the seed,
/// and gradients are reduced in batch order, so equal seeds give identical
/// runs.
inline TrainResult train(std::span<const Sequence> data, const ModelShape& shape, const TrainConfig& config,
                         const FeatureVector& pad) {
    config.validate();
    if (data.empty()) throw ValidationError("training set is empty");
    TrainResult result{initialize(shape, config.seed), {}, 0};
    auto& theta = result.params.values;
    std::vector<double> m(theta.size(), 0.0);
    std::vector<double> v(theta.size(), 0.0);
    std::vector<double> grad(theta.size(), 0.0);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.max_steps && result.steps >= *config.max_steps) break;
        Rng rng(derive_seed(config.seed, epoch + 1));
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t from = 0; from < order.size(); from += config.batch_size) {
            if (config.max_steps && result.steps >= *config.max_steps) break;
            const std::size_t to = std::min(order.size(), from + config.batch_size);
            std::vector<Sequence> batch;
            batch.reserve(to - from);
            for (std::size_t k = from; k < to; ++k) batch.push_back(data[order[k]]);
            if (!config.mask_padding) batch = pad_batch(batch, pad);

            std::fill(grad.begin(), grad.end(), 0.0);
            double loss = 0.0;
            for (const auto& seq : batch) loss += accumulate_sequence(result.params, seq, grad);
            const double scale = 1.0 / static_cast<double>(batch.size());
            loss = loss * scale + config.l2 * squared_norm(theta);
            if (!std::isfinite(loss)) {
                throw NumericalError("training diverged at epoch " + std::to_string(epoch + 1) + ", step " +
                                     std::to_string(result.steps + 1));
            }
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = grad[i] * scale + 2.0 * config.l2 * theta[i];
            if (config.clip > 0.0) {
                const double norm = std::sqrt(squared_norm(grad));
                if (norm > config.clip) {
                    const double c = config.clip / norm;
                    for (double& g : grad) g *= c;
                }
            }
            ++result.steps;
            const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(result.steps));
            const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(result.steps));
            for (std::size_t i = 0; i < theta.size(); ++i) {
                m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
                v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
                theta[i] -= config.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config.epsilon);
            }
            epoch_sum += loss;
            ++batches;
        }
        if (batches > 0) result.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Prediction

/// Trained parameters together with the feature settings they expect.
struct CrfModel {
    CrfParams params;
    FeatureConfig features;
};

/// Viterbi labels with PAD on a real token mapped to NONTOXIC.
inline std::vector<Label> decode(const CrfParams& params, std::span<const FeatureVector> features) {
    if (features.empty()) return {};
    auto labels = viterbi(emission_scores(params, features), chain_params(params));
    for (auto& l : labels) {
        if (l == Label::pad) l = Label::nontoxic;
    }
    return labels;
}

inline Sequence make_sequence(const AnnotatedPost& post, const FeatureConfig& config, const FeatureResources& resources) {
    const auto tokens = tokenize(post.text);
    return Sequence{post.id, featurize(tokens, config, resources), project_gold_to_tokens(post.gold, tokens)};
}

inline CharIndexSet predict_post(const CrfModel& model, const FeatureResources& resources, std::string_view text) {
    const auto tokens = tokenize(text);
    if (tokens.empty()) return {};
    const auto labels = decode(model.params, featurize(tokens, model.features, resources));
    return token_labels_to_index_set(tokens, labels);
}

} // namespace toxspan::crf

#endif // TOXSPAN_CRF_HPP
