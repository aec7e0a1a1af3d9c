#ifndef TOXSPAN_TREE_HPP
#define TOXSPAN_TREE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "toxspan/error.hpp"
#include "toxspan/span.hpp"

namespace toxspan {

enum class FeatureKind { numeric, categorical };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::size_t categories = 0; // categorical only

    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

using FeatureSchema = std::vector<FeatureSpec>;

struct TreeSample {
    std::vector<double> features;
    Label label = Label::nontoxic;
};

struct TreeConfig {
    std::size_t max_depth = 5;
    std::size_t min_leaf = 20;
};

/// Binary classification tree with axis-aligned tests. Numeric tests send
/// `x <= threshold` left; categorical tests send `x == category` left.
class DecisionTree {
public:
    struct Node {
        bool leaf = true;
        Label label = Label::nontoxic;
        std::size_t feature = 0;
        double threshold = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
        std::size_t samples = 0;
    };

    DecisionTree() = default;
    DecisionTree(FeatureSchema schema, std::vector<Node> nodes) : schema_(std::move(schema)), nodes_(std::move(nodes)) {}

    const FeatureSchema& schema() const noexcept { return schema_; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }

    std::size_t depth() const { return nodes_.empty() ? 0 : depth_of(0); }
    std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.leaf; }));
    }

    Label predict(std::span<const double> x) const {
        if (x.size() != schema_.size()) {
            throw ValidationError("feature schema mismatch: tree expects " + std::to_string(schema_.size()) +
                                  " features, got " + std::to_string(x.size()));
        }
        std::size_t i = 0;
        while (!nodes_.at(i).leaf) {
            const Node& n = nodes_[i];
            i = goes_left(n, x[n.feature]) ? n.left : n.right;
        }
        return nodes_[i].label;
    }

    bool goes_left(const Node& n, double value) const {
        return schema_[n.feature].kind == FeatureKind::categorical ? value == n.threshold : value <= n.threshold;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["features"] = nlohmann::json::array();
        for (const auto& f : schema_) {
            j["features"].push_back({{"name", f.name},
                                     {"kind", f.kind == FeatureKind::numeric ? "numeric" : "categorical"},
                                     {"categories", f.categories}});
        }
        j["nodes"] = nlohmann::json::array();
        for (const auto& n : nodes_) {
            if (n.leaf) {
                j["nodes"].push_back({{"leaf", true}, {"label", std::string(to_string(n.label))}, {"samples", n.samples}});
            } else {
                j["nodes"].push_back({{"leaf", false},
                                      {"feature", n.feature},
                                      {"threshold", n.threshold},
                                      {"left", n.left},
                                      {"right", n.right},
                                      {"samples", n.samples}});
            }
        }
        return j;
    }

    static DecisionTree from_json(const nlohmann::json& j) {
        FeatureSchema schema;
        for (const auto& f : j.at("features")) {
            schema.push_back(FeatureSpec{f.at("name").get<std::string>(),
                                         f.at("kind").get<std::string>() == "categorical" ? FeatureKind::categorical
                                                                                          : FeatureKind::numeric,
                                         f.value("categories", std::size_t{0})});
        }
        std::vector<Node> nodes;
        for (const auto& jn : j.at("nodes")) {
            Node n;
            n.leaf = jn.at("leaf").get<bool>();
            n.samples = jn.value("samples", std::size_t{0});
            if (n.leaf) {
                n.label = jn.at("label").get<std::string>() == "TOXIC" ? Label::toxic : Label::nontoxic;
            } else {
                n.feature = jn.at("feature").get<std::size_t>();
                n.threshold = jn.at("threshold").get<double>();
                n.left = jn.at("left").get<std::size_t>();
                n.right = jn.at("right").get<std::size_t>();
            }
            nodes.push_back(n);
        }
        for (const auto& n : nodes) {
            if (!n.leaf && (n.feature >= schema.size() || n.left >= nodes.size() || n.right >= nodes.size())) {
                throw DataError("malformed tree node");
            }
        }
        if (nodes.empty()) throw DataError("tree has no nodes");
        return DecisionTree(std::move(schema), std::move(nodes));
    }

private:
    std::size_t depth_of(std::size_t i) const {
        const Node& n = nodes_[i];
        return n.leaf ? 0 : 1 + std::max(depth_of(n.left), depth_of(n.right));
    }

    FeatureSchema schema_;
    std::vector<Node> nodes_;
};

namespace detail {

struct ClassCounts {
    std::array<std::size_t, 2> n{0, 0}; // toxic, nontoxic

    void add(Label l) { ++n[l == Label::toxic ? 0 : 1]; }
    void remove(Label l) { --n[l == Label::toxic ? 0 : 1]; }
    std::size_t total() const { return n[0] + n[1]; }

    /// Gini impurity times the sample count.
    double weighted_gini() const {
        const double t = static_cast<double>(total());
        if (t == 0.0) return 0.0;
        const double a = static_cast<double>(n[0]);
        const double b = static_cast<double>(n[1]);
        return t - (a * a + b * b) / t;
    }

    /// Majority class; a tie goes to NONTOXIC.
    Label majority() const { return n[0] > n[1] ? Label::toxic : Label::nontoxic; }
};

class CartBuilder {
public:
    CartBuilder(const FeatureSchema& schema, std::span<const TreeSample> samples, const TreeConfig& config)
        : schema_(schema), samples_(samples), config_(config) {}

    std::vector<DecisionTree::Node> build() {
        std::vector<std::size_t> rows(samples_.size());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        grow(rows, 0);
        return std::move(nodes_);
    }

private:
    struct Split {
        bool found = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double impurity = 0.0;
    };

    std::size_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
        ClassCounts counts;
        for (auto r : rows) counts.add(samples_[r].label);
        const std::size_t id = nodes_.size();
        nodes_.push_back(DecisionTree::Node{true, counts.majority(), 0, 0.0, 0, 0, rows.size()});

        const bool pure = counts.n[0] == 0 || counts.n[1] == 0;
        if (pure || depth >= config_.max_depth || rows.size() < 2 * config_.min_leaf) return id;
        const Split split = best_split(rows);
        if (!split.found) return id;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        const bool categorical = schema_[split.feature].kind == FeatureKind::categorical;
        for (auto r : rows) {
            const double v = samples_[r].features[split.feature];
            (categorical ? v == split.threshold : v <= split.threshold) ? left.push_back(r) : right.push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const std::size_t l = grow(left, depth + 1);
        const std::size_t rgt = grow(right, depth + 1);
        auto& node = nodes_[id];
        node.leaf = false;
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = rgt;
        return id;
    }

    // Scans features in schema order and candidate tests in ascending
    // value order; only a strictly lower impurity replaces the incumbent,
    // so the first best split wins.
    Split best_split(const std::vector<std::size_t>& rows) const {
        Split best;
        ClassCounts all;
        for (auto r : rows) all.add(samples_[r].label);
        const std::size_t min_leaf = std::max<std::size_t>(1, config_.min_leaf);
        const auto consider = [&](std::size_t f, double threshold, const ClassCounts& left, const ClassCounts& right) {
            if (left.total() < min_leaf || right.total() < min_leaf) return;
            const double impurity = left.weighted_gini() + right.weighted_gini();
            if (!best.found || impurity < best.impurity - 1e-12) best = Split{true, f, threshold, impurity};
        };

        std::vector<std::pair<double, Label>> column(rows.size());
        for (std::size_t f = 0; f < schema_.size(); ++f) {
            for (std::size_t k = 0; k < rows.size(); ++k) {
                column[k] = {samples_[rows[k]].features[f], samples_[rows[k]].label};
            }
            std::stable_sort(column.begin(), column.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            if (schema_[f].kind == FeatureKind::categorical) {
                std::size_t k = 0;
                while (k < column.size()) {
                    ClassCounts in;
                    const double value = column[k].first;
                    while (k < column.size() && column[k].first == value) in.add(column[k++].second);
                    ClassCounts out = all;
                    out.n[0] -= in.n[0];
                    out.n[1] -= in.n[1];
                    consider(f, value, in, out);
                }
            } else {
                ClassCounts left;
                ClassCounts right = all;
                for (std::size_t k = 0; k + 1 < column.size(); ++k) {
                    left.add(column[k].second);
                    right.remove(column[k].second);
                    if (column[k].first == column[k + 1].first) continue;
                    consider(f, 0.5 * (column[k].first + column[k + 1].first), left, right);
                }
            }
        }
        return best;
    }

    const FeatureSchema& schema_;
    std::span<const TreeSample> samples_;
    const TreeConfig& config_;
    std::vector<DecisionTree::Node> nodes_;
};

} // namespace detail

/// Greedy top-down CART with Gini impurity.
inline DecisionTree train_decision_tree(const FeatureSchema& schema, std::span<const TreeSample> samples,
                                        const TreeConfig& config = {}) {
    if (samples.empty()) throw ValidationError("cannot train a tree on zero samples");
    for (const auto& s : samples) {
        if (s.features.size() != schema.size()) {
            throw ValidationError("sample has " + std::to_string(s.features.size()) + " features, schema has " +
                                  std::to_string(schema.size()));
        }
        if (s.label == Label::pad) throw ValidationError("PAD is not a tree training label");
    }
    return DecisionTree(schema, detail::CartBuilder(schema, samples, config).build());
}

} // namespace toxspan

#endif // TOXSPAN_TREE_HPP
