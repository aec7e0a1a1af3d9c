#ifndef TOXSPAN_CROSSVAL_HPP
#define TOXSPAN_CROSSVAL_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "toxspan/corpus.hpp"
#include "toxspan/error.hpp"
#include "toxspan/rng.hpp"
#include "toxspan/span.hpp"

namespace toxspan {

/// Seeded shuffle of 0..n-1 cut into k contiguous folds. The first n % k
/// folds hold one extra item.
inline std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("cross-validation needs k >= 2");
    if (k > n) throw ValidationError("k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " posts");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n / k + (f < n % k ? 1 : 0);
        folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                        order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return folds;
}

using Predictor = std::function<CharIndexSet(const AnnotatedPost&)>;
using Trainer = std::function<Predictor(std::span<const AnnotatedPost>)>;

struct FoldResult {
    std::size_t fold = 0;
    std::size_t train_posts = 0;
    std::size_t test_posts = 0;
    double train_f1 = 0.0;
    double test_f1 = 0.0;

    friend bool operator==(const FoldResult&, const FoldResult&) = default;
};

struct MethodReport {
    std::string method;
    std::vector<FoldResult> folds;

    double mean_train() const { return mean(&FoldResult::train_f1); }
    double mean_test() const { return mean(&FoldResult::test_f1); }

    friend bool operator==(const MethodReport&, const MethodReport&) = default;

private:
    double mean(double FoldResult::*field) const {
        if (folds.empty()) return 0.0;
        double s = 0.0;
        for (const auto& f : folds) s += f.*field;
        return s / static_cast<double>(folds.size());
    }
};

struct Report {
    std::uint64_t seed = 0;
    std::size_t folds = 0;
    std::string config_hash;
    std::map<std::string, std::size_t> dataset;
    std::vector<MethodReport> methods;

    friend bool operator==(const Report&, const Report&) = default;
};

/// 64-bit FNV-1a of a canonical configuration string, as 16 hex digits.
inline std::string config_hash(std::string_view canonical) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline double evaluate(const Predictor& predict, std::span<const AnnotatedPost> posts) {
    std::vector<PredGold> pairs;
    pairs.reserve(posts.size());
    for (const auto& p : posts) pairs.emplace_back(predict(p), p.gold);
    return corpus_f1(pairs);
}

/// Trains on k-1 folds and scores corpus F1 on both the training folds and
/// the held-out fold, for every fold in turn.
inline MethodReport run_crossval(const std::string& method, std::span<const AnnotatedPost> posts, std::size_t k,
                                 std::uint64_t seed, const Trainer& trainer) {
    const auto folds = kfold_split(posts.size(), k, seed);
    MethodReport report{method, {}};
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<AnnotatedPost> train;
        std::vector<AnnotatedPost> test;
        for (std::size_t g = 0; g < k; ++g) {
            for (auto i : folds[g]) (g == f ? test : train).push_back(posts[i]);
        }
        try {
            const Predictor predict = trainer(train);
            report.folds.push_back(FoldResult{f + 1, train.size(), test.size(), evaluate(predict, train),
                                              evaluate(predict, test)});
        } catch (const Error& e) {
            throw Error(e.code(), "fold " + std::to_string(f + 1) + ": " + e.what());
        }
    }
    return report;
}

inline nlohmann::json to_json(const Report& r) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["folds"] = r.folds;
    j["config_hash"] = r.config_hash;
    j["dataset"] = r.dataset;
    j["methods"] = nlohmann::json::array();
    for (const auto& m : r.methods) {
        nlohmann::json jm;
        jm["method"] = m.method;
        jm["mean_train_f1"] = m.mean_train();
        jm["mean_test_f1"] = m.mean_test();
        jm["folds"] = nlohmann::json::array();
        for (const auto& f : m.folds) {
            jm["folds"].push_back({{"fold", f.fold},
                                   {"train_posts", f.train_posts},
                                   {"test_posts", f.test_posts},
                                   {"train_f1", f.train_f1},
                                   {"test_f1", f.test_f1}});
        }
        j["methods"].push_back(std::move(jm));
    }
    return j;
}

inline Report report_from_json(const nlohmann::json& j) {
    Report r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.folds = j.at("folds").get<std::size_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.dataset = j.at("dataset").get<std::map<std::string, std::size_t>>();
    for (const auto& jm : j.at("methods")) {
        MethodReport m;
        m.method = jm.at("method").get<std::string>();
        for (const auto& jf : jm.at("folds")) {
            m.folds.push_back(FoldResult{jf.at("fold").get<std::size_t>(), jf.at("train_posts").get<std::size_t>(),
                                         jf.at("test_posts").get<std::size_t>(), jf.at("train_f1").get<double>(),
                                         jf.at("test_f1").get<double>()});
        }
        r.methods.push_back(std::move(m));
    }
    return r;
}

/// Aligned table, F1 values with three decimals.
inline std::string format_table(const Report& r) {
    std::ostringstream out;
    char line[160];
    out << "# seed " << r.seed << ", " << r.folds << " folds, config " << r.config_hash << '\n';
    for (const auto& [name, rows] : r.dataset) out << "# " << name << ": " << rows << '\n';
    std::snprintf(line, sizeof line, "%-24s %-6s %10s %10s\n", "method", "fold", "F1 (train)", "F1 (test)");
    out << line;
    for (const auto& m : r.methods) {
        for (const auto& f : m.folds) {
            std::snprintf(line, sizeof line, "%-24s %-6zu %10.3f %10.3f\n", m.method.c_str(), f.fold, f.train_f1,
                          f.test_f1);
            out << line;
        }
        std::snprintf(line, sizeof line, "%-24s %-6s %10.3f %10.3f\n", m.method.c_str(), "mean", m.mean_train(),
                      m.mean_test());
        out << line;
    }
    return out.str();
}

inline std::filesystem::path table_path(const std::filesystem::path& report_path) {
    auto p = report_path;
    p.replace_extension(".txt");
    if (p == report_path) p += ".txt";
    return p;
}

/// Writes the JSON report to `path` and the table next to it (.txt).
inline void write_report(const Report& r, const std::filesystem::path& path) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write " + path.string());
        out << to_json(r).dump(2) << '\n';
        if (!out) throw DataError("failed writing " + path.string());
    }
    std::ofstream table(table_path(path), std::ios::binary);
    if (!table) throw DataError("cannot write " + table_path(path).string());
    table << format_table(r);
}

inline Report read_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad report " + path.string() + ": " + e.what());
    }
}

} // namespace toxspan

#endif // TOXSPAN_CROSSVAL_HPP
