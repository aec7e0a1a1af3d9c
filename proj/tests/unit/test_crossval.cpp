#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "toxspan/crossval.hpp"

using namespace toxspan;

namespace {

std::vector<AnnotatedPost> posts_with_empty_fraction(std::size_t n, std::size_t empty) {
    std::vector<AnnotatedPost> posts;
    for (std::size_t i = 0; i < n; ++i) {
        posts.push_back({std::to_string(i), "some text here", i < empty ? CharIndexSet{} : CharIndexSet{0, 1, 2}});
    }
    return posts;
}

} // namespace

TEST(KFold, Sizes) {
    for (const auto& f : kfold_split(10, 5, 1)) EXPECT_EQ(f.size(), 2u);
    std::vector<std::size_t> sizes;
    for (const auto& f : kfold_split(11, 5, 1)) sizes.push_back(f.size());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2, 2, 2}));
}

TEST(KFold, PartitionAndDeterminism) {
    for (std::size_t n : {5u, 17u, 100u}) {
        for (std::size_t k : {2u, 3u, 5u}) {
            const auto folds = kfold_split(n, k, 42);
            std::multiset<std::size_t> all;
            for (const auto& f : folds) all.insert(f.begin(), f.end());
            EXPECT_EQ(all.size(), n);
            EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), n);
            EXPECT_EQ(*all.rbegin(), n - 1);
            EXPECT_EQ(kfold_split(n, k, 42), folds);
        }
    }
    EXPECT_NE(kfold_split(100, 5, 1), kfold_split(100, 5, 2));
}

TEST(KFold, Errors) {
    EXPECT_THROW(kfold_split(3, 5, 1), ValidationError);
    EXPECT_THROW(kfold_split(10, 1, 1), ValidationError);
}

TEST(CrossVal, ConstantEmptyPredictorScoresEmptyGoldFraction) {
    const auto posts = posts_with_empty_fraction(40, 10);
    const auto report = run_crossval("empty", posts, 4, 3, [](std::span<const AnnotatedPost>) -> Predictor {
        return [](const AnnotatedPost&) { return CharIndexSet{}; };
    });
    // fold means differ per fold, but the pooled post count is the whole corpus
    double weighted = 0.0;
    for (const auto& f : report.folds) weighted += f.test_f1 * static_cast<double>(f.test_posts);
    EXPECT_NEAR(weighted / 40.0, 10.0 / 40.0, 1e-12);
    EXPECT_EQ(evaluate([](const AnnotatedPost&) { return CharIndexSet{}; }, posts), 0.25);
}

TEST(CrossVal, OraclePredictorScoresOne) {
    const auto posts = posts_with_empty_fraction(23, 5);
    const auto report = run_crossval("oracle", posts, 5, 9, [](std::span<const AnnotatedPost>) -> Predictor {
        return [](const AnnotatedPost& p) { return p.gold; };
    });
    ASSERT_EQ(report.folds.size(), 5u);
    for (const auto& f : report.folds) {
        EXPECT_EQ(f.test_f1, 1.0);
        EXPECT_EQ(f.train_f1, 1.0);
        EXPECT_EQ(f.train_posts + f.test_posts, 23u);
    }
    EXPECT_EQ(report.mean_test(), 1.0);
}

TEST(CrossVal, TrainerSeesOnlyTrainingFolds) {
    const auto posts = posts_with_empty_fraction(20, 0);
    std::vector<std::size_t> seen;
    run_crossval("probe", posts, 4, 1, [&](std::span<const AnnotatedPost> train) -> Predictor {
        seen.push_back(train.size());
        return [](const AnnotatedPost&) { return CharIndexSet{}; };
    });
    EXPECT_EQ(seen, (std::vector<std::size_t>{15, 15, 15, 15}));
}

TEST(CrossVal, FailureNamesFold) {
    const auto posts = posts_with_empty_fraction(10, 0);
    int calls = 0;
    try {
        run_crossval("bad", posts, 5, 1, [&](std::span<const AnnotatedPost>) -> Predictor {
            if (++calls == 3) throw NumericalError("diverged");
            return [](const AnnotatedPost&) { return CharIndexSet{}; };
        });
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(std::string(e.what()), "fold 3: diverged");
        EXPECT_EQ(e.code(), ExitCode::numerical);
    }
}

TEST(Report, MeanEqualsPerFoldRecomputation) {
    MethodReport m{"x", {{1, 8, 2, 0.5, 0.25}, {2, 8, 2, 0.7, 0.35}, {3, 8, 2, 0.6, 0.3}}};
    EXPECT_NEAR(m.mean_train(), (0.5 + 0.7 + 0.6) / 3.0, 1e-12);
    EXPECT_NEAR(m.mean_test(), (0.25 + 0.35 + 0.3) / 3.0, 1e-12);
}

TEST(Report, JsonRoundTrip) {
    Report r;
    r.seed = 7;
    r.folds = 3;
    r.config_hash = config_hash("a=1");
    r.dataset = {{"posts", 30}, {"posts_with_spans", 20}};
    r.methods.push_back({"crf", {{1, 20, 10, 0.61234, 0.5}, {2, 20, 10, 0.7, 0.45}}});
    r.methods.push_back({"hate", {}});
    const auto back = report_from_json(nlohmann::json::parse(to_json(r).dump()));
    EXPECT_EQ(back, r);
    const auto path = std::filesystem::temp_directory_path() / "toxspan_report_test.json";
    write_report(r, path);
    EXPECT_EQ(read_report(path), r);
    EXPECT_TRUE(std::filesystem::exists(table_path(path)));
    std::filesystem::remove(path);
    std::filesystem::remove(table_path(path));
}

TEST(Report, TableHasThreeDecimals) {
    Report r;
    r.seed = 1;
    r.folds = 2;
    r.config_hash = "0000000000000000";
    r.methods.push_back({"crf", {{1, 5, 5, 0.6484, 0.6481}, {2, 5, 5, 0.5, 0.5}}});
    const auto table = format_table(r);
    EXPECT_NE(table.find("0.648"), std::string::npos);
    EXPECT_EQ(table.find("0.6484"), std::string::npos);
    EXPECT_NE(table.find("mean"), std::string::npos);
}

TEST(Report, EmptyMethodListIsHeaderOnly) {
    Report r;
    const auto table = format_table(r);
    EXPECT_NE(table.find("method"), std::string::npos);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
}

TEST(ConfigHash, StableHex) {
    EXPECT_EQ(config_hash(""), "cbf29ce484222325");
    EXPECT_EQ(config_hash("a").size(), 16u);
    EXPECT_NE(config_hash("a"), config_hash("b"));
}
