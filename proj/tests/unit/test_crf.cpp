#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "crf_fixtures.hpp"
#include "oracles.hpp"
#include "toxspan/crf.hpp"
#include "toxspan/crf_io.hpp"

using namespace toxspan;
using namespace toxspan::crf;

namespace {

const std::vector<std::string> kClean{"you", "are", "the", "plan", "vote", "city", "good", "people", "and", "read"};
const std::vector<std::string> kHate{"idiot", "moron", "scum"};

/// Posts where a token is TOXIC exactly when it is on the hate list.
std::vector<AnnotatedPost> separable_posts(std::mt19937_64& rng, std::size_t target_tokens) {
    std::vector<AnnotatedPost> posts;
    std::size_t tokens = 0;
    while (tokens < target_tokens) {
        AnnotatedPost p;
        p.id = std::to_string(posts.size());
        std::vector<CharIndex> gold;
        const std::size_t n = 3 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i) {
            const bool toxic = rng() % 4 == 0;
            const auto& w = toxic ? kHate[rng() % kHate.size()] : kClean[rng() % kClean.size()];
            if (!p.text.empty()) p.text.push_back(' ');
            if (toxic) {
                for (std::size_t c = 0; c < w.size(); ++c) gold.push_back(static_cast<CharIndex>(p.text.size() + c));
            }
            p.text += w;
        }
        p.gold = CharIndexSet::from_unsorted(gold);
        tokens += n;
        posts.push_back(std::move(p));
    }
    return posts;
}

} // namespace

TEST(Features, HateBoundaryAndDeterminism) {
    const Lexicon hate{"idiot"};
    const FeatureConfig cfg{16, 2};
    const FeatureResources res{&hate, nullptr};
    const auto tokens = tokenize("you idiot, you idiot");
    const auto f = featurize(tokens, cfg, res);
    const auto has = [&](std::size_t i, std::string_view name) {
        return std::binary_search(f[i].sparse.begin(), f[i].sparse.end(), feature_id(name, cfg.hash_space()));
    };
    EXPECT_TRUE(has(1, "hate"));
    EXPECT_FALSE(has(0, "hate"));
    EXPECT_TRUE(has(0, "bos"));
    EXPECT_FALSE(has(1, "bos"));
    EXPECT_TRUE(has(4, "eos"));
    EXPECT_TRUE(has(2, "sym"));
    // "you idiot" appears twice but with different neighbours
    EXPECT_NE(f[0], f[3]);
    EXPECT_EQ(featurize(tokens, cfg, res), f);
    for (const auto& x : f) {
        EXPECT_TRUE(std::is_sorted(x.sparse.begin(), x.sparse.end()));
        for (auto id : x.sparse) EXPECT_LT(id, cfg.hash_space());
    }
}

TEST(Features, IdenticalContextsGiveIdenticalVectors) {
    const FeatureConfig cfg{16, 1};
    const auto a = featurize(tokenize("x a b c y"), cfg);
    const auto b = featurize(tokenize("z a b c w"), cfg);
    EXPECT_EQ(a[2], b[2]);
}

TEST(Features, EmbeddingCountMustMatch) {
    const FeatureConfig cfg{12, 1};
    const auto tokens = tokenize("a b");
    const std::vector<std::vector<double>> emb{{1.0, 2.0}};
    EXPECT_THROW(featurize(tokens, cfg, {}, emb), ValidationError);
}

TEST(Emissions, ZeroWeightsGiveZeroScores) {
    const ModelShape shape{8, 2, 1, 3};
    const CrfParams params(shape);
    const std::vector<FeatureVector> x{{{1, 5}, {0.3, -0.2}}, {{0}, {1.0, 1.0}}};
    for (double v : emission_scores(params, x).scores) EXPECT_EQ(v, 0.0);
}

TEST(Emissions, OneHotSelectsColumnOfE) {
    const ModelShape shape{6, 0, 0, 0};
    CrfParams params(shape);
    for (std::size_t y = 0; y < L; ++y)
        for (std::size_t j = 0; j < 6; ++j) params.values[params.layout.emission() + y * 6 + j] = double(10 * y + j);
    const std::vector<FeatureVector> x{{{4}, {}}};
    const auto psi = emission_scores(params, x);
    EXPECT_EQ(psi(0, 0), 4.0);
    EXPECT_EQ(psi(0, 1), 14.0);
    EXPECT_EQ(psi(0, 2), 24.0);
}

TEST(Emissions, MatchNaiveMatrixProduct) {
    std::mt19937_64 rng(1);
    for (std::size_t layers = 0; layers <= 2; ++layers) {
        for (int trial = 0; trial < 10; ++trial) {
            const auto inst = fixtures::random_instance(rng, 7, 3, layers, 4, 5);
            const auto psi = emission_scores(inst.params, inst.seq.features);
            const auto c = oracle::chain_from(fixtures::to_net(inst.shape), inst.params.values, fixtures::oracle_inputs(inst));
            for (std::size_t t = 0; t < 5; ++t)
                for (std::size_t y = 0; y < L; ++y) EXPECT_NEAR(psi(t, y), c.psi[t][y], 1e-12);
        }
    }
}

TEST(Emissions, DimensionMismatchThrows) {
    const CrfParams params(ModelShape{4, 2, 0, 0});
    EXPECT_THROW(emission_scores(params, std::vector<FeatureVector>{{{1}, {0.0}}}), ValidationError);
    EXPECT_THROW(emission_scores(params, std::vector<FeatureVector>{{{4}, {0.0, 0.0}}}), ValidationError);
}

TEST(Layout, ParameterCountMatchesDocumentedOrder) {
    for (std::size_t layers = 0; layers <= 2; ++layers) {
        const ModelShape shape{9, 4, layers, layers ? 5u : 0u};
        EXPECT_EQ(Layout(shape).size(), oracle::parameter_count(fixtures::to_net(shape)));
    }
    EXPECT_THROW(Layout(ModelShape{4, 0, 3, 2}), ValidationError);
    EXPECT_THROW(Layout(ModelShape{4, 0, 1, 0}), ValidationError);
}

TEST(LogPartition, UniformScores) {
    const ChainParams zero;
    EXPECT_NEAR(log_partition(Emissions{1, std::vector<double>(3, 0.0)}, zero), std::log(3.0), 1e-15);
    EXPECT_NEAR(log_partition(Emissions{2, std::vector<double>(6, 0.0)}, zero), std::log(9.0), 1e-15);
}

TEST(LogPartition, MatchesEnumeration) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + trial % 6;
        const auto psi = fixtures::random_emissions(rng, n);
        const auto chain = fixtures::random_chain(rng);
        EXPECT_NEAR(log_partition(psi, chain), oracle::brute_log_partition(fixtures::to_oracle(psi, chain)), 1e-8);
    }
}

TEST(LogPartition, StableForLargeScores) {
    std::mt19937_64 rng(3);
    const auto psi = fixtures::random_emissions(rng, 50, 500.0);
    const auto chain = fixtures::random_chain(rng, 500.0);
    EXPECT_TRUE(std::isfinite(log_partition(psi, chain)));
}

TEST(ForwardBackward, MarginalsMatchEnumerationAndSumToOne) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + trial % 5;
        const auto psi = fixtures::random_emissions(rng, n);
        const auto chain = fixtures::random_chain(rng);
        const auto m = forward_backward(psi, chain);
        const auto brute = oracle::brute_marginals(fixtures::to_oracle(psi, chain));
        for (std::size_t t = 0; t < n; ++t) {
            double sum = 0.0;
            for (std::size_t y = 0; y < L; ++y) {
                sum += m.unary[t * L + y];
                EXPECT_NEAR(m.unary[t * L + y], brute[t][y], 1e-10);
            }
            EXPECT_NEAR(sum, 1.0, 1e-10);
        }
        for (std::size_t t = 1; t < n; ++t) {
            double sum = 0.0;
            for (std::size_t k = 0; k < L * L; ++k) sum += m.pairwise[(t - 1) * L * L + k];
            EXPECT_NEAR(sum, 1.0, 1e-10);
        }
    }
}

TEST(PathScore, BoundedByLogPartition) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + trial % 4;
        const auto psi = fixtures::random_emissions(rng, n);
        const auto chain = fixtures::random_chain(rng);
        const double log_z = log_partition(psi, chain);
        oracle::enumerate_paths(n, L, [&](const std::vector<std::size_t>& y) {
            std::vector<Label> labels;
            for (auto v : y) labels.push_back(static_cast<Label>(v));
            EXPECT_LE(path_score(psi, chain, labels), log_z + 1e-12);
        });
    }
}

TEST(Viterbi, Examples) {
    Emissions psi{1, {2.0, 1.0, 0.0}};
    EXPECT_EQ(viterbi(psi, ChainParams{}), std::vector<Label>{Label::toxic});
    Emissions favour{3, {}};
    for (int t = 0; t < 3; ++t) favour.scores.insert(favour.scores.end(), {0.0, 5.0, 0.0});
    EXPECT_EQ(viterbi(favour, ChainParams{}), std::vector<Label>(3, Label::nontoxic));
    // all-equal scores: lowest label index everywhere
    EXPECT_EQ(viterbi(Emissions{2, std::vector<double>(6, 0.0)}, ChainParams{}), std::vector<Label>(2, Label::toxic));
}

TEST(Viterbi, MatchesExhaustiveArgmax) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 6;
        const auto psi = fixtures::random_emissions(rng, n);
        const auto chain = fixtures::random_chain(rng);
        const auto path = viterbi(psi, chain);
        EXPECT_NEAR(path_score(psi, chain, path), oracle::brute_best_score(fixtures::to_oracle(psi, chain)), 1e-12);
    }
}

TEST(Likelihood, UniformModelLossIsLogThree) {
    const ModelShape shape{4, 0, 0, 0};
    const CrfParams params(shape);
    const Sequence seq{"s", {{{1}, {}}}, {Label::toxic}};
    const auto r = neg_log_likelihood_and_grad(params, std::vector<Sequence>{seq}, 0.0);
    EXPECT_NEAR(r.loss, std::log(3.0), 1e-15);
}

TEST(Likelihood, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t layers = trial % 3;
        const auto inst = fixtures::random_instance(rng, 5, 2, layers, 4, 4);
        EXPECT_LT(fixtures::max_gradient_error(inst), 1e-4) << "trial " << trial << ", layers " << layers;
    }
}

TEST(Likelihood, L2TermAndGradient) {
    std::mt19937_64 rng(8);
    const auto inst = fixtures::random_instance(rng, 4, 0, 0, 0, 3);
    const std::vector<Sequence> batch{inst.seq};
    const auto plain = neg_log_likelihood_and_grad(inst.params, batch, 0.0);
    const auto reg = neg_log_likelihood_and_grad(inst.params, batch, 0.1);
    EXPECT_NEAR(reg.loss - plain.loss, 0.1 * squared_norm(inst.params.values), 1e-12);
    for (std::size_t i = 0; i < reg.grad.size(); ++i) {
        EXPECT_NEAR(reg.grad[i] - plain.grad[i], 0.2 * inst.params.values[i], 1e-12);
    }
}

TEST(Likelihood, DuplicatedSequenceDoublesGradient) {
    std::mt19937_64 rng(9);
    const auto inst = fixtures::random_instance(rng, 5, 1, 1, 3, 4);
    const auto once = neg_log_likelihood_and_grad(inst.params, std::vector<Sequence>{inst.seq}, 0.0);
    const auto twice = neg_log_likelihood_and_grad(inst.params, std::vector<Sequence>{inst.seq, inst.seq}, 0.0);
    EXPECT_NEAR(twice.loss, 2.0 * once.loss, 1e-12);
    for (std::size_t i = 0; i < once.grad.size(); ++i) EXPECT_NEAR(twice.grad[i], 2.0 * once.grad[i], 1e-12);
}

TEST(Likelihood, NonFiniteLossNamesSequence) {
    const ModelShape shape{2, 1, 0, 0};
    CrfParams params(shape);
    const Sequence seq{"post-17", {{{0}, {std::numeric_limits<double>::infinity()}}}, {Label::toxic}};
    params.values[params.layout.emission() + 2] = 1.0;
    try {
        neg_log_likelihood_and_grad(params, std::vector<Sequence>{seq}, 0.0);
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("post-17"), std::string::npos);
    }
}

TEST(Training, ConfigValidation) {
    TrainConfig c;
    c.epochs = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = {};
    c.learning_rate = 0.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = {};
    c.l2 = -1.0;
    EXPECT_THROW(c.validate(), ValidationError);
    const auto preset = TrainConfig::embedding_preset();
    EXPECT_EQ(preset.epochs, 2u);
    EXPECT_DOUBLE_EQ(preset.learning_rate, 3e-5);
}

TEST(Training, PadBatchPadsToLongest) {
    const FeatureVector pad{{7}, {}};
    const std::vector<Sequence> batch{{"a", {{{1}, {}}}, {Label::toxic}},
                                      {"b", {{{1}, {}}, {{2}, {}}, {{3}, {}}}, {Label::toxic, Label::nontoxic, Label::toxic}}};
    const auto padded = pad_batch(batch, pad);
    EXPECT_EQ(padded[0].features.size(), 3u);
    EXPECT_EQ(padded[0].labels, (std::vector<Label>{Label::toxic, Label::pad, Label::pad}));
    EXPECT_EQ(padded[0].features[2], pad);
    EXPECT_EQ(padded[1].labels, batch[1].labels);
}

TEST(Training, ZeroStepsLeavesInitialization) {
    std::mt19937_64 rng(10);
    const auto inst = fixtures::random_instance(rng, 16, 0, 0, 0, 4);
    TrainConfig cfg;
    cfg.seed = 5;
    cfg.max_steps = 0;
    const auto r = train(std::vector<Sequence>{inst.seq}, inst.shape, cfg, FeatureVector{{0}, {}});
    EXPECT_EQ(r.steps, 0u);
    EXPECT_EQ(r.params.values, initialize(inst.shape, 5).values);
}

TEST(Training, InitializationRanges) {
    const ModelShape shape{32, 3, 2, 4};
    const auto p = initialize(shape, 1);
    const Layout& lay = p.layout;
    for (std::size_t i = 0; i < lay.emission(); ++i) {
        const bool weight = (i >= lay.layer_weight(0) && i < lay.layer_bias(0)) ||
                            (i >= lay.layer_weight(1) && i < lay.layer_bias(1));
        if (!weight) EXPECT_EQ(p.values[i], 0.0) << i;
    }
    for (double v : p.values) EXPECT_LE(std::abs(v), 0.1);
}

TEST(Training, SameSeedBitIdenticalTrace) {
    std::mt19937_64 rng(11);
    const auto posts = separable_posts(rng, 400);
    const Lexicon hate{"idiot", "moron", "scum"};
    const FeatureConfig fc{12, 1};
    const FeatureResources res{&hate, nullptr};
    std::vector<Sequence> data;
    for (const auto& p : posts) data.push_back(make_sequence(p, fc, res));
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.seed = 77;
    const ModelShape shape{fc.hash_space(), 0, 0, 0};
    const auto a = train(data, shape, cfg, pad_features(fc, 0));
    const auto b = train(data, shape, cfg, pad_features(fc, 0));
    EXPECT_EQ(a.epoch_loss, b.epoch_loss);
    EXPECT_EQ(a.params.values, b.params.values);
    cfg.seed = 78;
    EXPECT_NE(train(data, shape, cfg, pad_features(fc, 0)).epoch_loss, a.epoch_loss);
}

TEST(Training, FullBatchLossNonIncreasing) {
    std::mt19937_64 rng(12);
    const auto posts = separable_posts(rng, 150);
    const Lexicon hate{"idiot", "moron", "scum"};
    const FeatureConfig fc{10, 1};
    const FeatureResources res{&hate, nullptr};
    std::vector<Sequence> data;
    for (const auto& p : posts) data.push_back(make_sequence(p, fc, res));
    TrainConfig cfg;
    cfg.epochs = 25;
    cfg.batch_size = data.size();
    cfg.learning_rate = 5e-3;
    cfg.seed = 1;
    const auto r = train(data, ModelShape{fc.hash_space(), 0, 0, 0}, cfg, pad_features(fc, 0));
    for (std::size_t e = 1; e < r.epoch_loss.size(); ++e) EXPECT_LE(r.epoch_loss[e], r.epoch_loss[e - 1]) << e;
}

TEST(Training, LearnsSeparableHateFeature) {
    std::mt19937_64 rng(13);
    const auto posts = separable_posts(rng, 2000);
    const Lexicon hate{"idiot", "moron", "scum"};
    const FeatureConfig fc{14, 1};
    const FeatureResources res{&hate, nullptr};
    std::vector<Sequence> data;
    for (const auto& p : posts) data.push_back(make_sequence(p, fc, res));
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.05;
    cfg.seed = 3;
    const auto r = train(data, ModelShape{fc.hash_space(), 0, 0, 0}, cfg, pad_features(fc, 0));
    const CrfModel model{r.params, fc};
    std::size_t correct = 0;
    std::size_t total = 0;
    std::vector<PredGold> pairs;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        const auto labels = decode(model.params, data[i].features);
        for (std::size_t t = 0; t < labels.size(); ++t) correct += labels[t] == data[i].labels[t];
        total += labels.size();
        pairs.emplace_back(predict_post(model, res, posts[i].text), posts[i].gold);
    }
    EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.99);
    // adjacent hate words gap-fill the space the gold leaves out
    EXPECT_GE(corpus_f1(pairs), 0.95);
}

TEST(Prediction, HandBuiltWeightsForceToxicWord) {
    const FeatureConfig fc{12, 1};
    CrfParams params(ModelShape{fc.hash_space(), 0, 0, 0});
    const auto id = feature_id("w=idiotic", fc.hash_space());
    const auto bias = feature_id("bias", fc.hash_space());
    const std::size_t in = fc.hash_space();
    params.values[params.layout.emission() + 0 * in + id] = 10.0;
    params.values[params.layout.emission() + 1 * in + bias] = 1.0;
    const CrfModel model{params, fc};
    const std::string text = "He is an idiotic man.";
    EXPECT_EQ(predict_post(model, {}, text), CharIndexSet::range(9, 16));
    EXPECT_TRUE(predict_post(model, {}, "nothing here").empty());
    EXPECT_TRUE(predict_post(model, {}, "").empty());
}

TEST(Prediction, PadDecodesAsNontoxic) {
    const FeatureConfig fc{8, 0};
    CrfParams params(ModelShape{fc.hash_space(), 0, 0, 0});
    const auto bias = feature_id("bias", fc.hash_space());
    params.values[params.layout.emission() + 2 * fc.hash_space() + bias] = 5.0;
    const auto tokens = tokenize("a b c");
    const auto labels = decode(params, featurize(tokens, fc));
    EXPECT_EQ(labels, std::vector<Label>(3, Label::nontoxic));
}

TEST(ModelIo, BinaryRoundTripIsExact) {
    std::mt19937_64 rng(14);
    const auto inst = fixtures::random_instance(rng, 1u << 6, 3, 2, 4, 2);
    const CrfModel model{inst.params, FeatureConfig{6, 2}};
    std::stringstream io;
    write_model(io, model);
    const auto back = read_model(io);
    EXPECT_EQ(back.params.shape(), model.params.shape());
    EXPECT_EQ(back.params.values, model.params.values);
    EXPECT_EQ(back.features.hash_bits, 6u);
    EXPECT_EQ(back.features.window, 2u);
}

TEST(ModelIo, HeaderIsLittleEndianAndVersioned) {
    const CrfModel model{CrfParams(ModelShape{16, 0, 0, 0}), FeatureConfig{4, 1}};
    std::stringstream io;
    write_model(io, model);
    const std::string bytes = io.str();
    EXPECT_EQ(bytes.substr(0, 8), std::string("TXSPCRF\0", 8));
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), kModelFormatVersion);
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 0x04);
    EXPECT_EQ(static_cast<unsigned char>(bytes[15]), 0x01);
}

TEST(ModelIo, CorruptFilesRejected) {
    const CrfModel model{CrfParams(ModelShape{16, 0, 0, 0}), FeatureConfig{4, 1}};
    std::stringstream io;
    write_model(io, model);
    const std::string good = io.str();

    std::istringstream truncated(good.substr(0, good.size() - 3));
    EXPECT_THROW(read_model(truncated), DataError);
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    std::istringstream m(bad_magic);
    EXPECT_THROW(read_model(m), DataError);
    std::string bad_version = good;
    bad_version[8] = 9;
    std::istringstream v(bad_version);
    EXPECT_THROW(read_model(v), DataError);
}

TEST(ModelIo, ManifestRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "toxspan_manifest_test.manifest";
    const std::map<std::string, std::string> entries{{"seed", "42"}, {"config", "a=b;c=d"}};
    write_manifest(path, entries);
    EXPECT_EQ(read_manifest(path), entries);
    std::filesystem::remove(path);
    EXPECT_EQ(manifest_path("m.bin"), std::filesystem::path("m.bin.manifest"));
}
