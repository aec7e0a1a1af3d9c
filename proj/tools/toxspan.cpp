// toxspan: command-line entry point for toxic span detection experiments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "toxspan/toxspan.hpp"

#ifndef TOXSPAN_DATA_DIR
#define TOXSPAN_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace toxspan;

namespace {

struct Resources {
    std::string hate_path = std::string(TOXSPAN_DATA_DIR) + "/lexicons/hate_words.txt";
    std::string sentiment_path = std::string(TOXSPAN_DATA_DIR) + "/lexicons/sentiment.tsv";
    std::string stopwords_path = std::string(TOXSPAN_DATA_DIR) + "/lexicons/stopwords.txt";

    void add_options(CLI::App* app, bool stopwords = false) {
        app->add_option("--hate-lexicon", hate_path, "Hate word list, one term per line")->capture_default_str();
        app->add_option("--sentiment-lexicon", sentiment_path, "term<TAB>polarity file")->capture_default_str();
        if (stopwords) app->add_option("--stopwords", stopwords_path, "Stop-word list")->capture_default_str();
    }
};

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed) {
    if (!seed) throw ValidationError("a seed is required: pass --seed or set TOXSPAN_SEED");
    return *seed;
}

std::optional<std::size_t> row_limit(std::size_t limit) {
    return limit == 0 ? std::nullopt : std::optional<std::size_t>(limit);
}

ToxicSpansData load_posts(const std::string& path, std::size_t limit) {
    auto data = load_toxic_spans(fs::path(path), row_limit(limit));
    std::cerr << "loaded " << data.posts.size() << " posts (" << data.posts_with_gold << " with spans) from "
              << data.rows << " rows; " << data.skipped_rows << " rows skipped, " << data.dropped_indices
              << " out-of-bounds gold indices dropped\n";
    return data;
}

std::map<std::string, CharIndexSet> gold_by_id(const std::vector<AnnotatedPost>& posts) {
    std::map<std::string, CharIndexSet> out;
    for (const auto& p : posts) out[p.id] = p.gold;
    return out;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    return out;
}

void emit(const std::string& out_path, const std::vector<Prediction>& predictions) {
    if (out_path.empty() || out_path == "-") {
        write_predictions(std::cout, predictions);
    } else {
        write_predictions(fs::path(out_path), predictions);
    }
}

struct ScoredData {
    InterchangeFile file;
    std::vector<ScoredPost> posts;
};

ScoredData load_scored(const std::string& path, const Lexicon& hate, const SentimentLexicon& sentiment,
                       std::size_t limit) {
    ScoredData d{read_interchange(fs::path(path)), {}};
    if (limit && d.file.records.size() > limit) d.file.records.resize(limit);
    for (const auto& r : d.file.records) d.posts.push_back(score_post(r, hate, sentiment));
    std::cerr << "loaded " << d.posts.size() << " scored posts (emb_dim " << d.file.header.emb_dim << ", "
              << d.file.header.truncated << " truncated)\n";
    return d;
}

std::vector<DevPost> join_gold(const std::vector<ScoredPost>& posts, const std::map<std::string, CharIndexSet>& gold) {
    std::vector<DevPost> dev;
    dev.reserve(posts.size());
    for (const auto& p : posts) {
        const auto it = gold.find(p.id);
        if (it == gold.end()) throw ValidationError("no gold annotation for interchange post '" + p.id + "'");
        dev.push_back(DevPost{p, it->second});
    }
    return dev;
}

std::vector<double> parse_list(const std::string& csv_values) {
    std::vector<double> out;
    std::stringstream ss(csv_values);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ValidationError("bad number '" + item + "'");
        }
    }
    return out;
}

// CRF sequences either from raw text (template features) or from
// interchange words (template features plus embeddings).
struct CrfData {
    std::vector<crf::Sequence> sequences;
    std::size_t dense_dim = 0;
};

std::vector<Token> interchange_tokens(const ScoredPost& post) { return word_tokens(post); }

std::vector<std::vector<double>> interchange_embeddings(const ScoredPost& post) {
    std::vector<std::vector<double>> emb;
    for (const auto& w : post.words) emb.push_back(w.emb);
    return emb;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Toxic span detection toolkit"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_config("--config", "", "INI/TOML config file; CLI flags override it");

    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "Seed for every stochastic step")->envname("TOXSPAN_SEED");
    std::size_t limit = 0;
    app.add_option("--limit", limit, "Read at most N rows from each input (0 = all)");

    // tokenize -----------------------------------------------------------
    auto* tok = app.add_subcommand("tokenize", "Print tokens with offsets, or check offset integrity of a corpus");
    std::string tok_text;
    std::string tok_input;
    tok->add_option("--text", tok_text, "Text to tokenize");
    tok->add_option("--input", tok_input, "Toxic-spans CSV; reports offset round-trip violations");

    // eval ---------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "Score a prediction file against gold spans");
    std::string eval_gold;
    std::string eval_pred;
    eval->add_option("--gold", eval_gold, "Toxic-spans CSV")->required();
    eval->add_option("--pred", eval_pred, "Prediction file (id<TAB>[indices])")->required();

    // tag-baseline -------------------------------------------------------
    auto* base = app.add_subcommand("tag-baseline", "Random, hate-list, sentiment or combined tagger");
    std::string base_method;
    std::string base_input;
    std::string base_out;
    double base_p = 0.5;
    Resources base_res;
    base->add_option("--method", base_method, "random|hate|sentiment|combined")
        ->required()
        ->check(CLI::IsMember({"random", "hate", "sentiment", "combined"}));
    base->add_option("--input", base_input, "Toxic-spans CSV")->required();
    base->add_option("--out", base_out, "Prediction file (default stdout)");
    base->add_option("--p-toxic", base_p, "Random tagger probability")->capture_default_str();
    base_res.add_options(base);

    // select-attn ---------------------------------------------------------
    auto* sel = app.add_subcommand("select-attn", "Rule-based span selection over attention scores");
    std::string sel_input;
    std::string sel_gold;
    std::string sel_out;
    std::string sel_rule = "R1";
    RuleConfig sel_cfg;
    bool sel_oracle = false;
    Resources sel_res;
    sel->add_option("--interchange", sel_input, "Encoder interchange file")->required();
    sel->add_option("--rule", sel_rule, "R1|R2|R3")->check(CLI::IsMember({"R1", "R2", "R3"}))->capture_default_str();
    sel->add_option("--percentile", sel_cfg.percentile, "Share of top-attention words kept")->capture_default_str();
    sel->add_option("--threshold", sel_cfg.threshold, "Minimum attention")->capture_default_str();
    sel->add_option("--gate", sel_cfg.gate_tau, "Sentence probability gate")->capture_default_str();
    sel->add_flag("--gate-oracle", sel_oracle, "Open the gate iff the gold span set is non-empty");
    sel->add_option("--gold", sel_gold, "Toxic-spans CSV (needed for --gate-oracle)");
    sel->add_option("--out", sel_out, "Prediction file (default stdout)");
    sel_res.add_options(sel, true);

    // gridsearch-attn -----------------------------------------------------
    auto* grid = app.add_subcommand("gridsearch-attn", "Search percentile x threshold on a dev set");
    std::string grid_input;
    std::string grid_gold;
    std::string grid_rule = "R1";
    std::string grid_thresholds = "0,1e-5,1e-4,1e-3,1e-2";
    std::string grid_percentiles = "0.10,0.25,0.50,0.75,0.90,1.0";
    std::string grid_out;
    double grid_tau = 0.5;
    bool grid_oracle = false;
    Resources grid_res;
    grid->add_option("--interchange", grid_input, "Encoder interchange file")->required();
    grid->add_option("--gold", grid_gold, "Toxic-spans CSV")->required();
    grid->add_option("--rule", grid_rule, "R1|R2|R3")->check(CLI::IsMember({"R1", "R2", "R3"}))->capture_default_str();
    grid->add_option("--thresholds", grid_thresholds, "Comma-separated thresholds")->capture_default_str();
    grid->add_option("--percentiles", grid_percentiles, "Comma-separated percentiles")->capture_default_str();
    grid->add_option("--gate", grid_tau, "Sentence probability gate")->capture_default_str();
    grid->add_flag("--gate-oracle", grid_oracle, "Open the gate iff the gold span set is non-empty");
    grid->add_option("--out", grid_out, "Write the full grid as JSON");
    grid_res.add_options(grid, true);

    // train-tree / predict-tree -------------------------------------------
    auto* ttree = app.add_subcommand("train-tree", "Train a CART span selector on attention features");
    std::string ttree_input;
    std::string ttree_gold;
    std::string ttree_out;
    TreeConfig ttree_cfg;
    double ttree_tau = 0.5;
    bool ttree_oracle = false;
    Resources ttree_res;
    ttree->add_option("--interchange", ttree_input, "Encoder interchange file")->required();
    ttree->add_option("--gold", ttree_gold, "Toxic-spans CSV")->required();
    ttree->add_option("--out", ttree_out, "Tree file (JSON)")->required();
    ttree->add_option("--max-depth", ttree_cfg.max_depth)->capture_default_str();
    ttree->add_option("--min-leaf", ttree_cfg.min_leaf)->capture_default_str();
    ttree->add_option("--gate", ttree_tau, "Only posts passing the gate contribute samples")->capture_default_str();
    ttree->add_flag("--gate-oracle", ttree_oracle, "Use posts with non-empty gold instead of the gate");
    ttree_res.add_options(ttree);

    auto* ptree = app.add_subcommand("predict-tree", "Apply a trained tree to an interchange file");
    std::string ptree_tree;
    std::string ptree_input;
    std::string ptree_gold;
    std::string ptree_out;
    double ptree_tau = 0.5;
    bool ptree_oracle = false;
    Resources ptree_res;
    ptree->add_option("--tree", ptree_tree, "Tree file")->required();
    ptree->add_option("--interchange", ptree_input, "Encoder interchange file")->required();
    ptree->add_option("--gate", ptree_tau)->capture_default_str();
    ptree->add_flag("--gate-oracle", ptree_oracle);
    ptree->add_option("--gold", ptree_gold, "Toxic-spans CSV (needed for --gate-oracle)");
    ptree->add_option("--out", ptree_out, "Prediction file (default stdout)");
    ptree_res.add_options(ptree);

    // CRF -----------------------------------------------------------------
    crf::TrainConfig crf_cfg;
    crf::FeatureConfig crf_feat;
    crf::ModelShape crf_shape;
    bool crf_embedding_preset = false;
    Resources crf_res;
    const auto add_crf_training = [&](CLI::App* sub) {
        sub->add_option("--epochs", crf_cfg.epochs)->capture_default_str();
        sub->add_option("--lr", crf_cfg.learning_rate)->capture_default_str();
        sub->add_option("--l2", crf_cfg.l2)->capture_default_str();
        sub->add_option("--batch", crf_cfg.batch_size)->capture_default_str();
        sub->add_option("--clip", crf_cfg.clip)->capture_default_str();
        sub->add_flag("--mask-padding", crf_cfg.mask_padding, "Do not add PAD positions to batches");
        sub->add_option("--hash-bits", crf_feat.hash_bits)->capture_default_str()->check(CLI::Range(4, 28));
        sub->add_option("--window", crf_feat.window)->capture_default_str();
        sub->add_option("--hidden-layers", crf_shape.hidden_layers)->capture_default_str()->check(CLI::Range(0, 2));
        sub->add_option("--hidden-width", crf_shape.hidden_width)->capture_default_str();
        sub->add_flag("--embedding-preset", crf_embedding_preset, "2 epochs at lr 3e-5");
        crf_res.add_options(sub);
    };

    auto* tcrf = app.add_subcommand("train-crf", "Train a linear-chain CRF tagger");
    std::string tcrf_input;
    std::string tcrf_model;
    std::string tcrf_interchange;
    tcrf->add_option("--input", tcrf_input, "Toxic-spans CSV")->required();
    tcrf->add_option("--model", tcrf_model, "Output model file")->required();
    tcrf->add_option("--interchange", tcrf_interchange, "Use interchange words and embeddings as tokens");
    add_crf_training(tcrf);

    auto* pcrf = app.add_subcommand("predict-crf", "Tag posts with a trained CRF");
    std::string pcrf_model;
    std::string pcrf_input;
    std::string pcrf_interchange;
    std::string pcrf_out;
    Resources pcrf_res;
    pcrf->add_option("--model", pcrf_model, "Model file")->required();
    pcrf->add_option("--input", pcrf_input, "Toxic-spans CSV (text column is used)");
    pcrf->add_option("--interchange", pcrf_interchange, "Interchange file for embedding-backed models");
    pcrf->add_option("--out", pcrf_out, "Prediction file (default stdout)");
    pcrf_res.add_options(pcrf);

    auto* cvcrf = app.add_subcommand("crossval-crf", "k-fold cross-validation of the CRF tagger");
    std::string cv_input;
    std::string cv_report;
    std::size_t cv_folds = 5;
    bool cv_baselines = false;
    cvcrf->add_option("--input", cv_input, "Toxic-spans CSV")->required();
    cvcrf->add_option("--folds", cv_folds)->capture_default_str();
    cvcrf->add_option("--report", cv_report, "Report path (JSON; table written alongside as .txt)")->required();
    cvcrf->add_flag("--with-baselines", cv_baselines, "Also score the lexicon baselines on the same folds");
    add_crf_training(cvcrf);

    // ensemble / report / balance -------------------------------------------
    auto* ens = app.add_subcommand("ensemble", "Combine prediction files by index vote or intersection");
    std::string ens_mode = "vote";
    std::vector<std::string> ens_inputs;
    std::string ens_out;
    ens->add_option("--mode", ens_mode, "vote|intersect")->check(CLI::IsMember({"vote", "intersect"}))->capture_default_str();
    ens->add_option("predictions", ens_inputs, "Prediction files")->required()->expected(2, -1);
    ens->add_option("--out", ens_out, "Prediction file (default stdout)");

    auto* rep = app.add_subcommand("report", "Print a cross-validation report as a table");
    std::string rep_input;
    rep->add_option("report", rep_input, "Report JSON")->required();

    auto* bal = app.add_subcommand("balance-sentences", "Balanced hateful/non-hateful sample of a sentence dataset");
    std::string bal_input;
    std::string bal_out;
    std::size_t bal_n = 0;
    double bal_threshold = 0.5;
    SentenceColumns bal_cols;
    bal->add_option("--input", bal_input, "Sentence-level CSV")->required();
    bal->add_option("--out", bal_out, "Output CSV")->required();
    bal->add_option("-n,--size", bal_n, "Total sample size (even)")->required();
    bal->add_option("--threshold", bal_threshold, "Hateful iff score > threshold")->capture_default_str();
    bal->add_option("--id-column", bal_cols.id)->capture_default_str();
    bal->add_option("--text-column", bal_cols.text)->capture_default_str();
    bal->add_option("--score-column", bal_cols.score)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::validation);
    }

    try {
        if (*tok) {
            if (!tok_text.empty()) {
                for (const auto& t : tokenize(tok_text)) std::cout << t.surface << '\t' << t.start << '\t' << t.end << '\n';
            }
            if (!tok_input.empty()) {
                const auto data = load_posts(tok_input, limit);
                std::size_t tokens = 0;
                std::size_t violations = 0;
                for (const auto& p : data.posts) {
                    const auto text = unicode::decode(p.text);
                    for (const auto& t : tokenize(text)) {
                        ++tokens;
                        if (t.end > text.size() || unicode::encode(std::u32string_view(text).substr(t.start, t.end - t.start)) != t.surface) {
                            ++violations;
                        }
                    }
                    if (!p.gold.fits(text.size())) ++violations;
                }
                std::cout << tokens << " tokens, " << violations << " offset violations\n";
                if (violations) return static_cast<int>(ExitCode::data);
            }
        } else if (*eval) {
            const auto data = load_posts(eval_gold, limit);
            const auto preds = read_predictions(fs::path(eval_pred));
            std::map<std::string, const CharIndexSet*> by_id;
            for (const auto& p : preds) by_id[p.id] = &p.spans;
            std::vector<PredGold> pairs;
            std::size_t out_of_bounds = 0;
            for (const auto& post : data.posts) {
                const auto it = by_id.find(post.id);
                if (it == by_id.end()) throw ValidationError("no prediction for post '" + post.id + "'");
                if (!it->second->fits(unicode::length(post.text))) ++out_of_bounds;
                pairs.emplace_back(*it->second, post.gold);
            }
            std::cout << "posts " << pairs.size() << "\nout_of_bounds " << out_of_bounds << "\nf1 "
                      << std::fixed << std::setprecision(6) << corpus_f1(pairs) << '\n';
        } else if (*base) {
            const auto data = load_posts(base_input, limit);
            const auto method = parse_baseline_method(base_method);
            TaggerConfig cfg;
            cfg.p_toxic = base_p;
            if (method == BaselineMethod::random) cfg.seed = require_seed(seed);
            const Lexicon hate = method == BaselineMethod::hate || method == BaselineMethod::combined
                                     ? load_lexicon(fs::path(base_res.hate_path))
                                     : Lexicon{};
            const SentimentLexicon sentiment = method == BaselineMethod::sentiment || method == BaselineMethod::combined
                                                   ? load_sentiment_lexicon(fs::path(base_res.sentiment_path))
                                                   : SentimentLexicon{};
            const auto sets = run_baseline(data.posts, method, cfg, hate, sentiment);
            std::vector<Prediction> preds;
            std::vector<PredGold> pairs;
            for (std::size_t i = 0; i < sets.size(); ++i) {
                preds.push_back(Prediction{data.posts[i].id, sets[i]});
                pairs.emplace_back(sets[i], data.posts[i].gold);
            }
            emit(base_out, preds);
            if (!pairs.empty()) std::cerr << "corpus F1 " << std::fixed << std::setprecision(3) << corpus_f1(pairs) << '\n';
        } else if (*sel) {
            const auto hate = load_lexicon(fs::path(sel_res.hate_path));
            const auto sentiment = load_sentiment_lexicon(fs::path(sel_res.sentiment_path));
            const auto stop = load_lexicon(fs::path(sel_res.stopwords_path));
            sel_cfg.rule = parse_rule(sel_rule);
            const auto scored = load_scored(sel_input, hate, sentiment, limit);
            std::map<std::string, CharIndexSet> gold;
            if (!sel_gold.empty()) gold = gold_by_id(load_posts(sel_gold, 0).posts);
            if (sel_oracle && sel_gold.empty()) throw ValidationError("--gate-oracle needs --gold");
            std::vector<Prediction> preds;
            std::vector<PredGold> pairs;
            for (const auto& p : scored.posts) {
                std::optional<bool> open;
                if (sel_oracle) {
                    const auto it = gold.find(p.id);
                    if (it == gold.end()) throw ValidationError("no gold annotation for '" + p.id + "'");
                    open = !it->second.empty();
                }
                preds.push_back(Prediction{p.id, select_spans(p, sel_cfg, stop, open)});
                if (const auto it = gold.find(p.id); it != gold.end()) pairs.emplace_back(preds.back().spans, it->second);
            }
            emit(sel_out, preds);
            if (!pairs.empty()) std::cerr << "corpus F1 " << std::fixed << std::setprecision(3) << corpus_f1(pairs) << '\n';
        } else if (*grid) {
            const auto hate = load_lexicon(fs::path(grid_res.hate_path));
            const auto sentiment = load_sentiment_lexicon(fs::path(grid_res.sentiment_path));
            const auto stop = load_lexicon(fs::path(grid_res.stopwords_path));
            const auto scored = load_scored(grid_input, hate, sentiment, limit);
            const auto dev = join_gold(scored.posts, gold_by_id(load_posts(grid_gold, 0).posts));
            RuleConfig cfg;
            cfg.rule = parse_rule(grid_rule);
            cfg.gate_tau = grid_tau;
            const auto result =
                grid_search(dev, parse_list(grid_thresholds), parse_list(grid_percentiles), cfg, stop, grid_oracle);
            std::cout << std::left << std::setw(12) << "percentile" << std::setw(12) << "threshold" << "F1\n";
            for (const auto& c : result.cells) {
                std::cout << std::setw(12) << c.percentile << std::setw(12) << c.threshold << std::fixed
                          << std::setprecision(3) << c.f1 << std::defaultfloat << '\n';
            }
            std::cout << "best percentile " << result.percentile << " threshold " << result.threshold << " F1 "
                      << std::fixed << std::setprecision(3) << result.f1 << '\n';
            if (!grid_out.empty()) {
                nlohmann::json j;
                j["rule"] = grid_rule;
                j["best"] = {{"percentile", result.percentile}, {"threshold", result.threshold}, {"f1", result.f1}};
                for (const auto& c : result.cells) {
                    j["cells"].push_back({{"percentile", c.percentile}, {"threshold", c.threshold}, {"f1", c.f1}});
                }
                open_output(grid_out) << j.dump(2) << '\n';
            }
        } else if (*ttree) {
            const auto hate = load_lexicon(fs::path(ttree_res.hate_path));
            const auto sentiment = load_sentiment_lexicon(fs::path(ttree_res.sentiment_path));
            const auto scored = load_scored(ttree_input, hate, sentiment, limit);
            auto dev = join_gold(scored.posts, gold_by_id(load_posts(ttree_gold, 0).posts));
            std::erase_if(dev, [&](const DevPost& d) {
                return ttree_oracle ? d.gold.empty() : !gate(d.post, ttree_tau);
            });
            const auto samples = tree_samples(dev);
            const auto tree = train_decision_tree(word_feature_schema(), samples, ttree_cfg);
            std::size_t correct = 0;
            for (const auto& s : samples) correct += tree.predict(s.features) == s.label;
            open_output(ttree_out) << tree.to_json().dump(2) << '\n';
            std::cerr << "tree: " << samples.size() << " samples, depth " << tree.depth() << ", "
                      << tree.leaf_count() << " leaves, training accuracy " << std::fixed << std::setprecision(4)
                      << (samples.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(samples.size()))
                      << '\n';
        } else if (*ptree) {
            const auto hate = load_lexicon(fs::path(ptree_res.hate_path));
            const auto sentiment = load_sentiment_lexicon(fs::path(ptree_res.sentiment_path));
            std::ifstream tin(ptree_tree, std::ios::binary);
            if (!tin) throw DataError("cannot open " + ptree_tree);
            DecisionTree tree;
            try {
                tree = DecisionTree::from_json(nlohmann::json::parse(tin));
            } catch (const nlohmann::json::exception& e) {
                throw DataError("bad tree file: " + std::string(e.what()));
            }
            const auto scored = load_scored(ptree_input, hate, sentiment, limit);
            std::map<std::string, CharIndexSet> gold;
            if (!ptree_gold.empty()) gold = gold_by_id(load_posts(ptree_gold, 0).posts);
            if (ptree_oracle && ptree_gold.empty()) throw ValidationError("--gate-oracle needs --gold");
            std::vector<Prediction> preds;
            for (const auto& p : scored.posts) {
                std::optional<bool> open;
                if (ptree_oracle) open = !gold.at(p.id).empty();
                preds.push_back(Prediction{p.id, predict_tree_post(tree, p, ptree_tau, open)});
            }
            emit(ptree_out, preds);
        } else if (*tcrf || *cvcrf) {
            if (crf_embedding_preset) {
                const auto keep = crf_cfg;
                crf_cfg = crf::TrainConfig::embedding_preset();
                crf_cfg.l2 = keep.l2;
                crf_cfg.batch_size = keep.batch_size;
                crf_cfg.clip = keep.clip;
                crf_cfg.mask_padding = keep.mask_padding;
            }
            crf_cfg.seed = require_seed(seed);
            const auto hate = load_lexicon(fs::path(crf_res.hate_path));
            const auto sentiment = load_sentiment_lexicon(fs::path(crf_res.sentiment_path));
            const crf::FeatureResources resources{&hate, &sentiment};
            crf_shape.sparse_dim = crf_feat.hash_space();
            const auto data = load_posts(*tcrf ? tcrf_input : cv_input, limit);

            std::ostringstream canon;
            canon << "epochs=" << crf_cfg.epochs << ";lr=" << crf_cfg.learning_rate << ";l2=" << crf_cfg.l2
                  << ";batch=" << crf_cfg.batch_size << ";clip=" << crf_cfg.clip << ";mask=" << crf_cfg.mask_padding
                  << ";hash_bits=" << crf_feat.hash_bits << ";window=" << crf_feat.window
                  << ";layers=" << crf_shape.hidden_layers << ";width=" << crf_shape.hidden_width
                  << ";seed=" << crf_cfg.seed << ";hate=" << crf_res.hate_path << ";sentiment=" << crf_res.sentiment_path;

            if (*tcrf) {
                std::vector<crf::Sequence> sequences;
                if (!tcrf_interchange.empty()) {
                    const auto scored = load_scored(tcrf_interchange, hate, sentiment, limit);
                    crf_shape.dense_dim = scored.file.header.emb_dim;
                    const auto gold = gold_by_id(data.posts);
                    for (const auto& p : scored.posts) {
                        const auto it = gold.find(p.id);
                        if (it == gold.end()) throw ValidationError("no gold annotation for '" + p.id + "'");
                        const auto tokens = interchange_tokens(p);
                        if (tokens.empty()) continue;
                        const auto emb = crf_shape.dense_dim ? interchange_embeddings(p) : std::vector<std::vector<double>>{};
                        sequences.push_back(crf::Sequence{p.id, crf::featurize(tokens, crf_feat, resources, emb),
                                                          project_gold_to_tokens(it->second, tokens)});
                    }
                } else {
                    for (const auto& p : data.posts) {
                        auto s = crf::make_sequence(p, crf_feat, resources);
                        if (!s.features.empty()) sequences.push_back(std::move(s));
                    }
                }
                const auto pad = crf::pad_features(crf_feat, crf_shape.dense_dim);
                auto result = crf::train(sequences, crf_shape, crf_cfg, pad);
                for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
                    std::cerr << "epoch " << e + 1 << " loss " << result.epoch_loss[e] << '\n';
                }
                const crf::CrfModel model{std::move(result.params), crf_feat};
                crf::save_model(fs::path(tcrf_model), model);
                std::map<std::string, std::string> manifest{
                    {"config_hash", config_hash(canon.str())},
                    {"config", canon.str()},
                    {"seed", std::to_string(crf_cfg.seed)},
                    {"sequences", std::to_string(sequences.size())},
                    {"steps", std::to_string(result.steps)},
                    {"dense_dim", std::to_string(crf_shape.dense_dim)},
                    {"input", tcrf_input},
                    {"interchange", tcrf_interchange},
                };
                std::ostringstream trace;
                for (double l : result.epoch_loss) trace << (trace.tellp() > 0 ? "," : "") << l;
                manifest["epoch_loss"] = trace.str();
                crf::write_manifest(crf::manifest_path(fs::path(tcrf_model)), manifest);
            } else {
                const auto pad = crf::pad_features(crf_feat, 0);
                Report report;
                report.seed = crf_cfg.seed;
                report.folds = cv_folds;
                report.config_hash = config_hash(canon.str());
                report.dataset = {{"rows", data.rows},
                                  {"posts", data.posts.size()},
                                  {"posts_with_spans", data.posts_with_gold},
                                  {"skipped_rows", data.skipped_rows}};
                const crf::TrainConfig cfg = crf_cfg;
                const crf::FeatureConfig feat = crf_feat;
                const crf::ModelShape shape = crf_shape;
                report.methods.push_back(run_crossval(
                    "crf", data.posts, cv_folds, crf_cfg.seed, [&](std::span<const AnnotatedPost> train) -> Predictor {
                        std::vector<crf::Sequence> seqs;
                        for (const auto& p : train) {
                            auto s = crf::make_sequence(p, feat, resources);
                            if (!s.features.empty()) seqs.push_back(std::move(s));
                        }
                        auto model = std::make_shared<crf::CrfModel>(
                            crf::CrfModel{crf::train(seqs, shape, cfg, pad).params, feat});
                        return [model, resources](const AnnotatedPost& p) {
                            return crf::predict_post(*model, resources, p.text);
                        };
                    }));
                if (cv_baselines) {
                    for (const auto method : {BaselineMethod::hate, BaselineMethod::sentiment, BaselineMethod::combined}) {
                        const char* name = method == BaselineMethod::hate        ? "hate-lexicon"
                                           : method == BaselineMethod::sentiment ? "sentiment"
                                                                                 : "combined";
                        report.methods.push_back(run_crossval(
                            name, data.posts, cv_folds, crf_cfg.seed, [&, method](std::span<const AnnotatedPost>) -> Predictor {
                                return [&, method](const AnnotatedPost& p) {
                                    return run_baseline(std::span<const AnnotatedPost>(&p, 1), method, TaggerConfig{},
                                                        hate, sentiment)
                                        .front();
                                };
                            }));
                    }
                }
                write_report(report, fs::path(cv_report));
                std::cout << format_table(report);
            }
        } else if (*pcrf) {
            const auto model = crf::load_model(fs::path(pcrf_model));
            const auto hate = load_lexicon(fs::path(pcrf_res.hate_path));
            const auto sentiment = load_sentiment_lexicon(fs::path(pcrf_res.sentiment_path));
            const crf::FeatureResources resources{&hate, &sentiment};
            std::vector<Prediction> preds;
            if (!pcrf_interchange.empty()) {
                const auto scored = load_scored(pcrf_interchange, hate, sentiment, limit);
                for (const auto& p : scored.posts) {
                    const auto tokens = interchange_tokens(p);
                    CharIndexSet spans;
                    if (!tokens.empty()) {
                        const auto emb = model.params.shape().dense_dim ? interchange_embeddings(p)
                                                                        : std::vector<std::vector<double>>{};
                        const auto labels = crf::decode(model.params, crf::featurize(tokens, model.features, resources, emb));
                        spans = token_labels_to_index_set(tokens, labels);
                    }
                    preds.push_back(Prediction{p.id, std::move(spans)});
                }
            } else if (!pcrf_input.empty()) {
                const auto data = load_posts(pcrf_input, limit);
                for (const auto& p : data.posts) preds.push_back(Prediction{p.id, crf::predict_post(model, resources, p.text)});
            } else {
                throw ValidationError("predict-crf needs --input or --interchange");
            }
            emit(pcrf_out, preds);
        } else if (*ens) {
            std::vector<std::vector<Prediction>> models;
            for (const auto& path : ens_inputs) models.push_back(read_predictions(fs::path(path)));
            emit(ens_out, combine_predictions(models, ens_mode == "vote" ? EnsembleMode::vote : EnsembleMode::intersect));
        } else if (*rep) {
            std::cout << format_table(read_report(fs::path(rep_input)));
        } else if (*bal) {
            const auto data = load_sentence_dataset(fs::path(bal_input), bal_threshold, bal_cols, row_limit(limit));
            std::cerr << "read " << data.rows << " rows, rejected " << data.rejected_rows << '\n';
            const auto sample = balanced_sample(data.posts, bal_n, require_seed(seed));
            auto out = open_output(bal_out);
            csv::write_record(out, {bal_cols.id, bal_cols.text, bal_cols.score, "hateful"});
            for (const auto& p : sample) {
                std::ostringstream score;
                score << p.toxicity;
                csv::write_record(out, {p.id, p.text, score.str(), p.hateful ? "1" : "0"});
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::data);
    }
    return 0;
}
