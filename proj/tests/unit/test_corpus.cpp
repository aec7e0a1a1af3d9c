#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "toxspan/corpus.hpp"
#include "toxspan/interchange.hpp"
#include "toxspan/lexicon.hpp"
#include "toxspan/normalize.hpp"
#include "toxspan/predictions.hpp"

using namespace toxspan;

TEST(Csv, QuotedFieldsWithCommasNewlinesAndQuotes) {
    std::istringstream in("a,b\n\"x, y\",\"line1\nline2 \"\"q\"\"\"\r\nplain,\n");
    csv::Reader r(in);
    EXPECT_EQ(*r.next(), (csv::Record{"a", "b"}));
    EXPECT_EQ(*r.next(), (csv::Record{"x, y", "line1\nline2 \"q\""}));
    EXPECT_EQ(*r.next(), (csv::Record{"plain", ""}));
    EXPECT_FALSE(r.next());
}

TEST(Csv, WriteThenReadRoundTrip) {
    const csv::Record rec{"id,1", "say \"hi\"", "multi\nline", ""};
    std::ostringstream out;
    csv::write_record(out, rec);
    std::istringstream in(out.str());
    csv::Reader r(in);
    EXPECT_EQ(*r.next(), rec);
}

TEST(Csv, ColumnLookupIgnoresBom) {
    const csv::Record header{"\xEF\xBB\xBFspans", "text"};
    EXPECT_EQ(csv::column(header, "spans"), 0u);
    EXPECT_EQ(csv::column(header, "text"), 1u);
    EXPECT_FALSE(csv::column(header, "id"));
}

TEST(SpanLiteral, Examples) {
    EXPECT_TRUE(parse_span_literal("[]").empty());
    EXPECT_EQ(parse_span_literal("[3, 4, 5]"), (CharIndexSet{3, 4, 5}));
    EXPECT_EQ(parse_span_literal("[5,3,3,4]"), (CharIndexSet{3, 4, 5}));
}

TEST(SpanLiteral, MalformedReportsColumn) {
    try {
        parse_span_literal("[1, x]");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.column(), 5u);
    }
    EXPECT_THROW(parse_span_literal("1, 2"), ParseError);
    EXPECT_THROW(parse_span_literal("[1, 2"), ParseError);
    EXPECT_THROW(parse_span_literal("[1] x"), ParseError);
}

TEST(SpanLiteral, NegativeIndexIsValidationError) {
    EXPECT_THROW(parse_span_literal("[1, -2]"), ValidationError);
}

TEST(SpanLiteral, SerializeParseIdentity) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const auto s = oracle::random_set(rng, 200, 0.1);
        const auto set = CharIndexSet::from_sorted({s.begin(), s.end()});
        EXPECT_EQ(parse_span_literal(format_index_list(set)), set);
    }
}

TEST(ToxicSpans, SingleRow) {
    std::istringstream in("spans,text\n\"[0,1]\",ab cd\n");
    const auto d = load_toxic_spans(in);
    ASSERT_EQ(d.posts.size(), 1u);
    EXPECT_EQ(d.posts[0].gold, (CharIndexSet{0, 1}));
    EXPECT_EQ(d.posts[0].text, "ab cd");
    EXPECT_EQ(d.posts[0].id, "0");
    EXPECT_EQ(d.posts_with_gold, 1u);
}

TEST(ToxicSpans, OutOfBoundsIndexDropped) {
    std::istringstream in("spans,text\n\"[1, 10]\",hello\n");
    const auto d = load_toxic_spans(in);
    EXPECT_EQ(d.posts[0].gold, (CharIndexSet{1}));
    EXPECT_EQ(d.dropped_indices, 1u);
}

TEST(ToxicSpans, BoundsUseScalarsNotBytes) {
    std::istringstream in("spans,text\n\"[0, 1, 2]\",é🙄x\n");
    const auto d = load_toxic_spans(in);
    EXPECT_EQ(d.posts[0].gold.size(), 3u);
    EXPECT_EQ(d.dropped_indices, 0u);
}

TEST(ToxicSpans, MalformedRowsSkippedWithCount) {
    std::istringstream in("id,spans,text\na,[0],x\nb,[oops],y\nc,[],z,extra\nd,[],w\n");
    const auto d = load_toxic_spans(in);
    EXPECT_EQ(d.rows, 4u);
    EXPECT_EQ(d.skipped_rows, 2u);
    ASSERT_EQ(d.posts.size(), 2u);
    EXPECT_EQ(d.posts[0].id, "a");
    EXPECT_EQ(d.posts[1].id, "d");
}

TEST(ToxicSpans, MissingColumnIsFatal) {
    std::istringstream in("spans,body\n[],x\n");
    EXPECT_THROW(load_toxic_spans(in), DataError);
}

TEST(ToxicSpans, LimitCapsRows) {
    std::istringstream in("spans,text\n[],a\n[],b\n[],c\n");
    EXPECT_EQ(load_toxic_spans(in, 2).posts.size(), 2u);
}

TEST(ToxicSpans, BundledSampleLoads) {
    const auto d = load_toxic_spans(std::filesystem::path(TOXSPAN_SAMPLE_DIR) / "tsd_sample.csv");
    EXPECT_EQ(d.posts.size(), 200u);
    EXPECT_EQ(d.skipped_rows, 0u);
    EXPECT_EQ(d.dropped_indices, 0u);
}

TEST(SentenceData, ThresholdIsStrict) {
    std::istringstream in("id,comment_text,target\n1,a,0.7\n2,b,0.5\n3,c,1.2\n4,d,nan\n5,e,0\n");
    const auto d = load_sentence_dataset(in);
    ASSERT_EQ(d.posts.size(), 3u);
    EXPECT_TRUE(d.posts[0].hateful);
    EXPECT_FALSE(d.posts[1].hateful);
    EXPECT_FALSE(d.posts[2].hateful);
    EXPECT_EQ(d.rejected_rows, 2u);
}

TEST(SentenceData, ConfigurableColumns) {
    std::istringstream in("key,body,score\nk,hello,0.9\n");
    const auto d = load_sentence_dataset(in, 0.5, SentenceColumns{"key", "body", "score"});
    ASSERT_EQ(d.posts.size(), 1u);
    EXPECT_EQ(d.posts[0].id, "k");
    EXPECT_TRUE(d.posts[0].hateful);
}

namespace {

std::vector<SentencePost> pool(std::size_t hateful, std::size_t benign) {
    std::vector<SentencePost> out;
    for (std::size_t i = 0; i < hateful; ++i) out.push_back({"h" + std::to_string(i), "t", 0.9, true});
    for (std::size_t i = 0; i < benign; ++i) out.push_back({"b" + std::to_string(i), "t", 0.1, false});
    return out;
}

} // namespace

TEST(BalancedSample, EqualClassCounts) {
    const auto posts = pool(10, 10);
    const auto s = balanced_sample(posts, 4, 1);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(std::count_if(s.begin(), s.end(), [](const auto& p) { return p.hateful; }), 2);
}

TEST(BalancedSample, DeterministicPerSeed) {
    const auto posts = pool(30, 50);
    const auto a = balanced_sample(posts, 20, 9);
    const auto b = balanced_sample(posts, 20, 9);
    std::vector<std::string> ia, ib;
    for (const auto& p : a) ia.push_back(p.id);
    for (const auto& p : b) ib.push_back(p.id);
    EXPECT_EQ(ia, ib);
    std::set<std::string> unique(ia.begin(), ia.end());
    EXPECT_EQ(unique.size(), ia.size());
}

TEST(BalancedSample, InsufficientClassNamed) {
    const auto posts = pool(1, 10);
    try {
        balanced_sample(posts, 4, 1);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("insufficient hateful"), std::string::npos);
    }
    EXPECT_THROW(balanced_sample(pool(10, 1), 4, 1), ValidationError);
    EXPECT_THROW(balanced_sample(pool(10, 10), 3, 1), ValidationError);
}

TEST(Normalize, DropsEdgePunctuationAndLowercases) {
    const auto n = normalize("You FOOL!");
    EXPECT_EQ(n.utf8(), "you fool");
    EXPECT_EQ(n.map.size(), 8u);
    EXPECT_EQ(n.map(7), 7u);
}

TEST(Normalize, KeepsInteriorPunctuation) {
    EXPECT_EQ(normalize("a$$hole").utf8(), "a$$hole");
    EXPECT_EQ(normalize("don't... stop").utf8(), "don't stop");
}

TEST(Normalize, Empty) {
    const auto n = normalize("");
    EXPECT_TRUE(n.text.empty());
    EXPECT_TRUE(n.map.empty());
}

TEST(Normalize, MapPointsAtMatchingCharactersAndIsIdempotent) {
    std::mt19937_64 rng(8);
    const std::u32string alphabet = U"aB9 !?.,'-$*ÉéßZ🙄\n";
    for (int trial = 0; trial < 500; ++trial) {
        std::u32string text;
        const std::size_t len = rng() % 30;
        for (std::size_t i = 0; i < len; ++i) text.push_back(alphabet[rng() % alphabet.size()]);
        const auto n = normalize(text);
        ASSERT_EQ(n.map.size(), n.text.size());
        for (std::size_t p = 0; p < n.text.size(); ++p) {
            const char32_t orig = text[n.map(p)];
            EXPECT_TRUE(orig == n.text[p] || unicode::to_lower(orig) == n.text[p]);
            if (p > 0) EXPECT_LT(n.map(p - 1), n.map(p));
        }
        EXPECT_EQ(normalize(n.text).text, n.text);
    }
}

TEST(Normalize, TokenOffsetsMapBackToOriginal) {
    const std::u32string original = U"Hey, YOU a$$hole!!";
    const auto n = normalize(original);
    const auto tokens = tokenize(n.text);
    ASSERT_EQ(tokens.size(), 3u);
    const auto t = n.map.to_original(tokens[2], original);
    EXPECT_EQ(t.surface, "a$$hole");
    EXPECT_EQ(t.start, 9u);
    EXPECT_EQ(t.end, 16u);
}

TEST(Lexicon, TermsNormalizedLikeCorpusTokens) {
    Lexicon lex{"Idiot", "  dumb ASS ", "", "!!"};
    EXPECT_EQ(lex.size(), 2u);
    EXPECT_TRUE(lex.contains("idiot"));
    EXPECT_TRUE(lex.contains("dumb ass"));
    for (const auto& t : lex.terms()) EXPECT_FALSE(t.empty());
}

TEST(Lexicon, MultiwordMatchAsNgrams) {
    Lexicon lex{"dumb ass", "idiot"};
    const auto tokens = tokenize("You dumb, dumb ass IDIOT");
    EXPECT_EQ(lex.match(tokens), (std::vector<bool>{false, false, false, true, true, true}));
}

TEST(Lexicon, LoadSkipsCommentsAndBlanks) {
    std::istringstream in("# header\n\nidiot\n  moron  \n#skip\n");
    const auto lex = load_lexicon(in);
    EXPECT_EQ(lex.size(), 2u);
    EXPECT_TRUE(lex.contains("moron"));
}

TEST(SentimentLexicon, LookupAndBounds) {
    std::istringstream in("# c\nTerrible\t-0.6\ngreat\t0.8\n");
    const auto s = load_sentiment_lexicon(in);
    EXPECT_DOUBLE_EQ(s.polarity("terrible"), -0.6);
    EXPECT_DOUBLE_EQ(s.polarity("unknown"), 0.0);
    std::istringstream bad("x\t1.5\n");
    EXPECT_THROW(load_sentiment_lexicon(bad), ValidationError);
    std::istringstream garbled("x\tabc\n");
    EXPECT_THROW(load_sentiment_lexicon(garbled), DataError);
}

TEST(ShippedLexicons, LoadCleanly) {
    const std::filesystem::path dir = std::filesystem::path(TOXSPAN_SAMPLE_DIR).parent_path() / "lexicons";
    const auto hate = load_lexicon(dir / "hate_words.txt");
    EXPECT_GT(hate.size(), 500u);
    EXPECT_TRUE(hate.contains("stupid"));
    const auto sentiment = load_sentiment_lexicon(dir / "sentiment.tsv");
    EXPECT_LT(sentiment.polarity("pathetic"), 0.0);
    const auto stop = load_lexicon(dir / "stopwords.txt");
    EXPECT_TRUE(stop.contains("the"));
}

TEST(Predictions, RoundTrip) {
    const std::vector<Prediction> preds{{"a", {1, 2, 3}}, {"b", {}}, {"c d", {0}}};
    std::stringstream io;
    write_predictions(io, preds);
    EXPECT_EQ(io.str(), "a\t[1, 2, 3]\nb\t[]\nc d\t[0]\n");
    EXPECT_EQ(read_predictions(io), preds);
}

TEST(Predictions, MissingTabIsDataError) {
    std::istringstream in("a [1]\n");
    EXPECT_THROW(read_predictions(in), DataError);
}

TEST(Interchange, PoolMean) {
    EXPECT_DOUBLE_EQ(pool_mean(std::vector<double>{0.2, 0.4}), 0.3);
    EXPECT_DOUBLE_EQ(pool_mean(std::vector<double>{0.7}), 0.7);
    EXPECT_NEAR(pool_mean(std::vector<double>{0.1, 0.2, 0.6}), 0.3, 1e-15);
    EXPECT_THROW(pool_mean(std::vector<double>{}), ValidationError);
}

TEST(Interchange, ReadsAndPoolsSubwords) {
    std::istringstream in(
        R"({"format":"toxspan-interchange","version":1,"checkpoint_digest":"abc","emb_dim":2,"truncated":1})"
        "\n"
        R"({"id":7,"text":"you idiot","sent_prob":0.9,"words":[{"start":0,"end":3,"attn":0.1,"pos":"PRON","emb":[1,2]},{"start":4,"end":9,"subword_attn":[0.5,0.7],"emb":[0,0]}]})"
        "\n");
    const auto f = read_interchange(in);
    EXPECT_EQ(f.header.checkpoint_digest, "abc");
    EXPECT_EQ(f.header.truncated, 1u);
    ASSERT_EQ(f.records.size(), 1u);
    EXPECT_EQ(f.records[0].id, "7");
    EXPECT_DOUBLE_EQ(f.records[0].words[1].attn, 0.6);
    EXPECT_EQ(f.records[0].words[0].pos, "PRON");
}

TEST(Interchange, ContractViolationsAreDataErrors) {
    const std::string header = R"({"format":"toxspan-interchange","version":1,"emb_dim":0})";
    const std::vector<std::string> bad = {
        R"({"id":"a","text":"abc","sent_prob":0.5,"words":[{"start":0,"end":4,"attn":0.1}]})",
        R"({"id":"a","text":"abc","sent_prob":0.5,"words":[{"start":1,"end":1,"attn":0.1}]})",
        R"({"id":"a","text":"abc","sent_prob":0.5,"words":[{"start":0,"end":1,"attn":-0.1}]})",
        R"({"id":"a","text":"abc","sent_prob":1.5,"words":[]})",
        R"({"id":"a","text":"abc","sent_prob":0.5,"words":[{"start":1,"end":2,"attn":0.1},{"start":0,"end":1,"attn":0.1}]})",
        R"({"id":"a","text":"abc","sent_prob":0.5,"words":[{"start":0,"end":1,"attn":0.1,"emb":[1.0]}]})",
        R"({"id":"a","text":"abc","sent_prob":0.5,"words":[{"start":0,"end":1,"subword_attn":[]}]})",
        R"({"id":"a","text":"abc"})",
        R"(not json)",
    };
    for (const auto& line : bad) {
        std::istringstream in(header + "\n" + line + "\n");
        EXPECT_THROW(read_interchange(in), DataError) << line;
    }
    std::istringstream no_header(R"({"id":"a","text":"abc","sent_prob":0.5,"words":[]})" "\n");
    EXPECT_THROW(read_interchange(no_header), DataError);
    std::istringstream wrong_version(R"({"format":"toxspan-interchange","version":9})" "\n");
    EXPECT_THROW(read_interchange(wrong_version), DataError);
}

TEST(Interchange, WriteReadRoundTrip) {
    InterchangeFile f;
    f.header.emb_dim = 1;
    f.header.checkpoint_digest = "d";
    InterchangeRecord r{"x", "héllo you", 0.25, {}};
    r.words.push_back({0, 5, 0.3, {}, std::string("INTJ"), {0.5}});
    r.words.push_back({6, 9, 0.0, {}, std::nullopt, {-1.0}});
    f.records.push_back(r);
    std::stringstream io;
    write_interchange(io, f);
    const auto back = read_interchange(io);
    ASSERT_EQ(back.records.size(), 1u);
    EXPECT_EQ(back.records[0].text, "héllo you");
    EXPECT_EQ(back.records[0].words[0].pos, "INTJ");
    EXPECT_FALSE(back.records[0].words[1].pos);
    EXPECT_EQ(back.records[0].words[1].emb, std::vector<double>{-1.0});
}

TEST(Interchange, BundledSampleIsValid) {
    const auto f = read_interchange(std::filesystem::path(TOXSPAN_SAMPLE_DIR) / "interchange_sample.jsonl");
    EXPECT_EQ(f.records.size(), 200u);
    EXPECT_EQ(f.header.emb_dim, 8u);
}
