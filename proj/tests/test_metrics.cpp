#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ranklab/corpus.hpp"
#include "ranklab/metrics.hpp"
#include "ranklab/text.hpp"

using namespace ranklab;

TEST_CASE("psr_at_k") {
    std::vector<std::size_t> all_first{1, 1, 1};
    CHECK(psr_at_k(all_first, 1) == doctest::Approx(1.0));

    std::vector<std::size_t> spread{2, 4, 6, 8, 10};
    CHECK(psr_at_k(spread, 5) == doctest::Approx(0.4));

    std::vector<std::size_t> single{3};
    CHECK(psr_at_k(single, 2) == doctest::Approx(0.0));

    std::vector<std::size_t> empty;
    CHECK_THROWS_AS(psr_at_k(empty, 1), std::invalid_argument);
    std::vector<std::size_t> zero_rank{0};
    CHECK_THROWS_AS(psr_at_k(zero_rank, 1), std::invalid_argument);
}

TEST_CASE("psr_at_k is monotone in k") {
    std::vector<std::size_t> ranks{1, 3, 5, 7, 9, 2, 2, 8};
    double prev = 0.0;
    for (std::size_t k = 1; k <= 10; ++k) {
        double v = psr_at_k(ranks, k);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(psr_at_k(ranks, 9) == doctest::Approx(1.0));
}

TEST_CASE("train_ngram") {
    SUBCASE("deterministic") {
        std::vector<std::string> corpus{"a b c", "a b", "c a b"};
        auto m1 = train_ngram(corpus, 2, 0.5);
        auto m2 = train_ngram(corpus, 2, 0.5);
        CHECK(m1.vocab_size == m2.vocab_size);
        CHECK(perplexity("a b c", m1) == doctest::Approx(perplexity("a b c", m2)));
    }
    SUBCASE("smoothed conditional formula") {
        // corpus {"a b", "a b"}: count(a -> b) = 2, V = 2
        std::vector<std::string> corpus{"a b", "a b"};
        double s = 0.5;
        auto model = train_ngram(corpus, 2, s);
        CHECK(model.vocab_size == 2);
        std::vector<std::string> ctx{"a"};
        double p_b = std::exp(model.token_log_probability(ctx, "b"));
        CHECK(p_b == doctest::Approx((2.0 + s) / (2.0 + s * 2.0)).epsilon(1e-12));
    }
    SUBCASE("single-token corpus concentrates on that token") {
        std::vector<std::string> corpus{"solo"};
        auto model = train_ngram(corpus, 1, 0.01);
        std::vector<std::string> none;
        double p_solo = std::exp(model.token_log_probability(none, "solo"));
        double p_other = std::exp(model.token_log_probability(none, "other"));
        CHECK(p_solo > 0.9);
        CHECK(p_other < 0.05);
    }
    SUBCASE("rejects empty corpora and bad parameters") {
        std::vector<std::string> empty;
        CHECK_THROWS_AS(train_ngram(empty, 2, 0.5), std::invalid_argument);
        std::vector<std::string> blank{"!!!"};
        CHECK_THROWS_AS(train_ngram(blank, 2, 0.5), std::invalid_argument);
        std::vector<std::string> ok{"a b"};
        CHECK_THROWS_AS(train_ngram(ok, 0, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(train_ngram(ok, 4, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(train_ngram(ok, 2, 0.0), std::invalid_argument);
    }
}

TEST_CASE("context probabilities sum to one") {
    std::vector<std::string> corpus{"the quick fox", "the slow fox",
                                    "a quick fox jumps", "the fox"};
    auto model = train_ngram(corpus, 2, 0.1);
    std::vector<std::string> vocab{"the", "quick", "slow", "fox", "a", "jumps"};
    REQUIRE(model.vocab_size == vocab.size());
    for (const auto& ctx_word : vocab) {
        std::vector<std::string> ctx{ctx_word};
        double total = 0.0;
        for (const auto& tok : vocab) {
            total += std::exp(model.token_log_probability(ctx, tok));
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
    // unigram context as well
    std::vector<std::string> none;
    double total = 0.0;
    for (const auto& tok : vocab) {
        total += std::exp(model.token_log_probability(none, tok));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("perplexity") {
    SUBCASE("uniform model scores any text at the vocabulary size") {
        auto model = uniform_ngram(100, 0.5);
        CHECK(perplexity("whatever words appear here", model) ==
              doctest::Approx(100.0).epsilon(1e-9));
        CHECK(perplexity("other stuff", model) == doctest::Approx(100.0).epsilon(1e-9));
    }
    SUBCASE("certain token has perplexity one") {
        // additive smoothing never reaches exactly 1; shrink it until the
        // probability is 1 within double precision
        std::vector<std::string> corpus{"token token token token"};
        auto model = train_ngram(corpus, 1, 1e-15);
        CHECK(perplexity("token", model) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("perplexity is at least one") {
        std::vector<std::string> corpus{"a b a b", "b a"};
        auto model = train_ngram(corpus, 2, 0.2);
        for (const char* text : {"a b", "b", "c d e", "a a a a"}) {
            CHECK(perplexity(text, model) >= 1.0 - 1e-12);
        }
    }
    SUBCASE("duplicating the text leaves a unigram perplexity unchanged") {
        std::vector<std::string> corpus{"x y z x y"};
        auto model = train_ngram(corpus, 1, 0.3);
        double once = perplexity("x y z", model);
        double twice = perplexity("x y z x y z", model);
        CHECK(once == doctest::Approx(twice).epsilon(1e-12));
    }
    SUBCASE("garbled token soup scores worse than in-distribution text") {
        auto sets = synth_corpus(7, 10, 8);
        std::vector<std::string> texts;
        for (const auto& set : sets) {
            texts.push_back(set.query.text);
            for (const auto& item : set.items) texts.push_back(item_text(item));
        }
        auto model = train_ngram(texts, 2, 0.1);
        double natural = perplexity(item_text(sets[0].items[0]), model);
        // same vocabulary, scrambled order
        double garbled = perplexity("finish grip the daily buying model sturdy "
                                    "well cover quality build price",
                                    model);
        CHECK(garbled > natural);
        CHECK(garbled > 2.0 * natural);
    }
    SUBCASE("empty text is an error") {
        auto model = uniform_ngram(10, 0.5);
        CHECK_THROWS_AS(perplexity("", model), std::invalid_argument);
        CHECK_THROWS_AS(perplexity("!!!", model), std::invalid_argument);
    }
}

TEST_CASE("summarize") {
    SUBCASE("empty input gives an empty table") {
        std::vector<TrialRecord> none;
        CHECK(summarize(none).empty());
    }
    SUBCASE("single trial at rank one is one hundred percent everywhere") {
        std::vector<TrialRecord> trials{{"cat", "m", "baseline", 0, 0, 1, 12.0}};
        auto rows = summarize(trials);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].top5 == doctest::Approx(1.0));
        CHECK(rows[0].top3 == doctest::Approx(1.0));
        CHECK(rows[0].top1 == doctest::Approx(1.0));
        CHECK(rows[0].mean_ppl == doctest::Approx(12.0));
        CHECK(rows[0].trials == 1);
    }
    SUBCASE("groups by category, model and method") {
        std::vector<TrialRecord> trials;
        for (std::size_t t = 0; t < 4; ++t) {
            trials.push_back({"c1", "m", "baseline", 0, t, t + 1, 10.0});
            trials.push_back({"c1", "m", "string", 0, t, 1, 100.0});
            trials.push_back({"c2", "m", "baseline", 1, t, 6, 10.0});
        }
        auto rows = summarize(trials);
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].category == "c1");
        CHECK(rows[0].method == "baseline");
        CHECK(rows[0].top3 == doctest::Approx(0.75));
        CHECK(rows[1].method == "string");
        CHECK(rows[1].top1 == doctest::Approx(1.0));
        CHECK(rows[2].category == "c2");
        CHECK(rows[2].top5 == doctest::Approx(0.0));
    }
}

TEST_CASE("summary csv escapes fields and keeps fixed columns") {
    std::vector<SummaryRow> rows{{"Clothing, Shoes & Jewelry", "m", "baseline",
                                  0.5, 0.25, 0.125, 42.5, 8}};
    auto csv = summary_csv(rows);
    CHECK(csv.find("category,model,method,top5,top3,top1,mean_ppl\n") == 0);
    CHECK(csv.find("\"Clothing, Shoes & Jewelry\"") != std::string::npos);
    CHECK(csv.find("0.500000") != std::string::npos);
    CHECK(csv.find("42.5000") != std::string::npos);

    auto j = summary_json(rows);
    CHECK(j[0]["category"] == "Clothing, Shoes & Jewelry");
    CHECK(j[0]["trials"] == 8);
}
