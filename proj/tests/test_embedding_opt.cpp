#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "ranklab/corpus.hpp"
#include "ranklab/embedding_opt.hpp"
#include "ranklab/engine.hpp"
#include "ranklab/rng.hpp"

using namespace ranklab;

namespace {

ProductRecord record(const std::string& name, const std::string& text) {
    ProductRecord r;
    r.name = name;
    r.long_description = text;
    return r;
}

CandidateSet make_set(const std::string& query,
                      const std::vector<std::string>& texts) {
    CandidateSet c;
    c.query.text = query;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        c.items.push_back(record("item" + std::to_string(i), texts[i]));
    }
    c.target_index = texts.size() - 1;
    return c;
}

EngineParams cosine_engine(double lambda) {
    EngineParams p;
    p.lambda = lambda;
    p.scorer.kind = ScorerKind::CosineBagOfWords;
    return p;
}

// Independent loss oracle: softmax assembled by hand in long double from the
// fixed utilities and the relaxed target utility.
long double loss_oracle(const ShadowProblem& prob, const std::vector<double>& x) {
    long double score = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        score += static_cast<long double>(x[i]) *
                 static_cast<long double>(prob.query_direction[i]);
    }
    long double u_t = score - static_cast<long double>(prob.target_penalty);
    long double total = expl(u_t);
    for (double u : prob.fixed_utilities) total += expl(static_cast<long double>(u));
    return logl(total) - u_t;
}

// Central finite differences of the loss.
std::vector<double> fd_gradient(const ShadowProblem& prob,
                                const EmbeddingState& state, double h) {
    std::vector<double> g(state.weights.size());
    EmbeddingState plus = state, minus = state;
    for (std::size_t i = 0; i < state.weights.size(); ++i) {
        plus.weights[i] = state.weights[i] + h;
        minus.weights[i] = state.weights[i] - h;
        g[i] = (loss(prob, plus) - loss(prob, minus)) / (2.0 * h);
        plus.weights[i] = state.weights[i];
        minus.weights[i] = state.weights[i];
    }
    return g;
}

CandidateSet random_instance(SplitMix64& rng, std::size_t max_items = 8) {
    static const std::vector<std::string> kWords = {
        "alpha", "beta", "gamma", "delta", "epsilon",
        "zeta",  "eta",  "theta", "iota",  "kappa"};
    std::size_t n = 2 + rng.next_below(max_items - 1);
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < n; ++i) {
        std::string t;
        std::size_t words = 1 + rng.next_below(5);
        for (std::size_t w = 0; w < words; ++w) {
            if (w) t += ' ';
            t += kWords[rng.next_below(kWords.size())];
        }
        texts.push_back(t);
    }
    std::string query = kWords[rng.next_below(4)] + " " +
                        kWords[4 + rng.next_below(4)];
    return make_set(query, texts);
}

EmbeddingState random_state(const ShadowProblem& prob, SplitMix64& rng) {
    EmbeddingState st;
    st.weights.resize(prob.vocab.size());
    for (auto& w : st.weights) w = rng.next_gaussian();
    return st;
}

}  // namespace

TEST_CASE("make_problem shapes") {
    auto set = make_set("alpha beta", {"gamma delta", "alpha plain"});
    auto prob = make_problem(set, cosine_engine(0.3));
    // vocabulary: sorted distinct tokens of items + query + names
    CHECK(std::is_sorted(prob.vocab.begin(), prob.vocab.end()));
    CHECK(std::count(prob.vocab.begin(), prob.vocab.end(), "alpha") == 1);
    CHECK(prob.fixed_utilities.size() == 1);
    double qnorm = 0.0;
    for (double v : prob.query_direction) qnorm += v * v;
    CHECK(qnorm == doctest::Approx(1.0).epsilon(1e-12));

    EngineParams kw;
    kw.scorer.kind = ScorerKind::KeywordOverlap;
    CHECK_THROWS_AS(make_problem(set, kw), ShadowError);
}

TEST_CASE("initial state maps init text into the vocabulary") {
    auto set = make_set("alpha beta", {"gamma", "alpha"});
    auto prob = make_problem(set, cosine_engine(0.3));
    ShadowConfig cfg;
    SUBCASE("default bang string has no tokens") {
        auto st = initial_state(prob, cfg);
        for (double w : st.weights) CHECK(w == 0.0);
        CHECK(relaxed_score(prob, st.weights) == doctest::Approx(0.0));
    }
    SUBCASE("word init lands on vocabulary entries") {
        cfg.init = "alpha alpha gamma";
        auto st = initial_state(prob, cfg);
        double total = 0.0;
        for (double w : st.weights) total += w;
        CHECK(total == doctest::Approx(3.0));
    }
}

TEST_CASE("loss values") {
    SUBCASE("two items with equal utilities lose ln 2") {
        // other item's full text equals the query, so its cosine is exactly 1;
        // the target state is set to the same relaxed score
        CandidateSet set;
        set.query.text = "alpha beta";
        ProductRecord other;
        other.name = "alpha";
        other.long_description = "beta";
        ProductRecord target;
        target.name = "plain";
        target.long_description = "words";
        set.items = {other, target};
        set.target_index = 1;
        auto prob = make_problem(set, cosine_engine(0.0));
        EmbeddingState st;
        st.weights.assign(prob.vocab.size(), 0.0);
        // place mass exactly along the query direction with unit projection
        for (std::size_t i = 0; i < prob.vocab.size(); ++i) {
            st.weights[i] = prob.query_direction[i];
        }
        CHECK(relaxed_score(prob, st.weights) == doctest::Approx(1.0));
        CHECK(loss(prob, st) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("dominant target drives the loss to zero") {
        auto set = make_set("alpha", {"plain", "plain"});
        auto prob = make_problem(set, cosine_engine(0.3));
        EmbeddingState st;
        st.weights.assign(prob.vocab.size(), 0.0);
        for (std::size_t i = 0; i < prob.vocab.size(); ++i) {
            st.weights[i] = 50.0 * prob.query_direction[i];
        }
        CHECK(loss(prob, st) < 1e-9);
        CHECK(relaxed_top1_probability(prob, st) == doctest::Approx(1.0));
    }
    SUBCASE("zero vector scores zero") {
        auto set = make_set("alpha beta", {"plain", "plain"});
        auto prob = make_problem(set, cosine_engine(0.3));
        EmbeddingState st;
        st.weights.assign(prob.vocab.size(), 0.0);
        CHECK(relaxed_score(prob, st.weights) == doctest::Approx(0.0));
    }
    SUBCASE("dimension mismatch is an error") {
        auto set = make_set("alpha", {"plain", "plain"});
        auto prob = make_problem(set, cosine_engine(0.3));
        EmbeddingState st;
        st.weights.assign(prob.vocab.size() + 1, 0.0);
        CHECK_THROWS_AS(loss(prob, st), ShadowError);
    }
    SUBCASE("loss agrees with the long-double oracle") {
        SplitMix64 rng(5);
        for (int i = 0; i < 25; ++i) {
            auto set = random_instance(rng);
            auto prob = make_problem(set, cosine_engine(0.3));
            auto st = random_state(prob, rng);
            double expect = static_cast<double>(loss_oracle(prob, st.weights));
            CHECK(loss(prob, st) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    SplitMix64 rng(17);
    double worst = 0.0;
    for (int instance = 0; instance < 100; ++instance) {
        auto set = random_instance(rng);
        auto prob = make_problem(set, cosine_engine(0.1 + rng.next_double()));
        auto st = random_state(prob, rng);
        auto g = grad(prob, st);
        auto fd = fd_gradient(prob, st, 1e-6);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            num = std::max(num, std::abs(g[i] - fd[i]));
            den = std::max(den, std::abs(fd[i]));
        }
        double rel = num / std::max(den, 1e-12);
        worst = std::max(worst, rel);
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("gradient special cases") {
    SUBCASE("constant scorer has a zero gradient") {
        auto set = make_set("alpha", {"plain", "plain"});
        EngineParams p;
        p.lambda = 0.3;
        p.scorer.kind = ScorerKind::Constant;
        p.scorer.constant_value = 0.4;
        auto prob = make_problem(set, p);
        SplitMix64 rng(3);
        EmbeddingState st = random_state(prob, rng);
        for (double g : grad(prob, st)) CHECK(g == 0.0);
    }
    SUBCASE("gradient at the zero vector points along the query direction") {
        auto set = make_set("alpha beta", {"plain", "plain"});
        auto prob = make_problem(set, cosine_engine(0.3));
        EmbeddingState st;
        st.weights.assign(prob.vocab.size(), 0.0);
        auto g = grad(prob, st);
        auto fd = fd_gradient(prob, st, 1e-6);
        double p_t = relaxed_top1_probability(prob, st);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(g[i] == doctest::Approx((p_t - 1.0) * prob.query_direction[i])
                              .epsilon(1e-9));
            CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-5));
        }
    }
}

TEST_CASE("step semantics") {
    auto set = make_set("alpha beta", {"plain", "plain"});
    auto prob = make_problem(set, cosine_engine(0.3));
    ShadowConfig cfg;
    cfg.eta = 0.5;
    EmbeddingState st;
    st.weights.assign(prob.vocab.size(), 0.25);

    SUBCASE("noiseless step is exactly minus eta grad") {
        cfg.sigma = 0.0;
        SplitMix64 rng(1);
        auto g = grad(prob, st);
        auto next = step(prob, st, cfg, rng);
        CHECK(next.iteration == 1);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(next.weights[i] ==
                  doctest::Approx(st.weights[i] - 0.5 * g[i]).epsilon(1e-15));
        }
    }
    SUBCASE("zero gradient leaves the state unchanged apart from iteration") {
        EngineParams constant;
        constant.lambda = 0.3;
        constant.scorer.kind = ScorerKind::Constant;
        auto cprob = make_problem(set, constant);
        cfg.sigma = 0.0;
        SplitMix64 rng(1);
        auto next = step(cprob, st, cfg, rng);
        CHECK(next.weights == st.weights);
        CHECK(next.iteration == st.iteration + 1);
    }
    SUBCASE("noisy trajectories repeat with the same seed") {
        cfg.sigma = 0.05;
        SplitMix64 a(11), b(11);
        auto xa = st, xb = st;
        for (int i = 0; i < 10; ++i) {
            xa = step(prob, xa, cfg, a);
            xb = step(prob, xb, cfg, b);
        }
        CHECK(xa.weights == xb.weights);
    }
}

TEST_CASE("optimize") {
    auto set = make_set("alpha beta", {"plain filler", "plain words here"});
    auto p = cosine_engine(0.3);

    SUBCASE("zero iterations returns the initial state") {
        ShadowConfig cfg;
        cfg.max_iters = 0;
        SplitMix64 rng(1);
        auto res = optimize(set, p, cfg, rng);
        CHECK(res.state.iteration == 0);
        CHECK(res.trace.empty());
    }
    SUBCASE("noiseless loss trace is monotonically non-increasing") {
        ShadowConfig cfg;
        cfg.sigma = 0.0;
        cfg.max_iters = 200;
        SplitMix64 rng(1);
        auto res = optimize(set, p, cfg, rng);
        REQUIRE(res.trace.size() == 200);
        auto prob = make_problem(set, p);
        ShadowConfig icfg;
        double prev = loss(prob, initial_state(prob, icfg));
        for (double v : res.trace) {
            CHECK(v <= prev + 1e-12);
            prev = v;
        }
    }
    SUBCASE("constant scorer gives a flat trace") {
        EngineParams constant;
        constant.lambda = 0.3;
        constant.scorer.kind = ScorerKind::Constant;
        ShadowConfig cfg;
        cfg.sigma = 0.0;
        cfg.max_iters = 20;
        SplitMix64 rng(1);
        auto res = optimize(set, constant, cfg, rng);
        for (std::size_t i = 1; i < res.trace.size(); ++i) {
            CHECK(res.trace[i] == doctest::Approx(res.trace[0]).epsilon(1e-15));
        }
    }
    SUBCASE("exp(-loss) equals the exact top-1 probability at every iteration") {
        ShadowConfig cfg;
        cfg.sigma = 0.05;
        cfg.max_iters = 60;
        SplitMix64 rng(21);
        auto prob = make_problem(set, p);
        auto st = initial_state(prob, cfg);
        for (int i = 0; i < 60; ++i) {
            st = step(prob, st, cfg, rng);
            double via_loss = std::exp(-loss(prob, st));
            double direct = relaxed_top1_probability(prob, st);
            CHECK(via_loss == doctest::Approx(direct).epsilon(1e-9));
        }
    }
    SUBCASE("early stop honors the configured probability") {
        ShadowConfig cfg;
        cfg.sigma = 0.0;
        cfg.max_iters = 10000;
        cfg.stop_probability = 0.9;
        SplitMix64 rng(1);
        auto res = optimize(set, p, cfg, rng);
        auto prob = make_problem(set, p);
        CHECK(relaxed_top1_probability(prob, res.state) >= 0.9);
        CHECK(res.state.iteration < 10000);
    }
}

TEST_CASE("reconstruct") {
    auto set = make_set("camera zoom", {"plain", "assorted words camera zoom"});
    auto prob = make_problem(set, cosine_engine(0.3));
    ShadowConfig cfg;

    SUBCASE("top-mass tokens in descending order") {
        EmbeddingState st;
        st.weights.assign(prob.vocab.size(), 0.0);
        auto at = [&](const std::string& tok) {
            return static_cast<std::size_t>(
                std::find(prob.vocab.begin(), prob.vocab.end(), tok) -
                prob.vocab.begin());
        };
        st.weights[at("camera")] = 0.9;
        st.weights[at("zoom")] = 0.8;
        cfg.token_budget = 2;
        auto rec = reconstruct(st, prob, cfg);
        CHECK(rec.text == "camera zoom");
    }
    SUBCASE("one-hot vector with budget one has fidelity one") {
        EmbeddingState st;
        st.weights.assign(prob.vocab.size(), 0.0);
        st.weights[3] = 1.0;
        cfg.token_budget = 1;
        auto rec = reconstruct(st, prob, cfg);
        CHECK(rec.text == prob.vocab[3]);
        CHECK(rec.fidelity == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("uniform mass over four tokens at budget two") {
        REQUIRE(prob.vocab.size() >= 4);
        EmbeddingState st;
        st.weights.assign(prob.vocab.size(), 0.0);
        for (int i = 0; i < 4; ++i) st.weights[i] = 0.5;
        cfg.token_budget = 2;
        auto rec = reconstruct(st, prob, cfg);
        CHECK(rec.fidelity == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        // ties resolved by vocabulary order
        CHECK(rec.text == prob.vocab[0] + " " + prob.vocab[1]);
    }
    SUBCASE("idempotent on indicator vectors") {
        EmbeddingState st;
        st.weights.assign(prob.vocab.size(), 0.0);
        st.weights[0] = 1.0;
        st.weights[2] = 1.0;
        cfg.token_budget = 2;
        auto first = reconstruct(st, prob, cfg);
        CHECK(first.fidelity == doctest::Approx(1.0).epsilon(1e-12));
        auto again = reconstruct(st, prob, cfg);
        CHECK(first.text == again.text);
    }
    SUBCASE("budget beyond the vocabulary is an error") {
        EmbeddingState st;
        st.weights.assign(prob.vocab.size(), 0.0);
        cfg.token_budget = prob.vocab.size() + 1;
        CHECK_THROWS_AS(reconstruct(st, prob, cfg), ShadowError);
        cfg.token_budget = 0;
        CHECK_THROWS_AS(reconstruct(st, prob, cfg), ShadowError);
    }
}

TEST_CASE("theorem iteration bound") {
    TheoremInputs t;
    t.smoothness_L = 1.0;
    t.beta = 1.0;
    t.lambda = 0.3;
    t.k0 = 10;
    t.p_target = 0.8;
    t.p0 = std::exp(-3.0);
    CHECK(theorem1_iterations(t) == 12);

    SUBCASE("log term vanishes when p_target equals p0") {
        t.p0 = t.p_target = 0.5;
        CHECK(theorem1_iterations(t) ==
              static_cast<std::size_t>(std::ceil(2.0 * 0.3 * 10.0)));
    }
    SUBCASE("no barrier at all means zero iterations") {
        t.lambda = 0.0;
        t.p0 = t.p_target = 0.5;
        CHECK(theorem1_iterations(t) == 0);
    }
    SUBCASE("monotonicity in the inputs") {
        TheoremInputs base = t;
        base.p0 = 0.05;
        auto iters = [](TheoremInputs in) { return theorem1_iterations(in); };
        TheoremInputs higher = base;
        higher.k0 = base.k0 + 5;
        CHECK(iters(higher) >= iters(base));
        higher = base;
        higher.lambda = base.lambda + 0.2;
        CHECK(iters(higher) >= iters(base));
        higher = base;
        higher.p_target = 0.95;
        CHECK(iters(higher) >= iters(base));
        TheoremInputs lower = base;
        lower.p0 = 0.2;
        CHECK(iters(lower) <= iters(base));
        lower = base;
        lower.beta = 2.0;
        CHECK(iters(lower) <= iters(base));
    }
    SUBCASE("invalid inputs throw") {
        TheoremInputs bad = t;
        bad.beta = 0.0;
        CHECK_THROWS_AS(theorem1_iterations(bad), ShadowError);
        bad = t;
        bad.p0 = 0.9;  // above p_target
        CHECK_THROWS_AS(theorem1_iterations(bad), ShadowError);
    }
}

TEST_CASE("mismatch floor") {
    TheoremInputs t;
    t.p_target = 0.9;
    t.delta = 0.0;
    auto mb = mismatch_floor(t);
    CHECK(mb.floor == doctest::Approx(0.9));
    CHECK(mb.gap_bound == doctest::Approx(0.0));

    t.delta = 0.1;
    mb = mismatch_floor(t);
    CHECK(mb.gap_bound <= 0.08565);
    CHECK(mb.gap_bound == doctest::Approx(0.9 * (1.0 - std::exp(-0.1))).epsilon(1e-12));

    t.delta = 50.0;
    CHECK(mismatch_floor(t).floor < 1e-20);
}

TEST_CASE("verify_convergence") {
    // Ten items, no query overlap anywhere, target last: the k0 = 10 instance.
    std::vector<std::string> texts(10, "plain filler words");
    auto set = make_set("camera zoom lens tripod", texts);
    auto p = cosine_engine(0.3);
    auto prob = make_problem(set, p);
    double L = analytic_smoothness_bound(prob);
    CHECK(L == doctest::Approx(0.25).epsilon(1e-12));

    TheoremInputs t;
    t.smoothness_L = L;
    t.beta = 0.2;  // gradient floor while P < p_target = 1 - p_target
    t.lambda = 0.3;
    t.k0 = 10;
    t.p_target = 0.8;
    t.p0 = std::exp(-3.0);

    ShadowConfig cfg;

    SUBCASE("default instance meets the bound") {
        t.delta = 0.0;
        auto report = verify_convergence(set, p, cfg, t);
        CHECK(report.converged);
        CHECK(report.achieved_probability >= 0.8);
        CHECK(report.iterations_run <= report.iteration_bound);
        CHECK(report.mismatch_ok);
    }
    SUBCASE("perturbed evaluation stays above the floor") {
        t.delta = 0.05;
        auto report = verify_convergence(set, p, cfg, t);
        CHECK(report.converged);
        CHECK(report.perturbed_probability >= 0.8 * std::exp(-0.05));
        CHECK(report.measured_gap <= report.gap_bound + 0.01);
        CHECK(report.mismatch_ok);
    }
    SUBCASE("degenerate target passes with zero iterations") {
        ShadowConfig icfg;
        double p_init = relaxed_top1_probability(prob, initial_state(prob, icfg));
        TheoremInputs degenerate = t;
        degenerate.p_target = p_init;
        degenerate.p0 = p_init;
        auto report = verify_convergence(set, p, cfg, degenerate);
        CHECK(report.converged);
        CHECK(report.iterations_run == 0);
    }
    SUBCASE("keyword scorer is rejected") {
        EngineParams kw;
        kw.scorer.kind = ScorerKind::KeywordOverlap;
        CHECK_THROWS_AS(verify_convergence(set, kw, cfg, t), ShadowError);
    }
}

TEST_CASE("power-iteration smoothness estimate stays within the analytic bound") {
    auto set = make_set("camera zoom", std::vector<std::string>(5, "plain"));
    auto p = cosine_engine(0.3);
    auto prob = make_problem(set, p);
    ShadowConfig cfg;
    auto st = initial_state(prob, cfg);
    SplitMix64 rng(3);
    double est = estimate_smoothness(prob, st, 12, rng);
    CHECK(est > 0.0);
    CHECK(est <= analytic_smoothness_bound(prob) + 1e-6);
}
