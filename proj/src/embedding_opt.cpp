#include "ranklab/embedding_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "ranklab/text.hpp"

namespace ranklab {

namespace {

void check_dimension(const ShadowProblem& problem, const EmbeddingState& state) {
    if (state.weights.size() != problem.vocab.size()) {
        throw ShadowError("state dimension does not match vocabulary size");
    }
    for (double w : state.weights) {
        if (!std::isfinite(w)) throw ShadowError("non-finite embedding entry");
    }
}

// log(sum(exp(fixed)) + exp(target_utility)) computed stably.
double logsumexp_with(const std::vector<double>& fixed, double target_utility) {
    double m = target_utility;
    for (double u : fixed) m = std::max(m, u);
    double total = std::exp(target_utility - m);
    for (double u : fixed) total += std::exp(u - m);
    return m + std::log(total);
}

double target_utility(const ShadowProblem& problem, const std::vector<double>& x) {
    return relaxed_score(problem, x) - problem.target_penalty;
}

double probability_from_utility(const ShadowProblem& problem, double u_target) {
    return std::exp(u_target - logsumexp_with(problem.fixed_utilities, u_target));
}

double resolve_eta(const ShadowProblem& problem, const ShadowConfig& cfg) {
    if (cfg.eta) {
        if (*cfg.eta <= 0.0) throw ShadowError("eta must be positive");
        return *cfg.eta;
    }
    double bound = analytic_smoothness_bound(problem);
    if (bound <= 0.0) return 1.0;  // constant objective; step size is moot
    return 1.0 / bound;
}

}  // namespace

ShadowProblem make_problem(const CandidateSet& c, const EngineParams& p) {
    if (c.items.empty()) throw ShadowError("empty candidate set");
    if (c.target_index >= c.items.size()) throw ShadowError("target out of range");
    if (p.scorer.kind == ScorerKind::KeywordOverlap) {
        throw ShadowError("keyword-overlap scorer has no differentiable relaxation");
    }
    ShadowProblem prob;
    prob.target_index = c.target_index;
    prob.constant_score = (p.scorer.kind == ScorerKind::Constant);
    prob.constant_value = p.scorer.constant_value;
    prob.target_penalty =
        p.lambda * static_cast<double>(c.target_index + 1);

    std::set<std::string> vocab;
    for (const auto& tok : tokenize(c.query.text)) vocab.insert(tok);
    for (const auto& item : c.items) {
        for (const auto& tok : tokenize(item_text(item))) vocab.insert(tok);
    }
    prob.vocab.assign(vocab.begin(), vocab.end());

    prob.query_direction.assign(prob.vocab.size(), 0.0);
    auto qtf = term_frequencies(c.query.text);
    double norm = 0.0;
    for (std::size_t i = 0; i < prob.vocab.size(); ++i) {
        auto it = qtf.find(prob.vocab[i]);
        if (it != qtf.end()) {
            prob.query_direction[i] = it->second;
            norm += it->second * it->second;
        }
    }
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (auto& v : prob.query_direction) v /= norm;
    }

    for (std::size_t k = 0; k < c.items.size(); ++k) {
        if (k == c.target_index) continue;
        double f = content_score(item_text(c.items[k]), c.query, p.scorer);
        prob.fixed_utilities.push_back(f - p.lambda * static_cast<double>(k + 1));
    }
    return prob;
}

EmbeddingState initial_state(const ShadowProblem& problem, const ShadowConfig& cfg) {
    EmbeddingState state;
    state.weights.assign(problem.vocab.size(), 0.0);
    auto counts = term_frequencies(cfg.init);
    for (std::size_t i = 0; i < problem.vocab.size(); ++i) {
        auto it = counts.find(problem.vocab[i]);
        if (it != counts.end()) state.weights[i] = it->second;
    }
    return state;
}

double relaxed_score(const ShadowProblem& problem, const std::vector<double>& x) {
    if (problem.constant_score) return problem.constant_value;
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i] * problem.query_direction[i];
    }
    return s;
}

double relaxed_top1_probability(const ShadowProblem& problem,
                                const EmbeddingState& state) {
    check_dimension(problem, state);
    return probability_from_utility(problem, target_utility(problem, state.weights));
}

double perturbed_top1_probability(const ShadowProblem& problem,
                                  const EmbeddingState& state, double delta) {
    check_dimension(problem, state);
    double u = target_utility(problem, state.weights) - delta;
    return probability_from_utility(problem, u);
}

double loss(const ShadowProblem& problem, const EmbeddingState& state) {
    check_dimension(problem, state);
    double u = target_utility(problem, state.weights);
    return logsumexp_with(problem.fixed_utilities, u) - u;
}

std::vector<double> grad(const ShadowProblem& problem, const EmbeddingState& state) {
    check_dimension(problem, state);
    std::vector<double> g(state.weights.size(), 0.0);
    if (problem.constant_score) return g;
    double u = target_utility(problem, state.weights);
    double p = probability_from_utility(problem, u);
    double scale = p - 1.0;  // d(loss)/d(u_target)
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = scale * problem.query_direction[i];
    }
    return g;
}

double loss(const EmbeddingState& state, const CandidateSet& c,
            const EngineParams& p) {
    return loss(make_problem(c, p), state);
}

std::vector<double> grad(const EmbeddingState& state, const CandidateSet& c,
                         const EngineParams& p) {
    return grad(make_problem(c, p), state);
}

EmbeddingState step(const ShadowProblem& problem, const EmbeddingState& state,
                    const ShadowConfig& cfg, SplitMix64& rng) {
    if (cfg.sigma < 0.0) throw ShadowError("sigma must be nonnegative");
    double eta = resolve_eta(problem, cfg);
    auto g = grad(problem, state);
    EmbeddingState next;
    next.weights.resize(state.weights.size());
    for (std::size_t i = 0; i < state.weights.size(); ++i) {
        double noise = cfg.sigma > 0.0 ? cfg.sigma * rng.next_gaussian() : 0.0;
        next.weights[i] = state.weights[i] - eta * g[i] + noise;
    }
    next.iteration = state.iteration + 1;
    return next;
}

EmbeddingState step(const EmbeddingState& state, const CandidateSet& c,
                    const EngineParams& p, const ShadowConfig& cfg,
                    SplitMix64& rng) {
    return step(make_problem(c, p), state, cfg, rng);
}

OptimizeResult optimize(const CandidateSet& c, const EngineParams& p,
                        const ShadowConfig& cfg, SplitMix64& rng) {
    ShadowProblem problem = make_problem(c, p);
    OptimizeResult result;
    result.state = initial_state(problem, cfg);
    result.trace.reserve(cfg.max_iters);
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        if (cfg.stop_probability &&
            relaxed_top1_probability(problem, result.state) >= *cfg.stop_probability) {
            break;
        }
        result.state = step(problem, result.state, cfg, rng);
        result.trace.push_back(loss(problem, result.state));
    }
    return result;
}

Reconstruction reconstruct(const EmbeddingState& state, const ShadowProblem& problem,
                           const ShadowConfig& cfg) {
    check_dimension(problem, state);
    if (cfg.token_budget < 1) throw ShadowError("token budget must be >= 1");
    if (cfg.token_budget > problem.vocab.size()) {
        throw ShadowError("token budget exceeds vocabulary size");
    }
    std::vector<std::size_t> idx(problem.vocab.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return state.weights[a] > state.weights[b];
    });

    Reconstruction out;
    double dot = 0.0, norm_x = 0.0;
    for (double w : state.weights) norm_x += w * w;
    for (std::size_t j = 0; j < cfg.token_budget; ++j) {
        if (j > 0) out.text += ' ';
        out.text += problem.vocab[idx[j]];
        dot += state.weights[idx[j]];
    }
    double norm_ind = std::sqrt(static_cast<double>(cfg.token_budget));
    out.fidelity = (norm_x > 0.0 && cfg.token_budget > 0)
                       ? dot / (std::sqrt(norm_x) * norm_ind)
                       : 0.0;
    return out;
}

double analytic_smoothness_bound(const ShadowProblem& problem) {
    if (problem.constant_score) return 0.0;
    double norm_sq = 0.0;
    for (double v : problem.query_direction) norm_sq += v * v;
    return norm_sq / 4.0;
}

double estimate_smoothness(const ShadowProblem& problem, const EmbeddingState& at,
                           std::size_t iterations, SplitMix64& rng) {
    check_dimension(problem, at);
    std::size_t n = at.weights.size();
    if (n == 0) return 0.0;
    std::vector<double> v(n);
    double norm = 0.0;
    for (auto& vi : v) {
        vi = rng.next_gaussian();
        norm += vi * vi;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (auto& vi : v) vi /= norm;

    const double h = 1e-5;
    double rayleigh = 0.0;
    EmbeddingState plus = at, minus = at;
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            plus.weights[i] = at.weights[i] + h * v[i];
            minus.weights[i] = at.weights[i] - h * v[i];
        }
        auto gp = grad(problem, plus);
        auto gm = grad(problem, minus);
        double hv_norm = 0.0;
        std::vector<double> hv(n);
        for (std::size_t i = 0; i < n; ++i) {
            hv[i] = (gp[i] - gm[i]) / (2.0 * h);
            hv_norm += hv[i] * hv[i];
        }
        hv_norm = std::sqrt(hv_norm);
        rayleigh = hv_norm;
        if (hv_norm == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v[i] = hv[i] / hv_norm;
    }
    return rayleigh;
}

std::size_t theorem1_iterations(const TheoremInputs& t) {
    if (t.smoothness_L <= 0.0) throw ShadowError("smoothness bound must be positive");
    if (t.beta <= 0.0) throw ShadowError("gradient floor must be positive");
    if (t.lambda < 0.0) throw ShadowError("lambda must be nonnegative");
    if (!(t.p_target > 0.0 && t.p_target <= 1.0)) {
        throw ShadowError("p_target must be in (0, 1]");
    }
    if (!(t.p0 > 0.0 && t.p0 <= t.p_target)) {
        throw ShadowError("p0 must be in (0, p_target]");
    }
    double value = (2.0 * t.smoothness_L / (t.beta * t.beta)) *
                   (t.lambda * static_cast<double>(t.k0) +
                    std::log(t.p_target / t.p0));
    return static_cast<std::size_t>(std::ceil(value));
}

MismatchBound mismatch_floor(const TheoremInputs& t) {
    if (!(t.p_target > 0.0 && t.p_target <= 1.0)) {
        throw ShadowError("p_target must be in (0, 1]");
    }
    if (t.delta < 0.0) throw ShadowError("delta must be nonnegative");
    double e = std::exp(-t.delta);
    return {t.p_target * e, t.p_target * (1.0 - e)};
}

ConvergenceReport verify_convergence(const CandidateSet& c, const EngineParams& p,
                                     const ShadowConfig& cfg,
                                     const TheoremInputs& t) {
    if (p.scorer.kind != ScorerKind::CosineBagOfWords) {
        throw ShadowError("convergence check needs the cosine scorer");
    }
    ShadowProblem problem = make_problem(c, p);

    ConvergenceReport report;
    report.iteration_bound = theorem1_iterations(t);

    ShadowConfig run_cfg = cfg;
    run_cfg.sigma = 0.0;
    run_cfg.max_iters = report.iteration_bound;
    run_cfg.stop_probability = t.p_target;
    if (!run_cfg.eta) run_cfg.eta = 1.0 / t.smoothness_L;
    report.eta = *run_cfg.eta;

    EmbeddingState init = initial_state(problem, run_cfg);
    report.initial_probability = relaxed_top1_probability(problem, init);

    SplitMix64 rng(0);  // sigma = 0; never consulted
    OptimizeResult res = optimize(c, p, run_cfg, rng);
    report.iterations_run = res.state.iteration;
    report.achieved_probability = relaxed_top1_probability(problem, res.state);
    report.converged = report.achieved_probability >= t.p_target;

    MismatchBound mb = mismatch_floor(t);
    report.probability_floor = mb.floor;
    report.gap_bound = mb.gap_bound;
    report.perturbed_probability =
        perturbed_top1_probability(problem, res.state, t.delta);
    report.measured_gap = t.p_target - report.perturbed_probability;
    report.mismatch_ok = report.perturbed_probability >= mb.floor &&
                         report.measured_gap <= mb.gap_bound + 0.01;
    return report;
}

}  // namespace ranklab
