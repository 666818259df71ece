#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ranklab/corpus.hpp"
#include "ranklab/engine.hpp"
#include "ranklab/rng.hpp"

namespace ranklab {

// Gradient-based content optimization against the engine's differentiable
// top-1 log probability. The continuous relaxation lives in bag-of-words
// space over a vocabulary derived from the candidate set plus the query. The
// relaxed content score of the target is the projection of its weight vector
// onto the unit query direction: unbounded, globally smooth, and with a
// gradient norm bounded below while the target probability is below any
// threshold < 1 — exactly the regularity the convergence bound needs.
// A zero weight vector scores 0 (no content, no relevance).

struct ShadowConfig {
    std::optional<double> eta;  // step size; unset -> 1/L with the analytic bound
    double sigma = 0.05;        // Gaussian exploration noise scale
    std::size_t max_iters = 2000;
    std::size_t token_budget = 20;  // tokens kept by discrete reconstruction
    std::string init = "!!!!!!!!!!!!!!!!!!!!";
    std::optional<double> stop_probability;  // early stop once exact P >= this
};

struct EmbeddingState {
    std::vector<double> weights;  // one entry per vocabulary token
    std::size_t iteration = 0;
};

// Precomputed instance: everything about (candidate set, engine params) the
// inner loop needs.
struct ShadowProblem {
    std::vector<std::string> vocab;        // sorted unique tokens
    std::vector<double> query_direction;   // unit vector over vocab (may be 0)
    std::vector<double> fixed_utilities;   // non-target items, position applied
    double target_penalty = 0.0;           // lambda * target position (1-based)
    std::size_t target_index = 0;
    bool constant_score = false;
    double constant_value = 0.0;
};

struct ShadowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requires a cosine-bag-of-words or constant scorer; keyword overlap has no
// differentiable relaxation.
ShadowProblem make_problem(const CandidateSet& c, const EngineParams& p);

EmbeddingState initial_state(const ShadowProblem& problem, const ShadowConfig& cfg);

double relaxed_score(const ShadowProblem& problem, const std::vector<double>& x);
double relaxed_top1_probability(const ShadowProblem& problem,
                                const EmbeddingState& state);
// Target content score shifted by -delta at evaluation time; models a target
// engine whose content scores disagree with the optimized one by delta.
double perturbed_top1_probability(const ShadowProblem& problem,
                                  const EmbeddingState& state, double delta);

double loss(const ShadowProblem& problem, const EmbeddingState& state);
std::vector<double> grad(const ShadowProblem& problem, const EmbeddingState& state);

// Spec-shaped conveniences; rebuild the problem from (c, p) and validate the
// state dimension against it.
double loss(const EmbeddingState& state, const CandidateSet& c, const EngineParams& p);
std::vector<double> grad(const EmbeddingState& state, const CandidateSet& c,
                         const EngineParams& p);

EmbeddingState step(const ShadowProblem& problem, const EmbeddingState& state,
                    const ShadowConfig& cfg, SplitMix64& rng);
EmbeddingState step(const EmbeddingState& state, const CandidateSet& c,
                    const EngineParams& p, const ShadowConfig& cfg, SplitMix64& rng);

struct OptimizeResult {
    EmbeddingState state;
    std::vector<double> trace;  // loss after each executed iteration
};

OptimizeResult optimize(const CandidateSet& c, const EngineParams& p,
                        const ShadowConfig& cfg, SplitMix64& rng);

struct Reconstruction {
    std::string text;    // tokens joined by spaces, largest mass first
    double fidelity;     // cosine between the weights and the kept indicator
};

Reconstruction reconstruct(const EmbeddingState& state, const ShadowProblem& problem,
                           const ShadowConfig& cfg);

// Global smoothness bound of the loss for this instance: ||a||^2 / 4 where a
// is the query direction (softmax curvature never exceeds 1/4).
double analytic_smoothness_bound(const ShadowProblem& problem);

// Power iteration on central-difference Hessian-vector products; an empirical
// cross-check of the analytic bound.
double estimate_smoothness(const ShadowProblem& problem, const EmbeddingState& at,
                           std::size_t iterations, SplitMix64& rng);

struct TheoremInputs {
    double smoothness_L = 1.0;  // L
    double beta = 1.0;          // gradient norm floor while P < p_target
    double lambda = 0.3;
    std::size_t k0 = 10;        // initial retrieval position of the target
    double p_target = 0.8;
    double p0 = 0.05;           // baseline success probability
    double delta = 0.0;         // content-score mismatch bound
};

// ceil((2L / beta^2) * (lambda*k0 + ln(p_target / p0))).
std::size_t theorem1_iterations(const TheoremInputs& t);

struct MismatchBound {
    double floor;      // p_target * exp(-delta)
    double gap_bound;  // p_target * (1 - exp(-delta))
};
MismatchBound mismatch_floor(const TheoremInputs& t);

struct ConvergenceReport {
    std::size_t iteration_bound = 0;
    std::size_t iterations_run = 0;
    double eta = 0.0;
    double initial_probability = 0.0;
    double achieved_probability = 0.0;
    bool converged = false;
    double perturbed_probability = 0.0;
    double probability_floor = 0.0;
    double gap_bound = 0.0;
    double measured_gap = 0.0;
    bool mismatch_ok = false;
};

// Runs noiseless gradient descent for at most the theorem budget and checks
// both the plain convergence claim and the mismatch floor.
ConvergenceReport verify_convergence(const CandidateSet& c, const EngineParams& p,
                                     const ShadowConfig& cfg, const TheoremInputs& t);

}  // namespace ranklab
