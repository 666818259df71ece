#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ranklab/corpus.hpp"
#include "ranklab/rng.hpp"

namespace ranklab {

// Simulated synthesizing LLM: items get utility u_k = f(text, query) - lambda*k
// for 1-based retrieval position k. The top-1 marginal is the softmax of the
// utilities; the full ranking law is Plackett-Luce (sequential softmax over the
// remaining items), the minimal model consistent with that marginal.

enum class ScorerKind { KeywordOverlap, CosineBagOfWords, Constant };

struct ContentScorer {
    ScorerKind kind = ScorerKind::KeywordOverlap;
    double constant_value = 0.0;  // used by the Constant kind
};

struct EngineParams {
    double lambda = 0.3;  // position-bias rate, >= 0
    ContentScorer scorer;
    std::uint64_t seed = 0;  // default sampling stream
};

enum class RankMode { Argmax, Sampled };

struct RankedList {
    std::vector<std::size_t> order;  // candidate indices, best first
    std::vector<double> utilities;   // per-item utility at retrieval position
    RankMode mode = RankMode::Argmax;
};

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double content_score(std::string_view text, const Query& query,
                     const ContentScorer& scorer);

// u_k = content_score(T(i_k), q) - lambda * k, k 1-based retrieval position.
std::vector<double> utilities(const CandidateSet& c, const EngineParams& p);

// Softmax of the utilities; the probability each item is ranked first.
std::vector<double> top1_distribution(const CandidateSet& c, const EngineParams& p);
std::vector<double> softmax(std::span<const double> utilities);

// Indices sorted by utility descending; ties go to the lower retrieval
// position, mirroring how synthesized outputs track retrieval order.
std::vector<std::size_t> order_by_utility(std::span<const double> utilities);
RankedList rank_argmax(const CandidateSet& c, const EngineParams& p);

// Plackett-Luce sample: repeatedly draw the next rank proportionally to
// exp(utility) among the remaining items.
RankedList rank_sample(const CandidateSet& c, const EngineParams& p, SplitMix64& rng);

// One-shot convenience using the engine's own seed.
RankedList rank_sample(const CandidateSet& c, const EngineParams& p);

// Exact probability of one full ranking under the Plackett-Luce law.
double ranking_probability(const CandidateSet& c, const EngineParams& p,
                           std::span<const std::size_t> order);

// Exact P(target within top k) by enumerating all permutations. Guarded to
// small sets; this is the oracle the sampled paths are checked against.
inline constexpr std::size_t kBruteForceLimit = 6;
double psr_bruteforce(const CandidateSet& c, const EngineParams& p, std::size_t k);

// Exact marginal P(item i lands at rank r) for every item and rank, by the
// same enumeration. marginals[i][r] with r 0-based.
std::vector<std::vector<double>> rank_marginals_bruteforce(const CandidateSet& c,
                                                           const EngineParams& p);

// Returns a copy of the set with per-position content appended, used by the
// insertion-order experiments. Positions are 0-based candidate indices.
CandidateSet permute_insertion(
    const CandidateSet& c,
    const std::vector<std::pair<std::size_t, std::string>>& assignment);

}  // namespace ranklab
