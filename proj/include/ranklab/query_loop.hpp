#pragma once

#include <span>
#include <string>
#include <vector>

#include "ranklab/backend.hpp"
#include "ranklab/corpus.hpp"
#include "ranklab/engine.hpp"

namespace ranklab {

// Black-box feedback loop: generate a draft, append it to the target item,
// query the engine, score rank agreement against the target ranking, refine
// until the similarity threshold is met or the budget runs out.

enum class Strategy { String, Reasoning, Review };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name);

struct Draft {
    std::string text;
    Strategy strategy = Strategy::Reasoning;
    std::size_t version = 0;
};

struct LoopConfig {
    double tau = 0.7;           // rank-similarity threshold in [0, 1]
    std::size_t max_rounds = 10;
    TextBackend* backend = nullptr;  // required for reasoning/review
    // Content used by the string strategy: a reconstruction from the
    // embedding optimizer, or this literal when none is supplied.
    std::string string_content = "!!!!!!!!!!!!!!!!!!!!";
};

struct TranscriptRow {
    std::size_t round = 0;
    double similarity = 0.0;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct LoopState {
    std::size_t round = 0;
    Draft draft;
    RankedList last_ranking;
    double last_similarity = 0.0;
    std::vector<TranscriptRow> transcript;
    bool succeeded = false;
};

struct LoopError : std::runtime_error {
    LoopError(const std::string& what, LoopState partial_state)
        : std::runtime_error(what), partial(std::move(partial_state)) {}
    LoopState partial;
};

// Target item first, everyone else in retrieval order.
std::vector<std::size_t> build_target_ranking(const CandidateSet& c);

// Normalized Kendall similarity: 1 - discordant_pairs / (n(n-1)/2).
double similarity(std::span<const std::size_t> ranking,
                  std::span<const std::size_t> target_ranking);

Draft generate_initial(const CandidateSet& c, Strategy strategy,
                       const LoopConfig& cfg, TranscriptRow* tokens = nullptr);

// Appends the draft to the target item's long description; the input record
// is never mutated.
ProductRecord append_content(const ProductRecord& item, const Draft& d);

// Precondition: the loop has not met the threshold yet.
Draft refine(const LoopState& state, const CandidateSet& c,
             std::span<const std::size_t> target_ranking, const LoopConfig& cfg,
             TranscriptRow* tokens = nullptr);

// Runs the full loop against the engine in argmax mode; sampling noise stays
// out of the stopping rule.
LoopState run_loop(const CandidateSet& c, Strategy strategy, const LoopConfig& cfg,
                   const EngineParams& engine_params);

struct CostReport {
    double loops = 0.0;
    double tokens_per_loop = 0.0;
    double total_tokens = 0.0;
    double cost = 0.0;
};

CostReport cost_report(const LoopState& state, double price_per_1k_tokens);

// Fleet aggregation: mean loops, mean per-loop tokens, and the product of the
// two as the per-item total.
CostReport aggregate_cost(std::span<const LoopState> states,
                          double price_per_1k_tokens);

}  // namespace ranklab
