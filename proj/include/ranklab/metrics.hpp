#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace ranklab {

// Fraction of observed target ranks that land within the top k.
double psr_at_k(std::span<const std::size_t> ranks, std::size_t k);

// Additive-smoothed n-gram language model over the shared tokenizer. Contexts
// of every length up to order-1 are trained so the first tokens of a text are
// scored by the shorter contexts. Unknown events get the smoothing floor
// s / (context_total + s * vocab_size).
struct NgramModel {
    std::size_t order = 2;  // 1..3
    double smoothing = 0.1;
    std::size_t vocab_size = 0;
    // context key (tokens joined by '\x1f', empty for unigrams) -> counts
    std::vector<std::unordered_map<std::string, std::unordered_map<std::string, double>>>
        counts;  // one table per context length
    std::vector<std::unordered_map<std::string, double>> context_totals;

    double token_log_probability(std::span<const std::string> context,
                                 const std::string& token) const;
};

NgramModel train_ngram(std::span<const std::string> corpus, std::size_t order,
                       double smoothing);

// Constructed (not trained) uniform model: every token gets 1 / vocab_size.
NgramModel uniform_ngram(std::size_t vocab_size, double smoothing);

// exp(-mean log probability); requires at least one token.
double perplexity(std::string_view text, const NgramModel& model);

struct TrialRecord {
    std::string category;
    std::string model;
    std::string method;
    std::size_t set_index = 0;
    std::size_t trial_index = 0;
    std::size_t observed_rank = 1;  // 1-based
    double ppl = 0.0;               // perplexity of the scored content
};

struct SummaryRow {
    std::string category;
    std::string model;
    std::string method;
    double top5 = 0.0;
    double top3 = 0.0;
    double top1 = 0.0;
    double mean_ppl = 0.0;
    std::size_t trials = 0;
};

// Groups trials by (category, model, method) and computes PSR@{5,3,1} and the
// mean perplexity. Rows come back sorted by the group key.
std::vector<SummaryRow> summarize(std::span<const TrialRecord> trials);

std::string summary_csv(std::span<const SummaryRow> rows);
nlohmann::ordered_json summary_json(std::span<const SummaryRow> rows);

}  // namespace ranklab
