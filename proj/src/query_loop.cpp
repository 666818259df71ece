#include "ranklab/query_loop.hpp"

#include <algorithm>
#include <cmath>

#include "ranklab/prompts.hpp"

namespace ranklab {

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::String: return "string";
        case Strategy::Reasoning: return "reasoning";
        case Strategy::Review: return "review";
    }
    return "unknown";
}

Strategy strategy_from_name(std::string_view name) {
    if (name == "string") return Strategy::String;
    if (name == "reasoning") return Strategy::Reasoning;
    if (name == "review") return Strategy::Review;
    throw std::invalid_argument("unknown strategy: " + std::string(name));
}

std::vector<std::size_t> build_target_ranking(const CandidateSet& c) {
    if (c.items.empty()) throw EngineError("empty candidate set");
    std::vector<std::size_t> order;
    order.reserve(c.items.size());
    order.push_back(c.target_index);
    for (std::size_t i = 0; i < c.items.size(); ++i) {
        if (i != c.target_index) order.push_back(i);
    }
    return order;
}

double similarity(std::span<const std::size_t> ranking,
                  std::span<const std::size_t> target_ranking) {
    std::size_t n = ranking.size();
    if (n != target_ranking.size()) {
        throw std::invalid_argument("rankings have different lengths");
    }
    if (n == 0) throw std::invalid_argument("empty rankings");
    std::vector<std::size_t> pos_a(n, n), pos_b(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        if (ranking[r] >= n || target_ranking[r] >= n) {
            throw std::invalid_argument("ranking entries out of range");
        }
        if (pos_a[ranking[r]] != n || pos_b[target_ranking[r]] != n) {
            throw std::invalid_argument("rankings must be permutations");
        }
        pos_a[ranking[r]] = r;
        pos_b[target_ranking[r]] = r;
    }
    if (n == 1) return 1.0;
    std::size_t discordant = 0;
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = x + 1; y < n; ++y) {
            bool a_before = pos_a[x] < pos_a[y];
            bool b_before = pos_b[x] < pos_b[y];
            if (a_before != b_before) ++discordant;
        }
    }
    double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    return 1.0 - static_cast<double>(discordant) / pairs;
}

namespace {

std::string product_list_json(const CandidateSet& c) {
    njson items = njson::array();
    for (const auto& item : c.items) items.push_back(to_json(item));
    return items.dump();
}

std::string names_in_order(const CandidateSet& c,
                           std::span<const std::size_t> order) {
    njson names = njson::array();
    for (std::size_t i : order) names.push_back(c.items[i].name);
    return names.dump();
}

TextBackend& require_backend(const LoopConfig& cfg) {
    if (cfg.backend == nullptr) {
        throw BackendError(BackendError::Kind::Config,
                           "loop strategy needs a text backend");
    }
    return *cfg.backend;
}

void record_tokens(TranscriptRow* tokens, const TextResponse& resp) {
    if (tokens == nullptr) return;
    tokens->prompt_tokens = resp.prompt_tokens;
    tokens->completion_tokens = resp.completion_tokens;
}

}  // namespace

Draft generate_initial(const CandidateSet& c, Strategy strategy,
                       const LoopConfig& cfg, TranscriptRow* tokens) {
    if (strategy == Strategy::String) {
        return {cfg.string_content, Strategy::String, 0};
    }
    std::string_view tmpl = strategy == Strategy::Reasoning
                                ? kGeneratorReasoningTemplate
                                : kGeneratorReviewTemplate;
    TextRequest req;
    req.system = std::string(kSystemPrompt);
    req.user = fill_template(
        tmpl, {{"user query", c.query.text},
               {"product list in JSON format", product_list_json(c)},
               {"target item information", to_json(c.items[c.target_index]).dump()}});
    TextResponse resp = require_backend(cfg).complete(req);
    record_tokens(tokens, resp);
    return {resp.text, strategy, 0};
}

ProductRecord append_content(const ProductRecord& item, const Draft& d) {
    return append_description(item, d.text);
}

Draft refine(const LoopState& state, const CandidateSet& c,
             std::span<const std::size_t> target_ranking, const LoopConfig& cfg,
             TranscriptRow* tokens) {
    if (state.last_similarity >= cfg.tau) {
        throw std::logic_error("refine called after the threshold was met");
    }
    TextRequest req;
    req.system = std::string(kSystemPrompt);
    req.user = fill_template(
        kOptimizerTemplate,
        {{"desired ranking", names_in_order(c, target_ranking)},
         {"observed ranking", names_in_order(c, state.last_ranking.order)},
         {"current draft", state.draft.text}});
    TextResponse resp = require_backend(cfg).complete(req);
    record_tokens(tokens, resp);
    return {resp.text, state.draft.strategy, state.draft.version + 1};
}

LoopState run_loop(const CandidateSet& c, Strategy strategy, const LoopConfig& cfg,
                   const EngineParams& engine_params) {
    if (cfg.tau < 0.0 || cfg.tau > 1.0) {
        throw std::invalid_argument("tau must be in [0, 1]");
    }
    if (cfg.max_rounds < 1) throw std::invalid_argument("max_rounds must be >= 1");

    std::vector<std::size_t> target_ranking = build_target_ranking(c);
    LoopState state;
    TranscriptRow pending{};  // token usage of the call producing this round's draft
    try {
        state.draft = generate_initial(c, strategy, cfg, &pending);
    } catch (const BackendError& e) {
        throw LoopError(std::string("backend failure in generator: ") + e.what(),
                        state);
    }

    const ProductRecord original_target = c.items[c.target_index];
    for (std::size_t round = 1; round <= cfg.max_rounds; ++round) {
        CandidateSet modified = c;
        modified.items[c.target_index] = append_content(original_target, state.draft);
        state.last_ranking = rank_argmax(modified, engine_params);
        state.last_similarity = similarity(state.last_ranking.order, target_ranking);
        state.round = round;
        pending.round = round;
        pending.similarity = state.last_similarity;
        state.transcript.push_back(pending);
        pending = TranscriptRow{};

        if (state.last_similarity >= cfg.tau) {
            state.succeeded = true;
            break;
        }
        // The string strategy has no refinement channel; one evaluation is all
        // the loop can do with a fixed draft.
        if (strategy == Strategy::String || round == cfg.max_rounds) break;
        try {
            state.draft = refine(state, c, target_ranking, cfg, &pending);
        } catch (const BackendError& e) {
            throw LoopError(std::string("backend failure in optimizer: ") + e.what(),
                            state);
        }
    }
    return state;
}

CostReport cost_report(const LoopState& state, double price_per_1k_tokens) {
    if (state.transcript.empty()) {
        throw std::invalid_argument("cost_report needs a nonempty transcript");
    }
    CostReport out;
    out.loops = static_cast<double>(state.transcript.size());
    double total = 0.0;
    for (const auto& row : state.transcript) {
        total += static_cast<double>(row.prompt_tokens + row.completion_tokens);
    }
    out.total_tokens = total;
    out.tokens_per_loop = total / out.loops;
    out.cost = total / 1000.0 * price_per_1k_tokens;
    return out;
}

CostReport aggregate_cost(std::span<const LoopState> states,
                          double price_per_1k_tokens) {
    if (states.empty()) {
        throw std::invalid_argument("aggregate_cost needs at least one loop");
    }
    double mean_loops = 0.0, mean_per_loop = 0.0;
    for (const auto& s : states) {
        CostReport r = cost_report(s, price_per_1k_tokens);
        mean_loops += r.loops;
        mean_per_loop += r.tokens_per_loop;
    }
    mean_loops /= static_cast<double>(states.size());
    mean_per_loop /= static_cast<double>(states.size());
    CostReport out;
    out.loops = mean_loops;
    out.tokens_per_loop = mean_per_loop;
    out.total_tokens = mean_loops * mean_per_loop;
    out.cost = out.total_tokens / 1000.0 * price_per_1k_tokens;
    return out;
}

}  // namespace ranklab
