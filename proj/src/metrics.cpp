#include "ranklab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "ranklab/text.hpp"

namespace ranklab {

double psr_at_k(std::span<const std::size_t> ranks, std::size_t k) {
    if (ranks.empty()) throw std::invalid_argument("psr_at_k needs ranks");
    std::size_t hits = 0;
    for (std::size_t r : ranks) {
        if (r < 1) throw std::invalid_argument("ranks are 1-based");
        if (r <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

namespace {

constexpr char kContextSep = '\x1f';

std::string context_key(std::span<const std::string> tokens, std::size_t end,
                        std::size_t len) {
    std::string key;
    for (std::size_t i = end - len; i < end; ++i) {
        if (!key.empty()) key += kContextSep;
        key += tokens[i];
    }
    return key;
}

}  // namespace

double NgramModel::token_log_probability(std::span<const std::string> context,
                                         const std::string& token) const {
    std::size_t len = std::min(context.size(), order - 1);
    std::string key;
    for (std::size_t i = context.size() - len; i < context.size(); ++i) {
        if (!key.empty()) key += kContextSep;
        key += context[i];
    }
    double count = 0.0, total = 0.0;
    if (len < counts.size()) {
        auto ctx_it = counts[len].find(key);
        if (ctx_it != counts[len].end()) {
            auto tok_it = ctx_it->second.find(token);
            if (tok_it != ctx_it->second.end()) count = tok_it->second;
        }
        auto tot_it = context_totals[len].find(key);
        if (tot_it != context_totals[len].end()) total = tot_it->second;
    }
    double v = static_cast<double>(vocab_size);
    return std::log((count + smoothing) / (total + smoothing * v));
}

NgramModel train_ngram(std::span<const std::string> corpus, std::size_t order,
                       double smoothing) {
    if (order < 1 || order > 3) throw std::invalid_argument("order must be 1..3");
    if (smoothing <= 0.0) throw std::invalid_argument("smoothing must be positive");
    NgramModel model;
    model.order = order;
    model.smoothing = smoothing;
    model.counts.resize(order);
    model.context_totals.resize(order);

    std::unordered_map<std::string, bool> vocab;
    bool any_token = false;
    for (const auto& text : corpus) {
        auto tokens = tokenize(text);
        if (!tokens.empty()) any_token = true;
        for (const auto& tok : tokens) vocab[tok] = true;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            std::size_t max_len = std::min(i, order - 1);
            for (std::size_t len = 0; len <= max_len; ++len) {
                std::string key = context_key(tokens, i, len);
                model.counts[len][key][tokens[i]] += 1.0;
                model.context_totals[len][key] += 1.0;
            }
        }
    }
    if (!any_token) throw std::invalid_argument("training corpus has no tokens");
    model.vocab_size = vocab.size();
    return model;
}

NgramModel uniform_ngram(std::size_t vocab_size, double smoothing) {
    if (vocab_size == 0) throw std::invalid_argument("vocab_size must be positive");
    if (smoothing <= 0.0) throw std::invalid_argument("smoothing must be positive");
    NgramModel model;
    model.order = 1;
    model.smoothing = smoothing;
    model.vocab_size = vocab_size;
    model.counts.resize(1);
    model.context_totals.resize(1);
    return model;
}

double perplexity(std::string_view text, const NgramModel& model) {
    auto tokens = tokenize(text);
    if (tokens.empty()) {
        throw std::invalid_argument("perplexity needs at least one token");
    }
    double log_sum = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::span<const std::string> context(tokens.data(), i);
        log_sum += model.token_log_probability(context, tokens[i]);
    }
    return std::exp(-log_sum / static_cast<double>(tokens.size()));
}

std::vector<SummaryRow> summarize(std::span<const TrialRecord> trials) {
    std::map<std::tuple<std::string, std::string, std::string>,
             std::vector<const TrialRecord*>>
        groups;
    for (const auto& t : trials) {
        groups[{t.category, t.model, t.method}].push_back(&t);
    }
    std::vector<SummaryRow> rows;
    rows.reserve(groups.size());
    for (const auto& [key, records] : groups) {
        SummaryRow row;
        std::tie(row.category, row.model, row.method) = key;
        std::vector<std::size_t> ranks;
        ranks.reserve(records.size());
        double ppl_sum = 0.0;
        for (const TrialRecord* r : records) {
            ranks.push_back(r->observed_rank);
            ppl_sum += r->ppl;
        }
        row.top5 = psr_at_k(ranks, 5);
        row.top3 = psr_at_k(ranks, 3);
        row.top1 = psr_at_k(ranks, 1);
        row.mean_ppl = ppl_sum / static_cast<double>(records.size());
        row.trials = records.size();
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string summary_csv(std::span<const SummaryRow> rows) {
    std::string out = "category,model,method,top5,top3,top1,mean_ppl\n";
    for (const auto& row : rows) {
        out += csv_escape(row.category) + ',' + csv_escape(row.model) + ',' +
               csv_escape(row.method) + ',' + fixed(row.top5, 6) + ',' +
               fixed(row.top3, 6) + ',' + fixed(row.top1, 6) + ',' +
               fixed(row.mean_ppl, 4) + '\n';
    }
    return out;
}

nlohmann::ordered_json summary_json(std::span<const SummaryRow> rows) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        out.push_back({{"category", row.category},
                       {"model", row.model},
                       {"method", row.method},
                       {"top5", row.top5},
                       {"top3", row.top3},
                       {"top1", row.top1},
                       {"mean_ppl", row.mean_ppl},
                       {"trials", row.trials}});
    }
    return out;
}

}  // namespace ranklab
