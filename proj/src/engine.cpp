#include "ranklab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ranklab/text.hpp"

namespace ranklab {

double content_score(std::string_view text, const Query& query,
                     const ContentScorer& scorer) {
    switch (scorer.kind) {
        case ScorerKind::Constant:
            return scorer.constant_value;
        case ScorerKind::KeywordOverlap: {
            auto qtokens = distinct_tokens(query.text);
            if (qtokens.empty()) return 0.0;
            auto words = token_set(text);
            std::size_t hit = 0;
            for (const auto& q : qtokens) hit += words.count(q);
            return static_cast<double>(hit) / static_cast<double>(qtokens.size());
        }
        case ScorerKind::CosineBagOfWords:
            return cosine_similarity(term_frequencies(text),
                                     term_frequencies(query.text));
    }
    return 0.0;
}

std::vector<double> utilities(const CandidateSet& c, const EngineParams& p) {
    if (p.lambda < 0.0) throw EngineError("lambda must be nonnegative");
    std::vector<double> u;
    u.reserve(c.items.size());
    for (std::size_t k = 0; k < c.items.size(); ++k) {
        double f = content_score(item_text(c.items[k]), c.query, p.scorer);
        u.push_back(f - p.lambda * static_cast<double>(k + 1));
    }
    return u;
}

std::vector<double> softmax(std::span<const double> u) {
    if (u.empty()) throw EngineError("softmax over empty utilities");
    double m = *std::max_element(u.begin(), u.end());
    std::vector<double> e(u.size());
    double total = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        e[i] = std::exp(u[i] - m);
        total += e[i];
    }
    for (auto& v : e) v /= total;
    return e;
}

std::vector<double> top1_distribution(const CandidateSet& c, const EngineParams& p) {
    if (c.items.empty()) throw EngineError("empty candidate set");
    return softmax(utilities(c, p));
}

std::vector<std::size_t> order_by_utility(std::span<const double> u) {
    std::vector<std::size_t> idx(u.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
    return idx;
}

RankedList rank_argmax(const CandidateSet& c, const EngineParams& p) {
    if (c.items.empty()) throw EngineError("empty candidate set");
    RankedList out;
    out.utilities = utilities(c, p);
    out.order = order_by_utility(out.utilities);
    out.mode = RankMode::Argmax;
    return out;
}

RankedList rank_sample(const CandidateSet& c, const EngineParams& p,
                       SplitMix64& rng) {
    if (c.items.empty()) throw EngineError("empty candidate set");
    RankedList out;
    out.utilities = utilities(c, p);
    out.mode = RankMode::Sampled;
    std::vector<std::size_t> remaining(c.items.size());
    std::iota(remaining.begin(), remaining.end(), 0);
    while (!remaining.empty()) {
        double m = out.utilities[remaining[0]];
        for (std::size_t i : remaining) m = std::max(m, out.utilities[i]);
        double total = 0.0;
        std::vector<double> w(remaining.size());
        for (std::size_t j = 0; j < remaining.size(); ++j) {
            w[j] = std::exp(out.utilities[remaining[j]] - m);
            total += w[j];
        }
        double r = rng.next_double() * total;
        std::size_t chosen = remaining.size() - 1;
        double acc = 0.0;
        for (std::size_t j = 0; j < remaining.size(); ++j) {
            acc += w[j];
            if (r < acc) {
                chosen = j;
                break;
            }
        }
        out.order.push_back(remaining[chosen]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(chosen));
    }
    return out;
}

RankedList rank_sample(const CandidateSet& c, const EngineParams& p) {
    SplitMix64 rng(p.seed);
    return rank_sample(c, p, rng);
}

namespace {

void check_permutation(std::size_t n, std::span<const std::size_t> order) {
    if (order.size() != n) throw EngineError("order length mismatch");
    std::vector<bool> seen(n, false);
    for (std::size_t i : order) {
        if (i >= n || seen[i]) throw EngineError("order is not a permutation");
        seen[i] = true;
    }
}

double sequential_probability(std::span<const double> u,
                              std::span<const std::size_t> order) {
    std::vector<char> taken(u.size(), 0);
    double logp = 0.0;
    for (std::size_t step = 0; step < order.size(); ++step) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!taken[i]) m = std::max(m, u[i]);
        }
        double total = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!taken[i]) total += std::exp(u[i] - m);
        }
        logp += (u[order[step]] - m) - std::log(total);
        taken[order[step]] = 1;
    }
    return std::exp(logp);
}

}  // namespace

double ranking_probability(const CandidateSet& c, const EngineParams& p,
                           std::span<const std::size_t> order) {
    if (c.items.empty()) throw EngineError("empty candidate set");
    check_permutation(c.items.size(), order);
    auto u = utilities(c, p);
    return sequential_probability(u, order);
}

double psr_bruteforce(const CandidateSet& c, const EngineParams& p, std::size_t k) {
    std::size_t n = c.items.size();
    if (n == 0) throw EngineError("empty candidate set");
    if (n > kBruteForceLimit) {
        throw EngineError("psr_bruteforce limited to " +
                          std::to_string(kBruteForceLimit) + " items");
    }
    auto u = utilities(c, p);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    do {
        for (std::size_t r = 0; r < std::min(k, n); ++r) {
            if (perm[r] == c.target_index) {
                total += sequential_probability(u, perm);
                break;
            }
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

std::vector<std::vector<double>> rank_marginals_bruteforce(const CandidateSet& c,
                                                           const EngineParams& p) {
    std::size_t n = c.items.size();
    if (n == 0) throw EngineError("empty candidate set");
    if (n > kBruteForceLimit) {
        throw EngineError("rank_marginals_bruteforce limited to " +
                          std::to_string(kBruteForceLimit) + " items");
    }
    auto u = utilities(c, p);
    std::vector<std::vector<double>> marginals(n, std::vector<double>(n, 0.0));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        double prob = sequential_probability(u, perm);
        for (std::size_t r = 0; r < n; ++r) marginals[perm[r]][r] += prob;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return marginals;
}

CandidateSet permute_insertion(
    const CandidateSet& c,
    const std::vector<std::pair<std::size_t, std::string>>& assignment) {
    CandidateSet out = c;
    std::vector<bool> used(c.items.size(), false);
    for (const auto& [pos, content] : assignment) {
        if (pos >= c.items.size()) {
            throw EngineError("assignment position out of range");
        }
        if (used[pos]) throw EngineError("duplicate assignment position");
        used[pos] = true;
        out.items[pos] = append_description(c.items[pos], content);
    }
    return out;
}

}  // namespace ranklab
