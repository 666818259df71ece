#include "ranklab/defense.hpp"

#include <stdexcept>

#include "ranklab/text.hpp"

namespace ranklab {

std::string defense_name(DefenseKind kind) {
    switch (kind) {
        case DefenseKind::Perplexity: return "perplexity";
        case DefenseKind::Pattern: return "pattern";
        case DefenseKind::Length: return "length";
    }
    return "unknown";
}

const std::vector<std::string>& default_patterns() {
    static const std::vector<std::string> kPatterns = {
        "I'm exploring",  "I'm analyzing",  "I'm evaluating", "I'm examining",
        "I'm comparing",  "I'm reviewing",  "I'm explaining", "I'm outlining",
        "I'm breaking down", "I'm identifying", "I analyzed",  "I evaluated",
        "I compared",     "first",          "next",           "then",
        "finally",        "step",           "in conclusion",  "this suggests"};
    return kPatterns;
}

FilterVerdict filter_perplexity(std::string_view text, const FilterConfig& cfg) {
    if (cfg.ppl_scorer == nullptr) {
        throw std::invalid_argument("perplexity filter needs a scorer");
    }
    if (cfg.ppl_threshold <= 0.0) {
        throw std::invalid_argument("perplexity threshold must be positive");
    }
    FilterVerdict v;
    if (tokenize(text).empty()) return v;  // nothing to flag
    v.measurement = perplexity(text, *cfg.ppl_scorer);
    v.keep = v.measurement <= cfg.ppl_threshold;
    return v;
}

FilterVerdict filter_patterns(std::string_view text, const FilterConfig& cfg) {
    if (cfg.patterns.empty()) {
        throw std::invalid_argument("pattern filter needs a nonempty marker list");
    }
    FilterVerdict v;
    for (const auto& marker : cfg.patterns) {
        if (contains_ci(text, marker)) v.matched.push_back(marker);
    }
    v.measurement = static_cast<double>(v.matched.size());
    v.keep = v.matched.empty();
    return v;
}

FilterVerdict filter_length(std::string_view text, const FilterConfig& cfg) {
    if (cfg.max_words == 0) {
        throw std::invalid_argument("length cap must be positive");
    }
    FilterVerdict v;
    v.measurement = static_cast<double>(whitespace_token_count(text));
    v.keep = v.measurement <= static_cast<double>(cfg.max_words);
    return v;
}

njson to_json(const FilterReport& report) {
    njson out;
    out["stripped"] = report.stripped;
    njson entries = njson::array();
    for (const auto& e : report.entries) {
        njson j;
        j["index"] = e.index;
        j["filter"] = e.filter;
        j["verdict"] = e.keep ? "keep" : "strip";
        j["measurement"] = e.measurement;
        if (!e.matched.empty()) j["matched"] = e.matched;
        entries.push_back(std::move(j));
    }
    out["items"] = std::move(entries);
    return out;
}

std::pair<CandidateSet, FilterReport> apply_defenses(
    const CandidateSet& c, const FilterConfig& cfg,
    const std::set<DefenseKind>& which,
    const std::map<std::size_t, ItemProvenance>& provenance) {
    CandidateSet out = c;
    FilterReport report;
    for (std::size_t i = 0; i < c.items.size(); ++i) {
        const ProductRecord& item = c.items[i];
        auto prov = provenance.find(i);
        bool strip = false;
        for (DefenseKind kind : which) {
            FilterVerdict v;
            switch (kind) {
                case DefenseKind::Perplexity: {
                    std::string_view scored = prov != provenance.end()
                                                  ? std::string_view(prov->second.appended)
                                                  : std::string_view(item.long_description);
                    v = filter_perplexity(scored, cfg);
                    break;
                }
                case DefenseKind::Pattern:
                    v = filter_patterns(item_text(item), cfg);
                    break;
                case DefenseKind::Length:
                    v = filter_length(item.long_description, cfg);
                    break;
            }
            report.entries.push_back(
                {i, defense_name(kind), v.keep, v.measurement, v.matched});
            strip = strip || !v.keep;
        }
        if (strip) {
            ++report.stripped;
            if (prov != provenance.end()) {
                out.items[i] = prov->second.base;
            } else {
                out.items[i].long_description.clear();
            }
        }
    }
    return {std::move(out), std::move(report)};
}

}  // namespace ranklab
