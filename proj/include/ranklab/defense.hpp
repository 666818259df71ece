#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ranklab/corpus.hpp"
#include "ranklab/metrics.hpp"

namespace ranklab {

// Pre-ranking content filters. A filter that fires strips the appended
// optimization content (restoring the pre-append record when provenance is
// known); items are never dropped, so downstream PSR semantics stay intact.

enum class DefenseKind { Perplexity, Pattern, Length };

std::string defense_name(DefenseKind kind);

// The bundled marker list used by the pattern filter.
const std::vector<std::string>& default_patterns();

struct FilterConfig {
    double ppl_threshold = 50.0;
    std::vector<std::string> patterns = default_patterns();
    std::size_t max_words = 4000;
    const NgramModel* ppl_scorer = nullptr;  // required by the perplexity filter
};

struct FilterVerdict {
    bool keep = true;
    double measurement = 0.0;           // perplexity or word count
    std::vector<std::string> matched;   // pattern markers that fired
};

// Strip iff the scored text's perplexity exceeds the threshold. Text that
// tokenizes to nothing is kept; there is nothing to score.
FilterVerdict filter_perplexity(std::string_view text, const FilterConfig& cfg);

// Case-insensitive substring match against the marker list.
FilterVerdict filter_patterns(std::string_view text, const FilterConfig& cfg);

// Strip iff the whitespace-word count exceeds the cap.
FilterVerdict filter_length(std::string_view text, const FilterConfig& cfg);

// What the defense layer knows about an item whose text was manipulated.
struct ItemProvenance {
    ProductRecord base;    // the record before content was appended
    std::string appended;  // the appended optimization content
};

struct ItemFilterReport {
    std::size_t index = 0;
    std::string filter;
    bool keep = true;
    double measurement = 0.0;
    std::vector<std::string> matched;
};

struct FilterReport {
    std::vector<ItemFilterReport> entries;
    std::size_t stripped = 0;
};

njson to_json(const FilterReport& report);

// Applies the selected filters to every item. The perplexity filter scores
// the appended portion when provenance is known and the long-description
// field otherwise; pattern and length filters look at the item fields
// themselves. Stripping restores the pre-append record (or clears the
// offending field when no provenance exists).
std::pair<CandidateSet, FilterReport> apply_defenses(
    const CandidateSet& c, const FilterConfig& cfg,
    const std::set<DefenseKind>& which,
    const std::map<std::size_t, ItemProvenance>& provenance = {});

}  // namespace ranklab
