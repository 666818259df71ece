#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace ranklab {

using njson = nlohmann::ordered_json;

// One retrieved item. Price, rating and review counts stay verbatim display
// strings; scraped data is dirty and numeric parsing is never a validation
// gate.
struct ProductImage {
    std::string url;
    std::uint32_t width = 0;
    std::uint32_t height = 0;

    bool operator==(const ProductImage&) const = default;
};

struct ProductRecord {
    std::string name;
    std::string price;
    std::string short_description;
    std::vector<ProductImage> images;
    std::string rating;
    std::string num_reviews;
    std::string long_description;
    std::string review_link;

    bool operator==(const ProductRecord&) const = default;
};

struct Query {
    std::string text;
    std::string category;

    bool operator==(const Query&) const = default;
};

// A query plus its retrieved items in retrieval order (position 1 first) and
// the index of the item to promote.
struct CandidateSet {
    Query query;
    std::vector<ProductRecord> items;
    std::size_t target_index = 0;

    bool operator==(const CandidateSet&) const = default;
};

inline constexpr std::size_t kMaxItemsPerSet = 50;

struct CorpusError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationResult {
    bool accepted = false;
    std::string reason;
};

// The canonical item text seen by scorers: name, short and long description
// joined by single spaces.
std::string item_text(const ProductRecord& r);

// Best-effort numeric readings of the verbatim display strings. Scraped data
// is dirty, so these are helpers only and never gate validation.
std::optional<double> parse_price(const std::string& price);
std::optional<double> parse_rating(const std::string& rating);
std::optional<std::uint64_t> parse_review_count(const std::string& num_reviews);

// Returns a copy with `text` appended to the long description. Non-empty
// parts are joined with a blank line; empty `text` is a no-op.
ProductRecord append_description(const ProductRecord& r, std::string_view text);

// Accept iff name is nonempty and at least one description is nonempty.
ValidationResult validate_record(const ProductRecord& r);

// Corpus files are JSONL: one candidate set per line. Records failing
// validation are dropped; a line whose set ends up empty is an error.
std::vector<CandidateSet> load_corpus(const std::string& path);
void save_corpus(const std::string& path, const std::vector<CandidateSet>& sets);

CandidateSet parse_candidate_set(const njson& j);
njson to_json(const CandidateSet& set);
njson to_json(const ProductRecord& r);

// Marks the promotion target: the last retrieved item by default, or an
// explicit index for insertion-order experiments.
CandidateSet select_target(const CandidateSet& c,
                           std::optional<std::size_t> override_index = std::nullopt);

// Deterministic synthetic corpus. Every query has four distinct tokens and
// the item at retrieval position k carries exactly one of them (index
// (k-1) mod 4) in its short description, so keyword-overlap scores are
// predictable. Descriptions are built from fixed sentence skeletons over a
// small filler pool, which keeps a corpus-trained n-gram scorer's perplexity
// on un-manipulated records low.
std::vector<CandidateSet> synth_corpus(std::uint64_t seed, std::size_t n_sets,
                                       std::size_t n_items);

}  // namespace ranklab
