#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ranklab {

// Shared tokenizer used by scorers, the n-gram model and the optimizers:
// ASCII lowercase, split on any non-alphanumeric byte.
std::vector<std::string> tokenize(std::string_view text);

// Distinct tokens in first-appearance order.
std::vector<std::string> distinct_tokens(std::string_view text);

std::unordered_set<std::string> token_set(std::string_view text);

// Term-frequency vector keyed by token.
std::unordered_map<std::string, double> term_frequencies(std::string_view text);

// Count of whitespace-delimited words (token accounting, length filter).
std::size_t whitespace_token_count(std::string_view text);

std::string to_lower(std::string_view text);

// Case-insensitive substring test (ASCII).
bool contains_ci(std::string_view haystack, std::string_view needle);

// Cosine similarity of two term-frequency maps; 0 when either has zero norm.
double cosine_similarity(const std::unordered_map<std::string, double>& a,
                         const std::unordered_map<std::string, double>& b);

}  // namespace ranklab
