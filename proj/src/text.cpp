#include "ranklab/text.hpp"

#include <cctype>
#include <cmath>

namespace ranklab {

namespace {
inline bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0; }
inline char lower_byte(unsigned char c) {
    return static_cast<char>(std::tolower(c));
}
}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (is_word_byte(c)) {
            cur.push_back(lower_byte(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> distinct_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& tok : tokenize(text)) {
        if (seen.insert(tok).second) out.push_back(tok);
    }
    return out;
}

std::unordered_set<std::string> token_set(std::string_view text) {
    std::unordered_set<std::string> out;
    for (auto& tok : tokenize(text)) out.insert(std::move(tok));
    return out;
}

std::unordered_map<std::string, double> term_frequencies(std::string_view text) {
    std::unordered_map<std::string, double> out;
    for (auto& tok : tokenize(text)) out[tok] += 1.0;
    return out;
}

std::size_t whitespace_token_count(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (std::isspace(c) != 0) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

std::string to_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (unsigned char c : text) out.push_back(lower_byte(c));
    return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    if (needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (lower_byte(static_cast<unsigned char>(haystack[i + j])) !=
                lower_byte(static_cast<unsigned char>(needle[j]))) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

double cosine_similarity(const std::unordered_map<std::string, double>& a,
                         const std::unordered_map<std::string, double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [tok, va] : a) {
        na += va * va;
        auto it = b.find(tok);
        if (it != b.end()) dot += va * it->second;
    }
    for (const auto& [tok, vb] : b) nb += vb * vb;
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace ranklab
