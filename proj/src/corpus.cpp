#include "ranklab/corpus.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "ranklab/rng.hpp"

namespace ranklab {

std::string item_text(const ProductRecord& r) {
    std::string out = r.name;
    if (!r.short_description.empty()) {
        if (!out.empty()) out += ' ';
        out += r.short_description;
    }
    if (!r.long_description.empty()) {
        if (!out.empty()) out += ' ';
        out += r.long_description;
    }
    return out;
}

ProductRecord append_description(const ProductRecord& r, std::string_view text) {
    ProductRecord out = r;
    if (text.empty()) return out;
    if (out.long_description.empty()) {
        out.long_description.assign(text);
    } else {
        out.long_description += "\n\n";
        out.long_description += text;
    }
    return out;
}

namespace {

// First decimal number in the string, ignoring currency symbols and
// thousands separators.
std::optional<double> first_number(const std::string& text) {
    std::string digits;
    bool seen_digit = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c >= '0' && c <= '9') {
            digits += c;
            seen_digit = true;
        } else if (c == ',' && seen_digit) {
            continue;
        } else if (c == '.' && seen_digit && i + 1 < text.size() &&
                   text[i + 1] >= '0' && text[i + 1] <= '9') {
            digits += c;
        } else if (seen_digit) {
            break;
        }
    }
    if (!seen_digit) return std::nullopt;
    return std::stod(digits);
}

}  // namespace

std::optional<double> parse_price(const std::string& price) {
    return first_number(price);
}

std::optional<double> parse_rating(const std::string& rating) {
    auto v = first_number(rating);
    if (v && (*v < 0.0 || *v > 5.0)) return std::nullopt;
    return v;
}

std::optional<std::uint64_t> parse_review_count(const std::string& num_reviews) {
    auto v = first_number(num_reviews);
    if (!v || *v < 0.0) return std::nullopt;
    return static_cast<std::uint64_t>(*v);
}

ValidationResult validate_record(const ProductRecord& r) {
    if (r.name.empty()) return {false, "empty name"};
    if (r.short_description.empty() && r.long_description.empty()) {
        return {false, "no description"};
    }
    return {true, ""};
}

namespace {

ProductRecord parse_record(const njson& j) {
    ProductRecord r;
    r.name = j.value("name", "");
    r.price = j.value("price", "");
    r.short_description = j.value("short_description", "");
    r.rating = j.value("rating", "");
    r.num_reviews = j.value("num_reviews", "");
    r.long_description = j.value("long_description", "");
    r.review_link = j.value("review_link", "");
    if (j.contains("images")) {
        for (const auto& ij : j.at("images")) {
            ProductImage img;
            img.url = ij.value("url", "");
            img.width = ij.value("width", 0u);
            img.height = ij.value("height", 0u);
            r.images.push_back(std::move(img));
        }
    }
    return r;
}

njson image_to_json(const ProductImage& img) {
    return njson{{"url", img.url}, {"width", img.width}, {"height", img.height}};
}

CandidateSet parse_set_common(const njson& j, bool drop_invalid) {
    if (!j.is_object()) throw CorpusError("candidate set is not a JSON object");
    CandidateSet set;
    set.query.text = j.value("query", "");
    set.query.category = j.value("category", "");
    if (set.query.text.empty()) throw CorpusError("query text is empty");
    if (!j.contains("items") || !j.at("items").is_array()) {
        throw CorpusError("missing items array");
    }
    for (const auto& item : j.at("items")) {
        ProductRecord r = parse_record(item);
        ValidationResult v = validate_record(r);
        if (v.accepted) {
            set.items.push_back(std::move(r));
        } else if (!drop_invalid) {
            throw CorpusError("invalid record (" + v.reason + ")");
        }
    }
    if (set.items.empty()) throw CorpusError("candidate set emptied by validation");
    if (set.items.size() > kMaxItemsPerSet) {
        throw CorpusError("candidate set exceeds " +
                          std::to_string(kMaxItemsPerSet) + " items");
    }
    if (j.contains("target_index")) {
        auto idx = j.at("target_index").get<std::int64_t>();
        if (idx < 0 || static_cast<std::size_t>(idx) >= set.items.size()) {
            throw CorpusError("target_index out of range");
        }
        set.target_index = static_cast<std::size_t>(idx);
    } else {
        set.target_index = set.items.size() - 1;
    }
    return set;
}

}  // namespace

CandidateSet parse_candidate_set(const njson& j) {
    return parse_set_common(j, /*drop_invalid=*/false);
}

njson to_json(const ProductRecord& r) {
    njson j;
    j["name"] = r.name;
    j["price"] = r.price;
    j["short_description"] = r.short_description;
    njson imgs = njson::array();
    for (const auto& img : r.images) imgs.push_back(image_to_json(img));
    j["images"] = std::move(imgs);
    j["rating"] = r.rating;
    j["num_reviews"] = r.num_reviews;
    j["long_description"] = r.long_description;
    j["review_link"] = r.review_link;
    return j;
}

njson to_json(const CandidateSet& set) {
    njson j;
    j["query"] = set.query.text;
    j["category"] = set.query.category;
    njson items = njson::array();
    for (const auto& r : set.items) items.push_back(to_json(r));
    j["items"] = std::move(items);
    j["target_index"] = set.target_index;
    return j;
}

std::vector<CandidateSet> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open corpus file: " + path);
    std::vector<CandidateSet> sets;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            njson j = njson::parse(line);
            sets.push_back(parse_set_common(j, /*drop_invalid=*/true));
        } catch (const CorpusError& e) {
            throw CorpusError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const njson::exception& e) {
            throw CorpusError(path + ":" + std::to_string(line_no) +
                              ": malformed JSON: " + e.what());
        }
    }
    return sets;
}

void save_corpus(const std::string& path, const std::vector<CandidateSet>& sets) {
    std::ofstream out(path);
    if (!out) throw CorpusError("cannot write corpus file: " + path);
    for (const auto& set : sets) out << to_json(set).dump() << '\n';
}

CandidateSet select_target(const CandidateSet& c,
                           std::optional<std::size_t> override_index) {
    if (c.items.empty()) throw CorpusError("cannot select target in empty set");
    CandidateSet out = c;
    if (override_index) {
        if (*override_index >= c.items.size()) {
            throw CorpusError("target override out of range");
        }
        out.target_index = *override_index;
    } else {
        out.target_index = c.items.size() - 1;
    }
    return out;
}

namespace {

// Pool words are screened so no generated text can contain a content-filter
// marker, not even as a substring or across adjacent draws.
constexpr std::array<const char*, 32> kQueryPool = {
    "air",      "fryer",   "oven",      "camera",   "zoom",     "lens",
    "tripod",   "blender", "mixer",     "kettle",   "toaster",  "router",
    "monitor",  "keyboard","speaker",   "heater",   "drill",    "wrench",
    "ladder",   "vacuum",  "luggage",   "backpack", "jacket",   "sneaker",
    "treadmill","dumbbell","shampoo",   "lotion",   "vitamin",  "snack",
    "coffee",   "tea"};

constexpr std::array<const char*, 12> kFillerPool = {
    "steady", "compact", "smooth", "quiet",  "sturdy", "padded",
    "sealed", "matte",   "ridged", "coated", "slim",   "broad"};

constexpr std::array<const char*, 12> kBrandPool = {
    "Volta",   "Norcrest", "Apexion", "Kelvor", "Braxton", "Luminar",
    "Quorra",  "Zenfield", "Ortega",  "Halcyon", "Verano",  "Madrone"};

constexpr std::array<const char*, 15> kCategories = {
    "Home & Kitchen",      "Tools & Home Improvement", "Electronics",
    "Sports & Outdoors",   "Health & Household",       "Beauty & Personal Care",
    "Automotive",          "Toys & Games",             "Clothing, Shoes & Jewelry",
    "Pet Supplies",        "Grocery & Gourmet Food",   "Office Products",
    "Computers & Accessories", "Luggage & Travel Gear", "Industrial & Scientific"};

const char* pick(SplitMix64& rng, const auto& pool) {
    return pool[static_cast<std::size_t>(rng.next_below(pool.size()))];
}

std::string format_thousands(std::uint64_t n) {
    std::string digits = std::to_string(n);
    std::string out;
    std::size_t lead = digits.size() % 3;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i != 0 && (i - lead) % 3 == 0) out += ',';
        out += digits[i];
    }
    return out;
}

// Long descriptions rotate through fixed sentence skeletons so a bigram model
// trained on the corpus sees the same phrases again and again.
std::string long_sentence(std::size_t which, const char* qtok, SplitMix64& rng) {
    std::ostringstream s;
    switch (which % 4) {
        case 0:
            s << "the build and " << pick(rng, kFillerPool)
              << " grip held up well with daily use";
            break;
        case 1:
            s << "this " << pick(rng, kFillerPool)
              << " design and build quality works well for the price";
            break;
        case 2:
            s << "sturdy " << pick(rng, kFillerPool) << " cover with "
              << pick(rng, kFillerPool) << " battery support and quiet "
              << pick(rng, kFillerPool) << " mode";
            break;
        default:
            // Repeats the item's own query token; the distinct-token overlap
            // stays at exactly one.
            s << "kept working well after buying this " << qtok
              << " model for daily use";
            break;
    }
    return s.str();
}

}  // namespace

std::vector<CandidateSet> synth_corpus(std::uint64_t seed, std::size_t n_sets,
                                       std::size_t n_items) {
    if (n_items < 1) throw CorpusError("synth_corpus requires n_items >= 1");
    if (n_items > kMaxItemsPerSet) {
        throw CorpusError("synth_corpus: n_items exceeds per-set cap");
    }
    std::vector<CandidateSet> sets;
    sets.reserve(n_sets);
    for (std::size_t s = 0; s < n_sets; ++s) {
        SplitMix64 qrng(derive_seed(seed, {s, 0x71ULL}));
        // Four distinct query tokens per set.
        std::array<const char*, 4> qtok{};
        std::size_t picked = 0;
        while (picked < qtok.size()) {
            const char* w = pick(qrng, kQueryPool);
            bool dup = false;
            for (std::size_t i = 0; i < picked; ++i) dup |= (qtok[i] == w);
            if (!dup) qtok[picked++] = w;
        }
        CandidateSet set;
        set.query.text = std::string(qtok[0]) + " " + qtok[1] + " " + qtok[2] +
                         " " + qtok[3];
        set.query.category = kCategories[s % kCategories.size()];

        for (std::size_t k = 0; k < n_items; ++k) {
            SplitMix64 irng(derive_seed(seed, {s, k, 0x17EAULL}));
            ProductRecord r;
            char m1 = static_cast<char>('A' + irng.next_below(26));
            char m2 = static_cast<char>('A' + irng.next_below(26));
            std::uint64_t mnum = 10 + irng.next_below(90);
            r.name = std::string(pick(irng, kBrandPool)) + " " + m1 + m2 +
                     std::to_string(mnum);
            r.price = "$" + std::to_string(9 + irng.next_below(390)) + "." +
                      (irng.next_below(2) ? "95" : "49");
            // Position k+1 carries query token (k mod 4).
            r.short_description = std::string(qtok[k % 4]) + " model with " +
                                  pick(irng, kFillerPool) + " " +
                                  pick(irng, kFillerPool) + " finish";
            // The set index shifts the skeleton phase so every (token,
            // skeleton) pairing occurs somewhere in the corpus.
            r.long_description =
                long_sentence(k + s, qtok[k % 4], irng) + ". " +
                long_sentence(k + s + 1, qtok[k % 4], irng) + ".";
            r.rating = std::to_string(3 + irng.next_below(2)) + "." +
                       std::to_string(irng.next_below(10)) + " out of 5 stars";
            r.num_reviews =
                format_thousands(37 + irng.next_below(20000)) + " ratings";
            std::size_t n_imgs = k % 3;
            constexpr std::array<std::uint32_t, 7> kDims = {355, 425, 450,
                                                            466, 522, 569, 679};
            for (std::size_t i = 0; i < n_imgs; ++i) {
                std::uint32_t d =
                    kDims[static_cast<std::size_t>(irng.next_below(kDims.size()))];
                r.images.push_back({"https://img.example/p" + std::to_string(s) +
                                        "_" + std::to_string(k) + "_" +
                                        std::to_string(i) + ".jpg",
                                    d, d});
            }
            r.review_link =
                "/product-reviews/SYN" + std::to_string(s) + "X" + std::to_string(k);
            set.items.push_back(std::move(r));
        }
        set.target_index = set.items.size() - 1;
        sets.push_back(std::move(set));
    }
    return sets;
}

}  // namespace ranklab
