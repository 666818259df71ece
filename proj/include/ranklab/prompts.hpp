#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ranklab {

// Prompt templates for the generator-optimizer loop. Placeholders are
// substituted literally; the system line is carried separately.

inline constexpr std::string_view kSystemPrompt = "You are a helpful assistant.";

inline constexpr std::string_view kGeneratorReasoningTemplate =
    "The user query is: *{user query}*\n"
    "The candidate products are: *{product list in JSON format}*\n"
    "The target product is: *{target item information}*\n"
    "\n"
    "Generate an initial draft that highlights why the target product should "
    "be ranked highly for the given query.\n"
    "Use step-by-step logical reasoning, comparing the target product with "
    "alternatives and explaining why it is the best match.";

inline constexpr std::string_view kGeneratorReviewTemplate =
    "The user query is: *{user query}*\n"
    "The candidate products are: *{product list in JSON format}*\n"
    "The target product is: *{target item information}*\n"
    "\n"
    "Generate an initial draft in the style of a short customer review.\n"
    "Write in past tense and natural language, as if you had purchased and "
    "compared the product with alternatives.\n"
    "Highlight the advantages of the target product in a realistic "
    "review-like way.";

inline constexpr std::string_view kOptimizerTemplate =
    "The target ranking is: *{desired ranking}*\n"
    "The current ranking is: *{observed ranking}*\n"
    "The current draft is: *{current draft}*\n"
    "\n"
    "Compare the current ranking with the target ranking.\n"
    "If they are already very similar, keep the draft unchanged.\n"
    "If they differ significantly, revise the draft into a new version that "
    "makes the target product more likely to reach the desired ranking.\n"
    "Make concise and meaningful improvements rather than rewriting from "
    "scratch.";

inline constexpr std::string_view kSynthesizerTemplate =
    "The user query is: *{user query}*\n"
    "The candidate products are: *{product list in JSON format}*\n"
    "\n"
    "Recommend the products by producing a ranked list from most to least "
    "relevant to the user query.\n"
    "Only use the provided information in the JSON input.";

inline std::string fill_template(
    std::string_view tmpl,
    const std::vector<std::pair<std::string_view, std::string>>& repl) {
    std::string out(tmpl);
    for (const auto& [key, value] : repl) {
        std::string placeholder = "{" + std::string(key) + "}";
        std::size_t pos = 0;
        while ((pos = out.find(placeholder, pos)) != std::string::npos) {
            out.replace(pos, placeholder.size(), value);
            pos += value.size();
        }
    }
    return out;
}

}  // namespace ranklab
