#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace stepverify {

/// Error categories used both for dataset annotations and for the
/// error-classification prompt variants. CalculationError is annotated in
/// corpora but never listed in verification prompts, so the prompt-level
/// taxonomy is the first four values.
enum class ErrorCategory {
  SolutionByGuess,
  CircularReasoning,
  InequalityManipulation,
  LogicalFallacy,
  CalculationError,
};

inline constexpr std::array<ErrorCategory, 4> kPromptTaxonomy = {
    ErrorCategory::SolutionByGuess,
    ErrorCategory::CircularReasoning,
    ErrorCategory::InequalityManipulation,
    ErrorCategory::LogicalFallacy,
};

std::string_view to_string(ErrorCategory category);
std::optional<ErrorCategory> error_category_from_string(std::string_view name);

inline bool in_prompt_taxonomy(ErrorCategory category) {
  return category != ErrorCategory::CalculationError;
}

}  // namespace stepverify
