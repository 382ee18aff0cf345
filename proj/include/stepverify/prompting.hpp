#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stepverify/segmenter.hpp"
#include "stepverify/taxonomy.hpp"

namespace stepverify {

class PromptingError : public std::runtime_error {
 public:
  explicit PromptingError(const std::string& message)
      : std::runtime_error("prompting: " + message) {}
};

/// Raised when a backend response carries no usable verdict marker.
class UnparseableError : public std::runtime_error {
 public:
  explicit UnparseableError(const std::string& message)
      : std::runtime_error("unparseable response: " + message) {}
};

enum class Strategy {
  Judge,    // holistic single call
  JudgeEC,  // holistic with error classification
  StepNoEC,
  StepEC,
};

inline constexpr std::array<Strategy, 4> kAllStrategies = {
    Strategy::Judge, Strategy::JudgeEC, Strategy::StepNoEC, Strategy::StepEC};

std::string_view to_string(Strategy strategy);
std::optional<Strategy> strategy_from_string(std::string_view name);

inline bool is_step_strategy(Strategy s) {
  return s == Strategy::StepNoEC || s == Strategy::StepEC;
}
inline bool uses_error_classification(Strategy s) {
  return s == Strategy::JudgeEC || s == Strategy::StepEC;
}

/// The material handed to the verifier for one step: problem, preceding
/// steps, the step under review, and the remaining steps as trajectory
/// context only.
struct AnalysisContext {
  std::string problem;
  std::vector<std::string> history;  // steps 1..i-1
  std::string current;               // step i
  std::vector<std::string> future;   // steps i+1..n
  std::size_t index = 1;             // 1-based
  std::size_t total = 1;
};

/// Partitions a step sequence around 1-based index i.
AnalysisContext build_context(const StepSequence& steps, std::string_view problem,
                              std::size_t i);

struct PromptTemplate {
  std::string name;
  std::string text;
};

/// The four shipped template files, loaded from a directory containing
/// judge.txt, judge_ec.txt, step.txt and step_ec.txt.
struct TemplateSet {
  PromptTemplate judge;
  PromptTemplate judge_ec;
  PromptTemplate step;
  PromptTemplate step_ec;

  const PromptTemplate& for_strategy(Strategy s) const;
};

TemplateSet load_templates(const std::filesystem::path& dir);

/// Built-in copies of the shipped templates, for callers without a template
/// directory at hand.
TemplateSet builtin_templates();

/// Checks that every placeholder the strategy requires occurs exactly once
/// and that {error_taxonomy} appears only in EC templates.
void validate_template(const PromptTemplate& tmpl, Strategy strategy);

std::string render_step_prompt(const PromptTemplate& tmpl, Strategy strategy,
                               const AnalysisContext& context);
std::string render_judge_prompt(const PromptTemplate& tmpl, Strategy strategy,
                                std::string_view problem, std::string_view solution);

/// The enumerated 4-category taxonomy block substituted for {error_taxonomy}.
std::string error_taxonomy_text();

/// Appended to a prompt when the first response failed to parse.
std::string format_reminder();

struct ParsedVerdict {
  bool is_correct = false;                  // the VERDICT marker
  std::vector<ErrorCategory> errors;        // labels within the prompt taxonomy
  std::vector<std::string> unknown_labels;  // anything else, kept verbatim
  std::string rationale;                    // response text minus marker lines
};

/// Extracts the `VERDICT: CORRECT|INCORRECT` marker and, for EC strategies,
/// an optional `ERRORS: <names>` line. Throws UnparseableError when no marker
/// is found or the markers contradict each other.
ParsedVerdict parse_verdict(std::string_view raw, Strategy strategy);

}  // namespace stepverify
