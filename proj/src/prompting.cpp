#include "stepverify/prompting.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace stepverify {
namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  std::size_t pos = text.find(needle);
  while (pos != std::string_view::npos) {
    ++count;
    pos = text.find(needle, pos + needle.size());
  }
  return count;
}

std::string replace_once(std::string text, std::string_view placeholder,
                         std::string_view value) {
  const std::size_t pos = text.find(placeholder);
  if (pos == std::string::npos) return text;
  text.replace(pos, placeholder.size(), value);
  return text;
}

std::string numbered_block(const std::vector<std::string>& steps,
                           std::size_t first_index) {
  if (steps.empty()) return "(none)";
  std::string block;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i > 0) block += '\n';
    block += "Step " + std::to_string(first_index + i) + ":\n" + steps[i];
  }
  return block;
}

std::vector<std::string_view> required_placeholders(Strategy strategy) {
  if (is_step_strategy(strategy)) {
    std::vector<std::string_view> names = {"{problem}", "{history}",
                                           "{current_step}", "{future_steps}"};
    if (uses_error_classification(strategy)) names.push_back("{error_taxonomy}");
    return names;
  }
  std::vector<std::string_view> names = {"{problem}", "{solution}"};
  if (uses_error_classification(strategy)) names.push_back("{error_taxonomy}");
  return names;
}

std::string_view trim_view(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return text;
}

// Strips whitespace and markdown emphasis so "**VERDICT: CORRECT**" parses.
std::string_view strip_decor(std::string_view line) {
  line = trim_view(line);
  while (!line.empty() && (line.front() == '*' || line.front() == '#'))
    line.remove_prefix(1);
  while (!line.empty() && line.back() == '*') line.remove_suffix(1);
  return trim_view(line);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PromptingError("cannot open template '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::Judge: return "judge";
    case Strategy::JudgeEC: return "judge-ec";
    case Strategy::StepNoEC: return "step";
    case Strategy::StepEC: return "step-ec";
  }
  return "step-ec";
}

std::optional<Strategy> strategy_from_string(std::string_view name) {
  if (name == "judge") return Strategy::Judge;
  if (name == "judge-ec" || name == "judge_ec") return Strategy::JudgeEC;
  if (name == "step") return Strategy::StepNoEC;
  if (name == "step-ec" || name == "step_ec") return Strategy::StepEC;
  return std::nullopt;
}

AnalysisContext build_context(const StepSequence& steps, std::string_view problem,
                              std::size_t i) {
  const std::size_t n = steps.steps.size();
  if (i < 1 || i > n) {
    throw PromptingError("step index " + std::to_string(i) + " out of range 1.." +
                         std::to_string(n));
  }
  AnalysisContext context;
  context.problem = std::string(problem);
  context.history.assign(steps.steps.begin(), steps.steps.begin() + (i - 1));
  context.current = steps.steps[i - 1];
  context.future.assign(steps.steps.begin() + i, steps.steps.end());
  context.index = i;
  context.total = n;
  return context;
}

const PromptTemplate& TemplateSet::for_strategy(Strategy s) const {
  switch (s) {
    case Strategy::Judge: return judge;
    case Strategy::JudgeEC: return judge_ec;
    case Strategy::StepNoEC: return step;
    case Strategy::StepEC: return step_ec;
  }
  return step_ec;
}

TemplateSet load_templates(const std::filesystem::path& dir) {
  TemplateSet set;
  set.judge = {"judge", read_file(dir / "judge.txt")};
  set.judge_ec = {"judge_ec", read_file(dir / "judge_ec.txt")};
  set.step = {"step", read_file(dir / "step.txt")};
  set.step_ec = {"step_ec", read_file(dir / "step_ec.txt")};
  validate_template(set.judge, Strategy::Judge);
  validate_template(set.judge_ec, Strategy::JudgeEC);
  validate_template(set.step, Strategy::StepNoEC);
  validate_template(set.step_ec, Strategy::StepEC);
  return set;
}

void validate_template(const PromptTemplate& tmpl, Strategy strategy) {
  for (const std::string_view placeholder : required_placeholders(strategy)) {
    const std::size_t n = count_occurrences(tmpl.text, placeholder);
    if (n != 1) {
      throw PromptingError("template '" + tmpl.name + "' must contain " +
                           std::string(placeholder) + " exactly once (found " +
                           std::to_string(n) + ")");
    }
  }
  if (!uses_error_classification(strategy) &&
      count_occurrences(tmpl.text, "{error_taxonomy}") > 0) {
    throw PromptingError("template '" + tmpl.name +
                         "' has {error_taxonomy} but the strategy does not classify errors");
  }
}

std::string error_taxonomy_text() {
  std::string text;
  text += "- SolutionByGuess: the conclusion rests on worked examples, pattern";
  text += " spotting, or an unjustified leap instead of a general argument.\n";
  text += "- CircularReasoning: the claim being established is assumed, directly";
  text += " or in disguise, somewhere in the argument.\n";
  text += "- InequalityManipulation: an inequality is transformed invalidly";
  text += " (wrong direction, unjustified operation, or an illegal combination of bounds).\n";
  text += "- LogicalFallacy: any other broken inference, such as an unproven";
  text += " generalization or a conclusion that does not follow from the premises.";
  return text;
}

std::string render_step_prompt(const PromptTemplate& tmpl, Strategy strategy,
                               const AnalysisContext& context) {
  if (!is_step_strategy(strategy)) {
    throw PromptingError("template/strategy mismatch: " +
                         std::string(to_string(strategy)) + " is not a step strategy");
  }
  validate_template(tmpl, strategy);
  std::string text = tmpl.text;
  text = replace_once(std::move(text), "{problem}", context.problem);
  text = replace_once(std::move(text), "{history}",
                      numbered_block(context.history, 1));
  text = replace_once(std::move(text), "{current_step}", context.current);
  text = replace_once(std::move(text), "{future_steps}",
                      numbered_block(context.future, context.index + 1));
  if (uses_error_classification(strategy)) {
    text = replace_once(std::move(text), "{error_taxonomy}", error_taxonomy_text());
  }
  return text;
}

std::string render_judge_prompt(const PromptTemplate& tmpl, Strategy strategy,
                                std::string_view problem, std::string_view solution) {
  if (is_step_strategy(strategy)) {
    throw PromptingError("template/strategy mismatch: " +
                         std::string(to_string(strategy)) + " is not a holistic strategy");
  }
  validate_template(tmpl, strategy);
  std::string text = tmpl.text;
  text = replace_once(std::move(text), "{problem}", problem);
  text = replace_once(std::move(text), "{solution}", solution);
  if (uses_error_classification(strategy)) {
    text = replace_once(std::move(text), "{error_taxonomy}", error_taxonomy_text());
  }
  return text;
}

std::string format_reminder() {
  return "Your previous reply could not be parsed. Answer again, and end with "
         "exactly one line reading either \"VERDICT: CORRECT\" or "
         "\"VERDICT: INCORRECT\". If the verdict is INCORRECT and error "
         "categories were requested, add one line of the form "
         "\"ERRORS: <comma-separated category names>\".";
}

ParsedVerdict parse_verdict(std::string_view raw, Strategy strategy) {
  ParsedVerdict parsed;
  std::vector<bool> markers;
  std::string rationale;

  std::size_t pos = 0;
  while (pos <= raw.size()) {
    const std::size_t nl = raw.find('\n', pos);
    const std::string_view line =
        raw.substr(pos, (nl == std::string_view::npos ? raw.size() : nl) - pos);
    const std::string_view stripped = strip_decor(line);

    if (stripped.rfind("VERDICT:", 0) == 0) {
      const std::string_view value = trim_view(stripped.substr(8));
      if (value == "CORRECT") {
        markers.push_back(true);
      } else if (value == "INCORRECT") {
        markers.push_back(false);
      }
    } else if (uses_error_classification(strategy) &&
               stripped.rfind("ERRORS:", 0) == 0) {
      std::string_view rest = stripped.substr(7);
      while (!rest.empty()) {
        const std::size_t comma = rest.find(',');
        const std::string_view label =
            trim_view(rest.substr(0, comma == std::string_view::npos
                                         ? rest.size()
                                         : comma));
        if (!label.empty() && label != "none" && label != "None") {
          if (const auto category = error_category_from_string(label);
              category && in_prompt_taxonomy(*category)) {
            if (std::find(parsed.errors.begin(), parsed.errors.end(), *category) ==
                parsed.errors.end()) {
              parsed.errors.push_back(*category);
            }
          } else {
            parsed.unknown_labels.emplace_back(label);
          }
        }
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
    } else {
      if (!rationale.empty()) rationale += '\n';
      rationale += std::string(line);
    }

    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  if (markers.empty()) throw UnparseableError("no VERDICT marker found");
  const bool first = markers.front();
  for (bool marker : markers) {
    if (marker != first) throw UnparseableError("contradictory VERDICT markers");
  }
  parsed.is_correct = first;
  parsed.rationale = std::string(trim_view(rationale));
  return parsed;
}

TemplateSet builtin_templates() {
  static const char* const kJudge = R"TPL(You are a careful mathematical reviewer. Decide whether the candidate solution below is logically sound from start to finish.

Problem:
{problem}

Candidate solution:
{solution}

Work through the solution in order. It is correct only if every step follows from the problem statement and the steps before it, with no unjustified leaps, invalid operations, missing cases, or conclusions that merely happen to match a pattern. A correct final answer does not make flawed reasoning acceptable.

Write your analysis, then finish with exactly one line of the form:
VERDICT: CORRECT
or
VERDICT: INCORRECT
)TPL";

  static const char* const kJudgeEC = R"TPL(You are a careful mathematical reviewer. Decide whether the candidate solution below is logically sound from start to finish.

Problem:
{problem}

Candidate solution:
{solution}

Work through the solution in order. It is correct only if every step follows from the problem statement and the steps before it, with no unjustified leaps, invalid operations, missing cases, or conclusions that merely happen to match a pattern. A correct final answer does not make flawed reasoning acceptable.

Watch specifically for these error categories:
{error_taxonomy}

Write your analysis, then finish with exactly one line of the form:
VERDICT: CORRECT
or
VERDICT: INCORRECT
If your verdict is INCORRECT, add one more line naming every category that applies, exactly as spelled above:
ERRORS: <comma-separated category names>
)TPL";

  static const char* const kStep = R"TPL(You are a careful mathematical reviewer. Verify one single step of a candidate solution.

Problem:
{problem}

Steps established so far (treat these as given; do not re-judge them):
{history}

Step under review:
{current_step}

Remaining steps (shown only so you can see where the solution is heading; they must not be used to justify the step under review):
{future_steps}

Judge only the step under review. It is correct exactly when it follows logically from the problem statement and the steps established so far, with no unjustified leap, invalid operation, or unsupported claim.

Write your analysis of this step, then finish with exactly one line of the form:
VERDICT: CORRECT
or
VERDICT: INCORRECT
)TPL";

  static const char* const kStepEC = R"TPL(You are a careful mathematical reviewer. Verify one single step of a candidate solution.

Problem:
{problem}

Steps established so far (treat these as given; do not re-judge them):
{history}

Step under review:
{current_step}

Remaining steps (shown only so you can see where the solution is heading; they must not be used to justify the step under review):
{future_steps}

Judge only the step under review. It is correct exactly when it follows logically from the problem statement and the steps established so far, with no unjustified leap, invalid operation, or unsupported claim.

Watch specifically for these error categories:
{error_taxonomy}

Write your analysis of this step, then finish with exactly one line of the form:
VERDICT: CORRECT
or
VERDICT: INCORRECT
If your verdict is INCORRECT, add one more line naming every category that applies, exactly as spelled above:
ERRORS: <comma-separated category names>
)TPL";

  TemplateSet set;
  set.judge = {"judge", kJudge};
  set.judge_ec = {"judge_ec", kJudgeEC};
  set.step = {"step", kStep};
  set.step_ec = {"step_ec", kStepEC};
  return set;
}

}  // namespace stepverify
