#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stepverify/backend.hpp"
#include "stepverify/corpus.hpp"
#include "stepverify/prompting.hpp"
#include "stepverify/segmenter.hpp"

namespace stepverify {

class VerdictStore;

enum class StepStatus { Judged, Unparseable, BackendFailed };

std::string_view to_string(StepStatus status);
std::optional<StepStatus> step_status_from_string(std::string_view name);

/// Judgment for one step (or for the whole solution under a holistic
/// strategy, stored as a single entry with index 1). is_correct is meaningful
/// only when status == Judged.
struct StepVerdict {
  std::size_t index = 1;  // 1-based
  StepStatus status = StepStatus::Judged;
  bool is_correct = false;
  std::vector<ErrorCategory> errors;        // within the prompt taxonomy
  std::vector<std::string> unknown_labels;  // quarantined verbatim
  std::string rationale;                    // raw backend text
  CallRecord call;                          // rolled up across format retries

  std::optional<bool> judged_correct() const {
    if (status != StepStatus::Judged) return std::nullopt;
    return is_correct;
  }
};

enum class SolutionOutcome { Correct, Incorrect, Indeterminate };

std::string_view to_string(SolutionOutcome outcome);
std::optional<SolutionOutcome> solution_outcome_from_string(std::string_view name);

struct UsageRollup {
  long long calls = 0;
  long long retries = 0;  // attempts beyond the first, summed over calls
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  double latency_seconds = 0.0;

  void add(const CallRecord& record);
};

struct SolutionVerdict {
  std::string record_id;
  Strategy strategy = Strategy::StepEC;
  std::string backend_name;
  std::size_t num_steps = 0;  // decomposed step count, kept for stratification
  std::vector<StepVerdict> step_verdicts;  // ordered by index
  SolutionOutcome predicted_correct = SolutionOutcome::Indeterminate;
  double wallclock_seconds = 0.0;
  UsageRollup usage;
};

/// A step is correct when no taxonomy error fires: the error count is zero.
bool step_correct_from_error_count(std::span<const bool> error_flags);
/// Equivalent product form: the product of (1 - e_j) over the taxonomy.
bool step_correct_from_error_product(std::span<const bool> error_flags);

/// A solution is correct iff every step verdict is judged true; any judged
/// false makes it incorrect; otherwise (some step unusable) indeterminate.
SolutionOutcome aggregate(std::span<const StepVerdict> verdicts);

/// Renders the step prompt, queries the backend, and parses the verdict. An
/// unparseable response is retried once with an appended format reminder.
StepVerdict verify_step(const AnalysisContext& context, Strategy strategy,
                        Backend& backend, const TemplateSet& templates);

struct VerifyOptions {
  SegmenterConfig segmenter;
  int workers = 0;          // 0 = min(backend max_concurrency, 8)
  bool sequential = false;  // force in-order, in-thread step execution
};

/// Decomposes the solution and verifies it under the given strategy: one
/// direct call for holistic strategies and single-step solutions, otherwise
/// one task per step executed by up to `workers` workers. Step verdicts are
/// ordered by index regardless of completion order.
SolutionVerdict verify_solution(const ProblemRecord& record, Strategy strategy,
                                Backend& backend, const TemplateSet& templates,
                                const VerifyOptions& options = {});

struct RunSummary {
  std::size_t processed = 0;
  std::size_t skipped_existing = 0;
  std::size_t failed_records = 0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t indeterminate = 0;
  UsageRollup usage;
  double total_cost = 0.0;
  double wallclock_seconds = 0.0;
  std::vector<std::string> failures;  // "<id>: <reason>"
};

/// Verifies every record not already stored for (strategy, backend). Step
/// tasks from all solutions share one queue; verdicts are aggregated and
/// stored in corpus order as their tasks complete. Per-record failures are
/// reported in the summary and skipped, never fatal.
RunSummary run_pipeline(const std::vector<ProblemRecord>& records,
                        Strategy strategy, Backend& backend,
                        const TemplateSet& templates, VerdictStore& store,
                        const VerifyOptions& options = {});

}  // namespace stepverify
