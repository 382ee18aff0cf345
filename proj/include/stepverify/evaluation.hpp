#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "stepverify/backend.hpp"
#include "stepverify/corpus.hpp"
#include "stepverify/verifier.hpp"

namespace stepverify {

class EvaluationError : public std::runtime_error {
 public:
  explicit EvaluationError(const std::string& message)
      : std::runtime_error("evaluation: " + message) {}
};

/// How indeterminate predictions are scored. Pessimistic counts them as
/// predicted-incorrect (they land in tp/fp); Exclude drops them from the four
/// cells. Either way the indeterminate count is disclosed.
enum class IndeterminatePolicy { Pessimistic, Exclude };

std::string_view to_string(IndeterminatePolicy policy);
std::optional<IndeterminatePolicy> indeterminate_policy_from_string(std::string_view name);

/// Positive class: an incorrect solution.
struct ConfusionCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long tn = 0;
  long long indeterminate = 0;

  long long definite() const { return tp + fp + fn + tn; }
};

ConfusionCounts confusion(const std::map<std::string, SolutionOutcome>& predictions,
                          const std::map<std::string, bool>& reasoning_correct_truth,
                          IndeterminatePolicy policy = IndeterminatePolicy::Pessimistic);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // some denominator was zero and a convention applied
};

/// precision = tp/(tp+fp), recall = tp/(tp+fn), f1 their harmonic mean.
/// All-zero confusion yields f1 = 1 (vacuous agreement); any other zero
/// denominator yields 0. Degenerate cells are flagged.
Metrics prf1(const ConfusionCounts& counts);

/// Percentage of records with answer_correct = true among those carrying the
/// label; absent when none do.
std::optional<double> answer_rate(std::span<const ProblemRecord> records);

/// Among records with answer_correct = true, the percentage whose reasoning
/// is labeled correct; absent when there are no correct answers.
std::optional<double> sound_among_correct(std::span<const ProblemRecord> records);

/// 100 * (f1_new - f1_base) / f1_base. Throws on a non-positive baseline.
double relative_improvement(double f1_new, double f1_base);

struct MetricRow {
  std::string strategy;
  std::string label;  // stratum: source name, "Overall", or "steps>t"
  ConfusionCounts counts;
  Metrics metrics;
};

/// Per (strategy, threshold) metrics over records whose decomposed step count
/// exceeds the threshold.
std::vector<MetricRow> stratify_by_steps(
    const std::vector<SolutionVerdict>& verdicts,
    const std::map<std::string, bool>& reasoning_correct_truth,
    const std::vector<int>& thresholds,
    IndeterminatePolicy policy = IndeterminatePolicy::Pessimistic);

struct ReportOptions {
  std::vector<int> step_thresholds;                       // e.g. {7, 9}
  std::optional<std::pair<std::string, std::string>> compare;  // (base, new) strategy names
  IndeterminatePolicy policy = IndeterminatePolicy::Pessimistic;
  bool macro_overall = false;  // average per-source F1 instead of pooling counts
  std::map<std::string, BackendProfile> profiles;  // for the cost column
};

struct Report {
  std::string text;
  nlohmann::ordered_json data;  // mirrors every cell of the text report
};

/// Renders the evaluation report: corpus rates, per-source F1 and cost per
/// strategy, step strata, optional strategy comparison, runtime rollup, step
/// distribution and error-category distribution. Ordering is deterministic.
Report build_report(const std::vector<ProblemRecord>& records,
                    const std::vector<SolutionVerdict>& verdicts,
                    const ReportOptions& options = {});

}  // namespace stepverify
