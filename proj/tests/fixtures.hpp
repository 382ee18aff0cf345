#pragma once

#include <string>
#include <vector>

#include "stepverify/corpus.hpp"
#include "stepverify/verifier.hpp"

namespace testutil {

// Engineered corpus + verdicts realizing chosen confusion matrices:
//   - 25 eight-step records e00..e24 (17 with flawed reasoning):
//       step-ec : tp=14 fp=2 fn=3 tn=6  -> F1 84.85% on the steps>7 stratum
//       judge-ec: tp=13 fp=6 fn=4 tn=2  -> F1 72.22% on the steps>7 stratum
//     (relative improvement +17.48% unrounded, +17.49% from the 2-decimal F1s)
//   - 5 three-step records s25..s29, all sound; step-ec misjudges s25.
// One step-ec verdict (e17) is indeterminate; under the pessimistic policy it
// scores as predicted-incorrect, exactly where an FP was planned.
struct EngineeredFixture {
  std::vector<stepverify::ProblemRecord> records;
  std::vector<stepverify::SolutionVerdict> verdicts;
};

inline stepverify::SolutionVerdict synth_verdict(const std::string& id,
                                                 stepverify::Strategy strategy,
                                                 stepverify::SolutionOutcome outcome,
                                                 std::size_t num_steps) {
  using namespace stepverify;
  SolutionVerdict verdict;
  verdict.record_id = id;
  verdict.strategy = strategy;
  verdict.backend_name = "mock";
  verdict.num_steps = num_steps;
  const std::size_t entries = is_step_strategy(strategy) ? num_steps : 1;
  for (std::size_t i = 1; i <= entries; ++i) {
    StepVerdict step;
    step.index = i;
    step.status = StepStatus::Judged;
    step.is_correct = true;
    if (i == entries) {
      if (outcome == SolutionOutcome::Incorrect) {
        step.is_correct = false;
        step.errors = {ErrorCategory::LogicalFallacy};
      } else if (outcome == SolutionOutcome::Indeterminate) {
        step.status = StepStatus::Unparseable;
      }
    }
    step.rationale = "synthetic";
    step.call = {200, 12, 0.05, 1, CallRecord::Outcome::Ok};
    verdict.usage.add(step.call);
    verdict.step_verdicts.push_back(std::move(step));
  }
  verdict.predicted_correct = outcome;
  verdict.wallclock_seconds = 0.05 * static_cast<double>(entries);
  return verdict;
}

inline EngineeredFixture engineered_fixture() {
  using namespace stepverify;
  EngineeredFixture fixture;
  const char* const sources[] = {"CMO", "IMO", "OpenMathReasoning"};

  const auto add_record = [&](const std::string& id, const std::string& source,
                              bool reasoning_ok, bool answer_ok,
                              std::optional<ErrorCategory> error) {
    ProblemRecord record;
    record.id = id;
    record.problem = "problem " + id;
    record.solution = "solution " + id;
    record.problem_type = ProblemType::AnswerFinding;
    record.generator_model = "mock-model";
    record.source = Source::from_string(source);
    record.reasoning_correct = reasoning_ok;
    record.answer_correct = answer_ok;
    record.error_type = error;
    fixture.records.push_back(std::move(record));
  };

  for (int i = 0; i < 25; ++i) {
    char id[8];
    std::snprintf(id, sizeof(id), "e%02d", i);
    const bool reasoning_ok = i >= 17;
    const bool answer_ok = i <= 9 || i >= 17;
    std::optional<ErrorCategory> error;
    if (!reasoning_ok) {
      if (i < 12) {
        error = ErrorCategory::LogicalFallacy;
      } else if (i < 16) {
        error = ErrorCategory::SolutionByGuess;
      } else {
        error = ErrorCategory::InequalityManipulation;
      }
    }
    add_record(id, sources[i % 3], reasoning_ok, answer_ok, error);

    // step-ec: predicted incorrect for e00..e13 (tp) and e17, e18 (fp);
    // e17 is the indeterminate one.
    SolutionOutcome step_outcome = SolutionOutcome::Correct;
    if (i <= 13 || i == 18) step_outcome = SolutionOutcome::Incorrect;
    if (i == 17) step_outcome = SolutionOutcome::Indeterminate;
    fixture.verdicts.push_back(synth_verdict(id, Strategy::StepEC, step_outcome, 8));

    // judge-ec: predicted incorrect for e00..e12 (tp) and e17..e22 (fp).
    const SolutionOutcome judge_outcome = (i <= 12 || (i >= 17 && i <= 22))
                                              ? SolutionOutcome::Incorrect
                                              : SolutionOutcome::Correct;
    fixture.verdicts.push_back(synth_verdict(id, Strategy::JudgeEC, judge_outcome, 8));
  }

  for (int i = 25; i < 30; ++i) {
    const std::string id = "s" + std::to_string(i);
    add_record(id, "CMO", true, true, std::nullopt);
    const SolutionOutcome step_outcome =
        i == 25 ? SolutionOutcome::Incorrect : SolutionOutcome::Correct;
    fixture.verdicts.push_back(synth_verdict(id, Strategy::StepEC, step_outcome, 3));
    fixture.verdicts.push_back(
        synth_verdict(id, Strategy::JudgeEC, SolutionOutcome::Correct, 3));
  }
  return fixture;
}

// 146 answer-finding records encoding the reference rates: 117 with a
// correct final answer, 58 of those with sound reasoning.
inline std::vector<stepverify::ProblemRecord> rate_table_fixture() {
  using namespace stepverify;
  std::vector<ProblemRecord> records;
  for (int i = 0; i < 146; ++i) {
    ProblemRecord record;
    record.id = "t" + std::to_string(i);
    record.problem = "p";
    record.solution = "s";
    record.problem_type = ProblemType::AnswerFinding;
    record.generator_model = "m";
    record.source = Source::from_string("CMO");
    record.answer_correct = i < 117;
    record.reasoning_correct = i < 58;  // sound only among the first 58
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace testutil
