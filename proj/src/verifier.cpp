#include "stepverify/verifier.hpp"

#include <algorithm>
#include <chrono>
#include <future>

#include "stepverify/thread_pool.hpp"
#include "stepverify/verdict_store.hpp"

namespace stepverify {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

CallRecord merge_calls(const CallRecord& first, const CallRecord& second) {
  CallRecord merged;
  merged.prompt_tokens = first.prompt_tokens + second.prompt_tokens;
  merged.completion_tokens = first.completion_tokens + second.completion_tokens;
  merged.latency_seconds = first.latency_seconds + second.latency_seconds;
  merged.attempts = first.attempts + second.attempts;
  merged.outcome = second.outcome;
  return merged;
}

// One backend round trip plus verdict parsing; retries an unparseable
// response once with an appended format reminder.
StepVerdict judge_prompt(const std::string& prompt, Strategy strategy,
                         Backend& backend, std::size_t index) {
  StepVerdict verdict;
  verdict.index = index;

  CompletionResult completion;
  try {
    completion = backend.complete(prompt);
  } catch (const BackendError& e) {
    verdict.status = StepStatus::BackendFailed;
    verdict.rationale = e.what();
    verdict.call = e.record;
    return verdict;
  }
  verdict.call = completion.record;
  verdict.rationale = completion.text;

  ParsedVerdict parsed;
  try {
    parsed = parse_verdict(completion.text, strategy);
  } catch (const UnparseableError&) {
    CompletionResult retry;
    try {
      retry = backend.complete(prompt + "\n\n" + format_reminder());
    } catch (const BackendError& e) {
      verdict.status = StepStatus::BackendFailed;
      verdict.rationale = e.what();
      verdict.call = merge_calls(verdict.call, e.record);
      return verdict;
    }
    verdict.call = merge_calls(verdict.call, retry.record);
    verdict.rationale = retry.text;
    try {
      parsed = parse_verdict(retry.text, strategy);
    } catch (const UnparseableError&) {
      verdict.status = StepStatus::Unparseable;
      return verdict;
    }
  }

  verdict.status = StepStatus::Judged;
  verdict.errors = std::move(parsed.errors);
  verdict.unknown_labels = std::move(parsed.unknown_labels);
  verdict.is_correct = parsed.is_correct && verdict.errors.empty();
  return verdict;
}

std::vector<std::string> build_prompts(const ProblemRecord& record,
                                       const StepSequence& sequence,
                                       Strategy strategy,
                                       const TemplateSet& templates) {
  const std::size_t n = sequence.steps.size();
  if (!is_step_strategy(strategy)) {
    return {render_judge_prompt(templates.for_strategy(strategy), strategy,
                                record.problem, record.solution)};
  }
  std::vector<std::string> prompts;
  prompts.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    prompts.push_back(render_step_prompt(templates.for_strategy(strategy), strategy,
                                         build_context(sequence, record.problem, i)));
  }
  return prompts;
}

SolutionVerdict assemble(const ProblemRecord& record, Strategy strategy,
                         Backend& backend, std::size_t num_steps,
                         std::vector<StepVerdict> steps, double wallclock) {
  SolutionVerdict verdict;
  verdict.record_id = record.id;
  verdict.strategy = strategy;
  verdict.backend_name = backend.profile().name;
  verdict.num_steps = num_steps;
  verdict.step_verdicts = std::move(steps);
  verdict.predicted_correct = aggregate(verdict.step_verdicts);
  verdict.wallclock_seconds = wallclock;
  for (const StepVerdict& step : verdict.step_verdicts) verdict.usage.add(step.call);
  return verdict;
}

int effective_workers(const VerifyOptions& options, const Backend& backend) {
  if (options.sequential) return 1;
  if (options.workers > 0) return options.workers;
  return std::min(backend.profile().max_concurrency, 8);
}

}  // namespace

std::string_view to_string(StepStatus status) {
  switch (status) {
    case StepStatus::Judged: return "judged";
    case StepStatus::Unparseable: return "unparseable";
    case StepStatus::BackendFailed: return "backend_failed";
  }
  return "backend_failed";
}

std::optional<StepStatus> step_status_from_string(std::string_view name) {
  if (name == "judged") return StepStatus::Judged;
  if (name == "unparseable") return StepStatus::Unparseable;
  if (name == "backend_failed") return StepStatus::BackendFailed;
  return std::nullopt;
}

std::string_view to_string(SolutionOutcome outcome) {
  switch (outcome) {
    case SolutionOutcome::Correct: return "correct";
    case SolutionOutcome::Incorrect: return "incorrect";
    case SolutionOutcome::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

std::optional<SolutionOutcome> solution_outcome_from_string(std::string_view name) {
  if (name == "correct") return SolutionOutcome::Correct;
  if (name == "incorrect") return SolutionOutcome::Incorrect;
  if (name == "indeterminate") return SolutionOutcome::Indeterminate;
  return std::nullopt;
}

void UsageRollup::add(const CallRecord& record) {
  ++calls;
  retries += std::max(0, record.attempts - 1);
  prompt_tokens += record.prompt_tokens;
  completion_tokens += record.completion_tokens;
  latency_seconds += record.latency_seconds;
}

bool step_correct_from_error_count(std::span<const bool> error_flags) {
  int fired = 0;
  for (bool flag : error_flags) fired += flag ? 1 : 0;
  return fired == 0;
}

bool step_correct_from_error_product(std::span<const bool> error_flags) {
  int product = 1;
  for (bool flag : error_flags) product *= 1 - (flag ? 1 : 0);
  return product == 1;
}

SolutionOutcome aggregate(std::span<const StepVerdict> verdicts) {
  if (verdicts.empty()) {
    throw std::invalid_argument("aggregate: empty verdict list");
  }
  bool any_unjudged = false;
  for (const StepVerdict& verdict : verdicts) {
    if (verdict.status != StepStatus::Judged) {
      any_unjudged = true;
    } else if (!verdict.is_correct) {
      return SolutionOutcome::Incorrect;  // any judged false annihilates
    }
  }
  return any_unjudged ? SolutionOutcome::Indeterminate : SolutionOutcome::Correct;
}

StepVerdict verify_step(const AnalysisContext& context, Strategy strategy,
                        Backend& backend, const TemplateSet& templates) {
  if (!is_step_strategy(strategy)) {
    throw PromptingError("verify_step requires a step strategy");
  }
  const std::string prompt =
      render_step_prompt(templates.for_strategy(strategy), strategy, context);
  return judge_prompt(prompt, strategy, backend, context.index);
}

SolutionVerdict verify_solution(const ProblemRecord& record, Strategy strategy,
                                Backend& backend, const TemplateSet& templates,
                                const VerifyOptions& options) {
  const auto start = Clock::now();
  const StepSequence sequence = decompose(record.solution, options.segmenter);
  const std::size_t n = sequence.steps.size();
  const std::vector<std::string> prompts =
      build_prompts(record, sequence, strategy, templates);

  std::vector<StepVerdict> steps;
  if (prompts.size() == 1) {
    // Direct path: holistic strategies and single-step solutions.
    steps.push_back(judge_prompt(prompts[0], strategy, backend, 1));
  } else {
    const int workers =
        std::min<int>(effective_workers(options, backend), static_cast<int>(n));
    if (workers <= 1) {
      for (std::size_t i = 0; i < prompts.size(); ++i) {
        steps.push_back(judge_prompt(prompts[i], strategy, backend, i + 1));
      }
    } else {
      ThreadPool pool(static_cast<std::size_t>(workers));
      std::vector<std::future<StepVerdict>> futures;
      futures.reserve(prompts.size());
      for (std::size_t i = 0; i < prompts.size(); ++i) {
        futures.push_back(pool.submit([&prompts, i, strategy, &backend] {
          return judge_prompt(prompts[i], strategy, backend, i + 1);
        }));
      }
      for (auto& future : futures) steps.push_back(future.get());
    }
  }
  return assemble(record, strategy, backend, n, std::move(steps),
                  seconds_since(start));
}

RunSummary run_pipeline(const std::vector<ProblemRecord>& records,
                        Strategy strategy, Backend& backend,
                        const TemplateSet& templates, VerdictStore& store,
                        const VerifyOptions& options) {
  const auto start = Clock::now();
  RunSummary summary;
  const std::string strategy_name{to_string(strategy)};
  const std::string backend_name = backend.profile().name;

  struct Pending {
    const ProblemRecord* record = nullptr;
    std::size_t num_steps = 0;
    std::vector<std::string> prompts;
    std::vector<std::future<StepVerdict>> futures;
    std::string failure;
  };

  std::vector<Pending> pending;
  pending.reserve(records.size());
  for (const ProblemRecord& record : records) {
    if (store.contains({record.id, strategy_name, backend_name})) {
      ++summary.skipped_existing;
      continue;
    }
    Pending item;
    item.record = &record;
    try {
      const StepSequence sequence = decompose(record.solution, options.segmenter);
      item.num_steps = sequence.steps.size();
      item.prompts = build_prompts(record, sequence, strategy, templates);
    } catch (const std::exception& e) {
      item.failure = e.what();
    }
    pending.push_back(std::move(item));
  }

  const int workers = effective_workers(options, backend);
  std::optional<ThreadPool> pool;
  if (workers > 1) {
    pool.emplace(static_cast<std::size_t>(workers));
    // Step tasks from all solutions share the pool's single queue.
    for (Pending& item : pending) {
      if (!item.failure.empty()) continue;
      item.futures.reserve(item.prompts.size());
      for (std::size_t i = 0; i < item.prompts.size(); ++i) {
        item.futures.push_back(
            pool->submit([&item, i, strategy, &backend] {
              return judge_prompt(item.prompts[i], strategy, backend, i + 1);
            }));
      }
    }
  }

  for (Pending& item : pending) {
    const ProblemRecord& record = *item.record;
    if (!item.failure.empty()) {
      ++summary.failed_records;
      summary.failures.push_back(record.id + ": " + item.failure);
      continue;
    }
    std::vector<StepVerdict> steps;
    steps.reserve(item.prompts.size());
    if (workers > 1) {
      for (auto& future : item.futures) steps.push_back(future.get());
    } else {
      for (std::size_t i = 0; i < item.prompts.size(); ++i) {
        steps.push_back(judge_prompt(item.prompts[i], strategy, backend, i + 1));
      }
    }
    SolutionVerdict verdict = assemble(record, strategy, backend, item.num_steps,
                                       std::move(steps), 0.0);
    verdict.wallclock_seconds = verdict.usage.latency_seconds;
    try {
      store.store(verdict);
    } catch (const std::exception& e) {
      ++summary.failed_records;
      summary.failures.push_back(record.id + ": " + e.what());
      continue;
    }
    ++summary.processed;
    switch (verdict.predicted_correct) {
      case SolutionOutcome::Correct: ++summary.correct; break;
      case SolutionOutcome::Incorrect: ++summary.incorrect; break;
      case SolutionOutcome::Indeterminate: ++summary.indeterminate; break;
    }
    for (const StepVerdict& step : verdict.step_verdicts) {
      summary.usage.add(step.call);
      summary.total_cost +=
          estimate_cost(std::span(&step.call, 1), backend.profile());
    }
  }

  summary.wallclock_seconds = seconds_since(start);
  return summary;
}

}  // namespace stepverify
