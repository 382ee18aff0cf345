// Acceptance suite: one criterion per entry, one PASS/FAIL line each,
// nonzero exit if anything fails or overruns its time budget.

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "fixtures.hpp"
#include "stepverify/backend.hpp"
#include "stepverify/evaluation.hpp"
#include "stepverify/prompting.hpp"
#include "stepverify/segmenter.hpp"
#include "stepverify/verdict_store.hpp"
#include "stepverify/verifier.hpp"
#include "test_util.hpp"

using namespace stepverify;
using testutil::TempDir;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool condition, const std::string& message) {
  if (!condition) throw CheckFailure(message);
}

void expect_near(double actual, double wanted, double tolerance,
                 const std::string& what) {
  if (std::abs(actual - wanted) > tolerance) {
    std::ostringstream oss;
    oss << what << ": got " << actual << ", wanted " << wanted << " +/- " << tolerance;
    throw CheckFailure(oss.str());
  }
}

BackendProfile mock_profile(int max_concurrency = 8) {
  BackendProfile profile;
  profile.name = "mock";
  profile.kind = BackendKind::Mock;
  profile.max_retries = 1;
  profile.max_concurrency = max_concurrency;
  return profile;
}

// ---- criterion bodies -----------------------------------------------------

void table1_rates() {
  const auto records = testutil::rate_table_fixture();
  expect(records.size() == 146, "fixture must have 146 answer-finding records");
  const auto rate = answer_rate(records);
  expect(rate.has_value(), "answer rate must be defined");
  expect_near(*rate, 80.1, 0.05, "answer correctness rate");
  const auto sound = sound_among_correct(records);
  expect(sound.has_value(), "sound-among-correct must be defined");
  expect_near(*sound, 49.6, 0.05, "sound reasoning among correct answers");
}

void relative_improvement_pair() {
  expect_near(relative_improvement(84.85, 72.22), 17.49, 0.01, "first delta");
  expect_near(relative_improvement(85.71, 66.67), 28.56, 0.01, "second delta");
}

void verification_forms_agree() {
  for (int mask = 0; mask < 16; ++mask) {
    bool flags[4];
    for (int j = 0; j < 4; ++j) flags[j] = (mask >> j) & 1;
    const bool by_count = step_correct_from_error_count(flags);
    const bool by_product = step_correct_from_error_product(flags);
    expect(by_count == by_product, "forms disagree on mask " + std::to_string(mask));
    expect(by_count == (mask == 0), "wrong value on mask " + std::to_string(mask));
  }
}

void aggregation_law() {
  std::mt19937_64 rng(20250810);
  std::uniform_int_distribution<int> length(1, 12);
  std::uniform_int_distribution<int> kind(0, 5);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<StepVerdict> verdicts;
    const int n = length(rng);
    for (int i = 0; i < n; ++i) {
      StepVerdict verdict;
      verdict.index = static_cast<std::size_t>(i) + 1;
      switch (kind(rng)) {
        case 0: verdict.status = StepStatus::Unparseable; break;
        case 1: verdict.status = StepStatus::BackendFailed; break;
        default:
          verdict.status = StepStatus::Judged;
          verdict.is_correct = kind(rng) < 4;
          break;
      }
      verdicts.push_back(verdict);
    }
    const bool all_judged_true =
        std::all_of(verdicts.begin(), verdicts.end(), [](const StepVerdict& v) {
          return v.status == StepStatus::Judged && v.is_correct;
        });
    expect((aggregate(verdicts) == SolutionOutcome::Correct) == all_judged_true,
           "correct iff every step judged true");

    std::vector<std::size_t> judged_true;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
      if (verdicts[i].status == StepStatus::Judged && verdicts[i].is_correct) {
        judged_true.push_back(i);
      }
    }
    if (!judged_true.empty()) {
      auto flipped = verdicts;
      const auto pick = judged_true[rng() % judged_true.size()];
      flipped[pick].is_correct = false;
      expect(aggregate(flipped) == SolutionOutcome::Incorrect,
             "flipping a judged-true step must yield incorrect");
    }
  }
}

std::string random_text(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_paragraphs(1, 9);
  std::uniform_int_distribution<int> n_words(1, 28);
  std::uniform_int_distribution<int> kind(0, 5);
  std::string text;
  const int paragraphs = n_paragraphs(rng);
  for (int p = 0; p < paragraphs; ++p) {
    if (p > 0) {
      switch (kind(rng) % 4) {
        case 0: text += "\n\n"; break;
        case 1: text += "\n\t \n"; break;
        case 2: text += "\r\n\r\n"; break;
        case 3: text += "\n\n\n"; break;
      }
    }
    if (kind(rng) == 0) text += std::to_string(p + 1) + ". ";
    if (kind(rng) == 1) text += "- ";
    const int words = n_words(rng);
    for (int w = 0; w < words; ++w) {
      if (w > 0) text += ' ';
      text += (kind(rng) == 2) ? "x\xc2\xb2=y" : "word" + std::to_string(w);
    }
    if (kind(rng) == 3) text += "\ncontinuation line without a gap";
  }
  return text;
}

void decomposition_soundness() {
  std::mt19937_64 rng(424243);
  std::uniform_int_distribution<int> theta_dist(1, 30);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string text = random_text(rng);
    const int theta = theta_dist(rng);
    const auto sequence = decompose(text, {theta, BoundaryMode::Hybrid});
    expect(reconstruct(sequence) == text, "reconstruction must be byte-exact");
    for (std::size_t i = 0; i + 1 < sequence.steps.size(); ++i) {
      expect(token_length(sequence.steps[i]) >= static_cast<std::size_t>(theta),
             "non-final step shorter than theta");
    }
    const auto coarser = decompose(text, {theta + 9, BoundaryMode::Hybrid});
    expect(coarser.steps.size() <= sequence.steps.size(),
           "step count must be non-increasing in theta");
  }
}

std::vector<ProblemRecord> mock_corpus(int records, int min_steps, int max_steps) {
  std::vector<ProblemRecord> corpus;
  for (int i = 0; i < records; ++i) {
    const int steps = min_steps + (max_steps > min_steps ? i % (max_steps - min_steps + 1) : 0);
    auto record = testutil::make_record("rec-" + std::to_string(i), "CMO", steps);
    record.reasoning_correct = i % 2 == 0;
    corpus.push_back(record);
  }
  return corpus;
}

void parallel_determinism() {
  const auto records = mock_corpus(20, 1, 5);
  const auto templates = builtin_templates();

  // Script a deterministic mix of verdicts keyed by the exact prompts.
  ScriptedBackend::Script script;
  for (const auto& record : records) {
    const auto sequence = decompose(record.solution, {});
    for (std::size_t i = 1; i <= sequence.steps.size(); ++i) {
      if ((i + record.id.size()) % 3 == 0) {
        const auto prompt = render_step_prompt(
            templates.step_ec, Strategy::StepEC,
            build_context(sequence, record.problem, i));
        script[ScriptedBackend::fingerprint(prompt)] = {
            "VERDICT: INCORRECT\nERRORS: LogicalFallacy"};
      }
    }
  }

  std::vector<std::vector<std::string>> runs;
  for (const int workers : {1, 4, 8}) {
    TempDir dir;
    ScriptedBackend backend(mock_profile(16), script);
    VerdictStore store(dir.file("v.jsonl"));
    VerifyOptions options;
    options.workers = workers;
    const auto summary =
        run_pipeline(records, Strategy::StepEC, backend, templates, store, options);
    expect(summary.processed == 20, "all records must be processed");
    runs.push_back(testutil::normalized_store_lines(dir.file("v.jsonl")));
  }
  expect(runs[0] == runs[1] && runs[1] == runs[2],
         "stored verdicts must be byte-identical across worker counts");
}

void parallel_speedup() {
  const auto records = mock_corpus(6, 8, 8);
  const auto templates = builtin_templates();
  const auto timed_run = [&](int workers, bool sequential) {
    TempDir dir;
    ScriptedBackend backend(mock_profile(64), {}, "VERDICT: CORRECT",
                            std::chrono::milliseconds(100));
    VerdictStore store(dir.file("v.jsonl"));
    VerifyOptions options;
    options.workers = workers;
    options.sequential = sequential;
    const auto start = std::chrono::steady_clock::now();
    run_pipeline(records, Strategy::StepEC, backend, templates, store, options);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  };

  const double w1 = timed_run(1, false);
  const double w8 = timed_run(8, false);
  const double sequential = timed_run(0, true);
  std::ostringstream oss;
  oss << "w1=" << w1 << "s w8=" << w8 << "s seq=" << sequential << "s";
  expect(w8 <= 0.5 * w1, "8 workers must at least halve the wallclock (" + oss.str() + ")");
  expect(sequential >= w8, "sequential mode must not beat 8 workers (" + oss.str() + ")");
}

void call_count_law() {
  const auto templates = builtin_templates();
  for (int n = 1; n <= 6; ++n) {
    const auto record = testutil::make_record("n" + std::to_string(n), "CMO", n);
    for (const Strategy strategy : {Strategy::StepNoEC, Strategy::StepEC}) {
      ScriptedBackend backend(mock_profile(), {});
      verify_solution(record, strategy, backend, templates, {});
      expect(backend.calls() == n,
             "step strategy on " + std::to_string(n) + " steps must make " +
                 std::to_string(n) + " calls, made " + std::to_string(backend.calls()));
    }
    for (const Strategy strategy : {Strategy::Judge, Strategy::JudgeEC}) {
      ScriptedBackend backend(mock_profile(), {});
      verify_solution(record, strategy, backend, templates, {});
      expect(backend.calls() == 1, "holistic strategies must make exactly 1 call");
    }
  }
}

void metrics_oracle() {
  std::mt19937_64 rng(97531);
  std::uniform_int_distribution<int> n_records(1, 12);
  std::uniform_int_distribution<int> outcome(0, 2);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, bool> truth;
    std::map<std::string, SolutionOutcome> predictions;
    const int n = n_records(rng);
    for (int i = 0; i < n; ++i) {
      const std::string id = "u" + std::to_string(i);
      truth[id] = coin(rng) == 1;
      predictions[id] = static_cast<SolutionOutcome>(outcome(rng));
    }

    // Exhaustive per-record set-membership computation.
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;
    long long indeterminate = 0;
    for (const auto& [id, prediction] : predictions) {
      const bool gt_incorrect = !truth.at(id);
      const bool pred_incorrect = prediction == SolutionOutcome::Incorrect ||
                                  prediction == SolutionOutcome::Indeterminate;
      if (prediction == SolutionOutcome::Indeterminate) ++indeterminate;
      if (pred_incorrect && gt_incorrect) ++tp;
      if (pred_incorrect && !gt_incorrect) ++fp;
      if (!pred_incorrect && gt_incorrect) ++fn;
      if (!pred_incorrect && !gt_incorrect) ++tn;
    }

    const auto counts = confusion(predictions, truth, IndeterminatePolicy::Pessimistic);
    expect(counts.tp == tp && counts.fp == fp && counts.fn == fn && counts.tn == tn &&
               counts.indeterminate == indeterminate,
           "confusion cells must match brute force");

    const Metrics metrics = prf1(counts);
    if (tp + fp == 0 && fn == 0) continue;  // degenerate convention, checked elsewhere
    const double precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
    const double f1 =
        precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    expect(std::abs(metrics.precision - precision) < 1e-12, "precision mismatch");
    expect(std::abs(metrics.recall - recall) < 1e-12, "recall mismatch");
    expect(std::abs(metrics.f1 - f1) < 1e-12, "f1 mismatch");
  }
}

void report_golden_file() {
  const auto fixture = testutil::engineered_fixture();
  ReportOptions options;
  options.step_thresholds = {7, 9};
  options.compare = {{"judge-ec", "step-ec"}};
  BackendProfile mock;
  mock.name = "mock";
  mock.price_in = 100.0;
  mock.price_out = 400.0;
  options.profiles["mock"] = mock;

  const Report report = build_report(fixture.records, fixture.verdicts, options);
  const auto golden_path =
      std::filesystem::path(STEPVERIFY_GOLDEN_DIR) / "engineered_report.txt";
  const std::string golden = testutil::read_file(golden_path);
  expect(!golden.empty(), "golden file missing: " + golden_path.string());
  expect(report.text == golden, "report text deviates from the golden file");
}

void end_to_end_resume() {
  TempDir dir;
  const auto records = mock_corpus(20, 1, 1);
  save_corpus(dir.file("corpus.jsonl"), records);
  testutil::write_file(dir.file("profiles.json"), R"({"profiles":[
    {"name":"mock","kind":"mock","mock_latency_ms":150,"max_concurrency":1}]})");

  std::vector<std::string> args = {
      "verify",
      "--corpus",    dir.file("corpus.jsonl").string(),
      "--store",     dir.file("store.jsonl").string(),
      "--templates", STEPVERIFY_TEMPLATES_DIR,
      "--profiles",  dir.file("profiles.json").string(),
      "--backend",   "mock",
      "--strategy",  "step-ec",
      "--workers",   "1",
  };

  std::fflush(stdout);
  std::fflush(stderr);
  const pid_t pid = fork();
  expect(pid >= 0, "fork failed");
  if (pid == 0) {
    std::vector<char*> argv;
    std::string bin = STEPVERIFY_CLI_PATH;
    argv.push_back(bin.data());
    for (auto& arg : args) argv.push_back(arg.data());
    argv.push_back(nullptr);
    const int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) {
      dup2(devnull, STDOUT_FILENO);
      dup2(devnull, STDERR_FILENO);
    }
    execv(STEPVERIFY_CLI_PATH, argv.data());
    _exit(127);
  }
  usleep(1'000'000);  // let roughly a third of the corpus land
  kill(pid, SIGKILL);
  int status = 0;
  waitpid(pid, &status, 0);

  std::size_t stored_after_kill = 0;
  {
    VerdictStore store(dir.file("store.jsonl"));
    stored_after_kill = store.size();
  }
  expect(stored_after_kill >= 1, "the interrupted run should have stored something");
  expect(stored_after_kill < 20, "the interrupted run must not have finished");

  std::string command = std::string(STEPVERIFY_CLI_PATH);
  for (const auto& arg : args) command += " " + arg;
  command += " > " + dir.file("resume.out").string() + " 2>&1";
  const int rc = std::system(command.c_str());
  expect(WIFEXITED(rc) && WEXITSTATUS(rc) == 0, "resume run must exit 0");

  const std::string output = testutil::read_file(dir.file("resume.out"));
  expect(output.find("skipped (already stored): " + std::to_string(stored_after_kill)) !=
             std::string::npos,
         "resume must skip exactly the stored records");

  VerdictStore store(dir.file("store.jsonl"));  // throws on any duplicate key
  expect(store.size() == 20, "resume must complete the corpus without duplicates");
  expect(store.torn_lines() <= 1, "at most the torn tail may be dropped");
}

// ---- driver ---------------------------------------------------------------

struct Criterion {
  int id;
  std::string name;
  double time_limit_seconds;
  std::function<void()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "answer-rate and soundness rates from the 146-record fixture", 1.0, table1_rates},
      {2, "relative improvement on the reference F1 pairs", 1.0, relative_improvement_pair},
      {3, "error-count and product verification forms agree on all 16 vectors", 1.0,
       verification_forms_agree},
      {4, "aggregation law over 10000 random verdict lists", 5.0, aggregation_law},
      {5, "decomposition soundness over 1000 random texts", 10.0, decomposition_soundness},
      {6, "stored verdicts identical for W in {1,4,8}", 30.0, parallel_determinism},
      {7, "parallel speedup ordering on the latency mock", 60.0, parallel_speedup},
      {8, "call-count law for n in 1..6", 5.0, call_count_law},
      {9, "confusion and F1 match brute force on 200 random universes", 5.0, metrics_oracle},
      {10, "report/compare path matches the golden file", 5.0, report_golden_file},
      {11, "kill and resume completes the corpus without duplicates", 30.0,
       end_to_end_resume},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      criterion.run();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = elapsed <= criterion.time_limit_seconds;
    const bool passed = error.empty() && in_budget;
    if (!passed) ++failures;
    std::printf("%s  criterion %2d: %s  [%.2fs/%.0fs]%s%s\n", passed ? "PASS" : "FAIL",
                criterion.id, criterion.name.c_str(), elapsed,
                criterion.time_limit_seconds, error.empty() ? "" : " -- ",
                error.c_str());
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
