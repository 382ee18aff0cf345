#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "stepverify/backend.hpp"
#include "stepverify/corpus.hpp"
#include "stepverify/evaluation.hpp"
#include "stepverify/prompting.hpp"
#include "stepverify/segmenter.hpp"
#include "stepverify/verdict_store.hpp"
#include "stepverify/verifier.hpp"

namespace sv = stepverify;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

struct CommonOptions {
  std::string corpus_path;
  std::string store_path;
  std::string templates_dir = "templates";
  std::string profiles_path;
  std::string strategy = "step-ec";
  std::string backend = "mock";
  std::string boundary = "hybrid";
  std::string indeterminate = "pessimistic";
  int workers = 0;
  int theta = 12;
  bool sequential = false;
  bool strict = false;
  std::uint64_t seed = 0;
};

sv::Strategy parse_strategy(const std::string& name) {
  const auto strategy = sv::strategy_from_string(name);
  if (!strategy) throw CLI::ValidationError("--strategy", "unknown strategy '" + name + "'");
  return *strategy;
}

sv::SegmenterConfig segmenter_config(const CommonOptions& options) {
  const auto mode = sv::boundary_mode_from_string(options.boundary);
  if (!mode) throw CLI::ValidationError("--boundary", "unknown mode '" + options.boundary + "'");
  if (options.theta < 1) throw CLI::ValidationError("--theta", "must be >= 1");
  return {options.theta, *mode};
}

std::vector<sv::ProblemRecord> load_records(const CommonOptions& options) {
  const auto result = sv::load_corpus(options.corpus_path, options.strict);
  for (const auto& issue : result.skipped) {
    std::cerr << "skipped line " << issue.line << ": " << issue.message << "\n";
  }
  return result.records;
}

sv::BackendProfile find_profile(const CommonOptions& options) {
  if (options.profiles_path.empty()) {
    if (options.backend == "mock") {
      sv::BackendProfile profile;
      profile.name = "mock";
      profile.kind = sv::BackendKind::Mock;
      return profile;
    }
    throw CLI::ValidationError("--profiles", "required for backend '" + options.backend + "'");
  }
  for (const auto& profile : sv::load_profiles(options.profiles_path)) {
    if (profile.name == options.backend) return profile;
  }
  throw CLI::ValidationError("--backend", "no profile named '" + options.backend + "'");
}

std::map<std::string, sv::BackendProfile> all_profiles(const CommonOptions& options) {
  std::map<std::string, sv::BackendProfile> profiles;
  if (options.profiles_path.empty()) return profiles;
  for (const auto& profile : sv::load_profiles(options.profiles_path)) {
    profiles[profile.name] = profile;
  }
  return profiles;
}

std::set<std::string> id_set(const std::vector<sv::ProblemRecord>& records) {
  std::set<std::string> ids;
  for (const auto& record : records) ids.insert(record.id);
  return ids;
}

int cmd_verify(const CommonOptions& options) {
  const sv::Strategy strategy = parse_strategy(options.strategy);
  const sv::BackendProfile profile = find_profile(options);
  if (profile.kind == sv::BackendKind::Http && !profile.auth_env.empty() &&
      std::getenv(profile.auth_env.c_str()) == nullptr) {
    std::cerr << "error: credential variable " << profile.auth_env << " is not set\n";
    return kExitConfig;
  }

  const sv::TemplateSet templates = sv::load_templates(options.templates_dir);
  const auto backend = sv::make_backend(profile, {}, options.seed);

  std::vector<sv::ProblemRecord> records;
  try {
    records = load_records(options);
  } catch (const sv::CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }

  sv::VerdictStore store(options.store_path, id_set(records));
  sv::VerifyOptions verify_options;
  verify_options.segmenter = segmenter_config(options);
  verify_options.workers = options.workers;
  verify_options.sequential = options.sequential;

  const sv::RunSummary summary = sv::run_pipeline(records, strategy, *backend,
                                                  templates, store, verify_options);

  std::cout << "strategy: " << sv::to_string(strategy) << "\n"
            << "backend: " << profile.name << "\n"
            << "processed: " << summary.processed << "\n"
            << "skipped (already stored): " << summary.skipped_existing << "\n"
            << "failed records: " << summary.failed_records << "\n"
            << "correct: " << summary.correct << "\n"
            << "incorrect: " << summary.incorrect << "\n"
            << "indeterminate: " << summary.indeterminate << "\n"
            << "calls: " << summary.usage.calls << " (retries " << summary.usage.retries
            << ")\n"
            << "tokens: " << summary.usage.prompt_tokens << " in / "
            << summary.usage.completion_tokens << " out\n"
            << "estimated cost ($): " << summary.total_cost << "\n"
            << "wallclock (s): " << summary.wallclock_seconds << "\n";
  for (const auto& failure : summary.failures) {
    std::cerr << "record failed: " << failure << "\n";
  }
  return kExitOk;
}

int cmd_decompose(const CommonOptions& options, const std::string& record_id) {
  std::vector<sv::ProblemRecord> records;
  try {
    records = load_records(options);
  } catch (const sv::CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  const auto it =
      std::find_if(records.begin(), records.end(),
                   [&](const sv::ProblemRecord& r) { return r.id == record_id; });
  if (it == records.end()) {
    std::cerr << "error: no record with id '" << record_id << "'\n";
    return kExitData;
  }
  const sv::StepSequence sequence = sv::decompose(it->solution, segmenter_config(options));
  for (std::size_t i = 0; i < sequence.steps.size(); ++i) {
    std::cout << "step " << (i + 1) << " [" << sv::token_length(sequence.steps[i])
              << " tokens]\n"
              << sequence.steps[i] << "\n";
    if (i + 1 < sequence.steps.size()) std::cout << "----\n";
  }
  return kExitOk;
}

struct EvaluateOptions {
  std::string by_steps;
  std::vector<std::string> compare;
  bool macro = false;
  std::string out_path;
  std::string json_path;
};

std::vector<int> parse_thresholds(const std::string& text) {
  std::vector<int> thresholds;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) thresholds.push_back(std::stoi(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return thresholds;
}

int cmd_report(const CommonOptions& options, const EvaluateOptions& eval) {
  std::vector<sv::ProblemRecord> records;
  try {
    records = load_records(options);
  } catch (const sv::CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }

  if (!std::filesystem::exists(options.store_path)) {
    std::cerr << "error: verdict store '" << options.store_path << "' does not exist\n";
    return kExitData;
  }
  sv::VerdictStore store(options.store_path);
  const auto verdicts = store.all();
  if (verdicts.empty()) {
    std::cerr << "error: verdict store is empty\n";
    return kExitData;
  }

  sv::ReportOptions report_options;
  report_options.step_thresholds = parse_thresholds(eval.by_steps);
  if (!eval.compare.empty()) {
    report_options.compare = {eval.compare[0], eval.compare[1]};
  }
  const auto policy = sv::indeterminate_policy_from_string(options.indeterminate);
  if (!policy) {
    std::cerr << "error: unknown indeterminate policy '" << options.indeterminate << "'\n";
    return kExitConfig;
  }
  report_options.policy = *policy;
  report_options.macro_overall = eval.macro;
  report_options.profiles = all_profiles(options);

  const sv::Report report = sv::build_report(records, verdicts, report_options);
  if (eval.out_path.empty()) {
    std::cout << report.text;
  } else {
    std::ofstream out(eval.out_path);
    out << report.text;
  }
  if (!eval.json_path.empty()) {
    std::ofstream out(eval.json_path);
    out << report.data.dump(2) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Step-by-step verification of model-generated math solutions"};
  app.require_subcommand(1);

  CommonOptions options;
  EvaluateOptions eval;
  std::string record_id;
  std::string compare_base;
  std::string compare_new;

  const auto add_common = [&](CLI::App* cmd, bool needs_corpus, bool needs_store) {
    auto* corpus =
        cmd->add_option("--corpus", options.corpus_path, "corpus file (one record per line)");
    if (needs_corpus) corpus->required()->check(CLI::ExistingFile);
    auto* store = cmd->add_option("--store", options.store_path, "verdict log path");
    if (needs_store) store->required();
    cmd->add_option("--templates", options.templates_dir, "template directory");
    cmd->add_option("--profiles", options.profiles_path, "backend profiles file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--theta", options.theta, "minimum step length in tokens");
    cmd->add_option("--boundary", options.boundary, "boundary detection mode")
        ->check(CLI::IsMember({"hybrid", "blank-line", "numbered-marker"}));
    cmd->add_option("--indeterminate", options.indeterminate,
                    "scoring policy for indeterminate predictions")
        ->check(CLI::IsMember({"pessimistic", "exclude"}));
    cmd->add_flag("--strict", options.strict, "abort on any invalid corpus line");
    cmd->add_option("--seed", options.seed, "seed for retry jitter");
    cmd->fallthrough();
  };
  // Config keys live in a section named after the subcommand, e.g. [verify].
  app.set_config("--config");

  auto* verify = app.add_subcommand("verify", "run verification over a corpus");
  add_common(verify, true, true);
  verify->add_option("--strategy", options.strategy, "verification strategy")
      ->check(CLI::IsMember({"judge", "judge-ec", "step", "step-ec"}));
  verify->add_option("--backend", options.backend, "backend profile name");
  verify->add_option("--workers", options.workers, "worker count (0 = auto)")
      ->check(CLI::NonNegativeNumber);
  verify->add_flag("--sequential", options.sequential, "in-order single-worker execution");

  auto* evaluate = app.add_subcommand("evaluate", "score stored verdicts against ground truth");
  add_common(evaluate, true, true);
  evaluate->add_option("--by-steps", eval.by_steps, "comma-separated step thresholds, e.g. 7,9");
  evaluate->add_option("--compare", eval.compare, "base and new strategy names")
      ->expected(2);
  evaluate->add_flag("--macro", eval.macro, "macro-average the Overall column");

  auto* report = app.add_subcommand("report", "emit the full evaluation report");
  add_common(report, true, true);
  report->add_option("--by-steps", eval.by_steps, "comma-separated step thresholds");
  report->add_option("--compare", eval.compare, "base and new strategy names")->expected(2);
  report->add_flag("--macro", eval.macro, "macro-average the Overall column");
  report->add_option("--out", eval.out_path, "write the text report to a file");
  report->add_option("--json", eval.json_path, "write the machine-readable report to a file");

  auto* decompose = app.add_subcommand("decompose", "print the step decomposition of a record");
  add_common(decompose, true, false);
  decompose->add_option("--id", record_id, "record id")->required();

  auto* compare = app.add_subcommand("compare", "relative improvement between two strategies");
  add_common(compare, true, true);
  compare->add_option("--base", compare_base, "baseline strategy")->required();
  compare->add_option("--new", compare_new, "improved strategy")->required();
  compare->add_option("--by-steps", eval.by_steps, "comma-separated step thresholds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (verify->parsed()) return cmd_verify(options);
    if (decompose->parsed()) return cmd_decompose(options, record_id);
    if (evaluate->parsed()) return cmd_report(options, eval);
    if (compare->parsed()) {
      eval.compare = {compare_base, compare_new};
      return cmd_report(options, eval);
    }
    if (report->parsed()) return cmd_report(options, eval);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const sv::CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const sv::StoreError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
