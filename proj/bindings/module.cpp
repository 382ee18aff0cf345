#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stepverify/backend.hpp"
#include "stepverify/corpus.hpp"
#include "stepverify/evaluation.hpp"
#include "stepverify/prompting.hpp"
#include "stepverify/segmenter.hpp"
#include "stepverify/verifier.hpp"

namespace py = pybind11;
using namespace stepverify;

namespace {

Strategy strategy_arg(const std::string& name) {
  const auto strategy = strategy_from_string(name);
  if (!strategy) throw py::value_error("unknown strategy '" + name + "'");
  return *strategy;
}

SegmenterConfig segmenter_arg(int theta, const std::string& boundary) {
  const auto mode = boundary_mode_from_string(boundary);
  if (!mode) throw py::value_error("unknown boundary mode '" + boundary + "'");
  return {theta, *mode};
}

py::dict step_verdict_dict(const StepVerdict& step) {
  py::dict out;
  out["index"] = step.index;
  out["status"] = std::string(to_string(step.status));
  if (step.status == StepStatus::Judged) {
    out["is_correct"] = step.is_correct;
  } else {
    out["is_correct"] = py::none();
  }
  py::list errors;
  for (const ErrorCategory category : step.errors) {
    errors.append(std::string(to_string(category)));
  }
  out["errors"] = errors;
  out["unknown_labels"] = step.unknown_labels;
  out["rationale"] = step.rationale;
  out["prompt_tokens"] = step.call.prompt_tokens;
  out["completion_tokens"] = step.call.completion_tokens;
  out["attempts"] = step.call.attempts;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Step-by-step verification of model-generated math solutions";

  py::class_<StepSequence>(m, "StepSequence")
      .def_readonly("steps", &StepSequence::steps)
      .def_readonly("separators", &StepSequence::separators)
      .def_readonly("source_span", &StepSequence::source_span)
      .def("reconstruct", [](const StepSequence& s) { return reconstruct(s); })
      .def("__len__", [](const StepSequence& s) { return s.steps.size(); });

  py::class_<AnalysisContext>(m, "AnalysisContext")
      .def_readonly("problem", &AnalysisContext::problem)
      .def_readonly("history", &AnalysisContext::history)
      .def_readonly("current", &AnalysisContext::current)
      .def_readonly("future", &AnalysisContext::future)
      .def_readonly("index", &AnalysisContext::index)
      .def_readonly("total", &AnalysisContext::total);

  m.def("token_length",
        [](const std::string& text) { return token_length(text); },
        py::arg("text"), "Count of maximal non-whitespace runs.");

  m.def(
      "decompose",
      [](const std::string& solution, int theta, const std::string& boundary) {
        return decompose(solution, segmenter_arg(theta, boundary));
      },
      py::arg("solution"), py::arg("theta") = 12, py::arg("boundary") = "hybrid",
      "Split a solution into reasoning steps and merge short ones.");

  m.def(
      "build_context",
      [](const std::vector<std::string>& steps, const std::string& problem,
         std::size_t i) {
        StepSequence sequence;
        sequence.steps = steps;
        if (!steps.empty()) sequence.separators.assign(steps.size() - 1, "\n\n");
        return build_context(sequence, problem, i);
      },
      py::arg("steps"), py::arg("problem"), py::arg("i"));

  m.def(
      "render_step_prompt",
      [](const std::string& template_text, const std::string& strategy,
         const AnalysisContext& context) {
        const Strategy s = strategy_arg(strategy);
        return render_step_prompt({"inline", template_text}, s, context);
      },
      py::arg("template_text"), py::arg("strategy"), py::arg("context"));

  m.def(
      "render_judge_prompt",
      [](const std::string& template_text, const std::string& strategy,
         const std::string& problem, const std::string& solution) {
        const Strategy s = strategy_arg(strategy);
        return render_judge_prompt({"inline", template_text}, s, problem, solution);
      },
      py::arg("template_text"), py::arg("strategy"), py::arg("problem"),
      py::arg("solution"));

  m.def(
      "parse_verdict",
      [](const std::string& raw, const std::string& strategy) {
        ParsedVerdict parsed;
        try {
          parsed = parse_verdict(raw, strategy_arg(strategy));
        } catch (const UnparseableError& e) {
          throw py::value_error(e.what());
        }
        py::dict out;
        out["is_correct"] = parsed.is_correct;
        py::list errors;
        for (const ErrorCategory category : parsed.errors) {
          errors.append(std::string(to_string(category)));
        }
        out["errors"] = errors;
        out["unknown_labels"] = parsed.unknown_labels;
        out["rationale"] = parsed.rationale;
        return out;
      },
      py::arg("raw"), py::arg("strategy"));

  m.def(
      "solution_outcome",
      [](const std::vector<std::optional<bool>>& step_results) {
        std::vector<StepVerdict> verdicts;
        verdicts.reserve(step_results.size());
        for (std::size_t i = 0; i < step_results.size(); ++i) {
          StepVerdict verdict;
          verdict.index = i + 1;
          if (step_results[i].has_value()) {
            verdict.status = StepStatus::Judged;
            verdict.is_correct = *step_results[i];
          } else {
            verdict.status = StepStatus::Unparseable;
          }
          verdicts.push_back(verdict);
        }
        return std::string(to_string(aggregate(verdicts)));
      },
      py::arg("step_results"),
      "Aggregate per-step booleans (None = unusable) into correct / incorrect / "
      "indeterminate.");

  m.def(
      "confusion",
      [](const std::map<std::string, std::string>& predictions,
         const std::map<std::string, bool>& truth, const std::string& policy) {
        const auto parsed_policy = indeterminate_policy_from_string(policy);
        if (!parsed_policy) throw py::value_error("unknown policy '" + policy + "'");
        std::map<std::string, SolutionOutcome> outcomes;
        for (const auto& [id, name] : predictions) {
          const auto outcome = solution_outcome_from_string(name);
          if (!outcome) throw py::value_error("unknown outcome '" + name + "'");
          outcomes[id] = *outcome;
        }
        const ConfusionCounts counts = confusion(outcomes, truth, *parsed_policy);
        py::dict out;
        out["tp"] = counts.tp;
        out["fp"] = counts.fp;
        out["fn"] = counts.fn;
        out["tn"] = counts.tn;
        out["indeterminate"] = counts.indeterminate;
        return out;
      },
      py::arg("predictions"), py::arg("truth"), py::arg("policy") = "pessimistic");

  m.def(
      "prf1",
      [](long long tp, long long fp, long long fn, long long tn) {
        const Metrics metrics = prf1({tp, fp, fn, tn, 0});
        return py::make_tuple(metrics.precision, metrics.recall, metrics.f1);
      },
      py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn") = 0);

  m.def("relative_improvement", &relative_improvement, py::arg("f1_new"),
        py::arg("f1_base"));

  m.def(
      "estimate_cost",
      [](const std::vector<std::pair<long long, long long>>& calls, double price_in,
         double price_out) {
        BackendProfile profile;
        profile.price_in = price_in;
        profile.price_out = price_out;
        std::vector<CallRecord> records;
        records.reserve(calls.size());
        for (const auto& [prompt_tokens, completion_tokens] : calls) {
          CallRecord record;
          record.prompt_tokens = prompt_tokens;
          record.completion_tokens = completion_tokens;
          records.push_back(record);
        }
        return estimate_cost(records, profile);
      },
      py::arg("calls"), py::arg("price_in"), py::arg("price_out"));

  // Full-engine smoke path: verify one solution against a deterministic mock.
  m.def(
      "verify_with_mock",
      [](const std::string& problem, const std::string& solution,
         const std::string& strategy, const std::string& default_response, int theta,
         int workers, const std::optional<std::string>& templates_dir) {
        BackendProfile profile;
        profile.name = "mock";
        profile.kind = BackendKind::Mock;
        profile.max_concurrency = std::max(1, workers);
        ScriptedBackend backend({profile}, {}, default_response);

        ProblemRecord record;
        record.id = "inline";
        record.problem = problem;
        record.solution = solution;

        const TemplateSet templates =
            templates_dir ? load_templates(*templates_dir) : builtin_templates();
        VerifyOptions options;
        options.segmenter.theta = theta;
        options.workers = workers;
        const SolutionVerdict verdict = verify_solution(
            record, strategy_arg(strategy), backend, templates, options);

        py::dict out;
        out["predicted_correct"] = std::string(to_string(verdict.predicted_correct));
        out["num_steps"] = verdict.num_steps;
        py::list steps;
        for (const StepVerdict& step : verdict.step_verdicts) {
          steps.append(step_verdict_dict(step));
        }
        out["steps"] = steps;
        out["calls"] = verdict.usage.calls;
        return out;
      },
      py::arg("problem"), py::arg("solution"), py::arg("strategy") = "step-ec",
      py::arg("default_response") = "VERDICT: CORRECT", py::arg("theta") = 12,
      py::arg("workers") = 4, py::arg("templates_dir") = std::nullopt);
}
