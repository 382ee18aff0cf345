#include "stepverify/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace stepverify {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string signed_fixed(double value, int decimals) {
  return (value >= 0 ? "+" : "") + fixed(value, decimals);
}

const std::vector<std::string>& source_columns() {
  static const std::vector<std::string> columns = {"CMO", "IMO", "OpenMathReasoning"};
  return columns;
}

bool predicted_incorrect(SolutionOutcome outcome, IndeterminatePolicy policy) {
  if (outcome == SolutionOutcome::Incorrect) return true;
  return outcome == SolutionOutcome::Indeterminate &&
         policy == IndeterminatePolicy::Pessimistic;
}

std::vector<std::string> strategy_order(const std::vector<SolutionVerdict>& verdicts) {
  std::vector<std::string> order;
  for (const Strategy strategy : kAllStrategies) {
    const std::string name{to_string(strategy)};
    if (std::any_of(verdicts.begin(), verdicts.end(), [&](const SolutionVerdict& v) {
          return to_string(v.strategy) == name;
        })) {
      order.push_back(name);
    }
  }
  return order;
}

struct StrategyView {
  std::map<std::string, SolutionOutcome> predictions;  // id -> outcome
  std::map<std::string, std::size_t> steps;            // id -> decomposed n
  UsageRollup usage;
  double wallclock = 0.0;
  std::string backend;
};

}  // namespace

std::string_view to_string(IndeterminatePolicy policy) {
  return policy == IndeterminatePolicy::Pessimistic ? "pessimistic" : "exclude";
}

std::optional<IndeterminatePolicy> indeterminate_policy_from_string(
    std::string_view name) {
  if (name == "pessimistic") return IndeterminatePolicy::Pessimistic;
  if (name == "exclude") return IndeterminatePolicy::Exclude;
  return std::nullopt;
}

ConfusionCounts confusion(const std::map<std::string, SolutionOutcome>& predictions,
                          const std::map<std::string, bool>& reasoning_correct_truth,
                          IndeterminatePolicy policy) {
  ConfusionCounts counts;
  for (const auto& [id, outcome] : predictions) {
    const auto truth = reasoning_correct_truth.find(id);
    if (truth == reasoning_correct_truth.end()) {
      throw EvaluationError("no ground truth for record '" + id + "'");
    }
    const bool truly_incorrect = !truth->second;  // positive class
    if (outcome == SolutionOutcome::Indeterminate) {
      ++counts.indeterminate;
      if (policy == IndeterminatePolicy::Exclude) continue;
    }
    if (predicted_incorrect(outcome, policy)) {
      truly_incorrect ? ++counts.tp : ++counts.fp;
    } else {
      truly_incorrect ? ++counts.fn : ++counts.tn;
    }
  }
  return counts;
}

Metrics prf1(const ConfusionCounts& counts) {
  Metrics metrics;
  if (counts.tp == 0 && counts.fp == 0 && counts.fn == 0) {
    // Vacuous agreement: nothing positive anywhere.
    metrics.precision = 1.0;
    metrics.recall = 1.0;
    metrics.f1 = 1.0;
    metrics.degenerate = true;
    return metrics;
  }
  const double tp = static_cast<double>(counts.tp);
  metrics.precision =
      (counts.tp + counts.fp) > 0 ? tp / static_cast<double>(counts.tp + counts.fp) : 0.0;
  metrics.recall =
      (counts.tp + counts.fn) > 0 ? tp / static_cast<double>(counts.tp + counts.fn) : 0.0;
  const double denom = metrics.precision + metrics.recall;
  metrics.f1 = denom > 0.0 ? 2.0 * metrics.precision * metrics.recall / denom : 0.0;
  metrics.degenerate = (counts.tp + counts.fp) == 0 || (counts.tp + counts.fn) == 0;
  return metrics;
}

std::optional<double> answer_rate(std::span<const ProblemRecord> records) {
  long long labeled = 0;
  long long correct = 0;
  for (const ProblemRecord& record : records) {
    if (!record.answer_correct) continue;
    ++labeled;
    if (*record.answer_correct) ++correct;
  }
  if (labeled == 0) return std::nullopt;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(labeled);
}

std::optional<double> sound_among_correct(std::span<const ProblemRecord> records) {
  long long correct_answers = 0;
  long long sound = 0;
  for (const ProblemRecord& record : records) {
    if (!record.answer_correct || !*record.answer_correct) continue;
    ++correct_answers;
    if (record.reasoning_correct && *record.reasoning_correct) ++sound;
  }
  if (correct_answers == 0) return std::nullopt;
  return 100.0 * static_cast<double>(sound) / static_cast<double>(correct_answers);
}

double relative_improvement(double f1_new, double f1_base) {
  if (f1_base <= 0.0) throw EvaluationError("relative improvement needs a positive baseline");
  return 100.0 * (f1_new - f1_base) / f1_base;
}

std::vector<MetricRow> stratify_by_steps(
    const std::vector<SolutionVerdict>& verdicts,
    const std::map<std::string, bool>& reasoning_correct_truth,
    const std::vector<int>& thresholds, IndeterminatePolicy policy) {
  std::map<std::string, StrategyView> views;
  for (const SolutionVerdict& verdict : verdicts) {
    if (!reasoning_correct_truth.contains(verdict.record_id)) continue;
    StrategyView& view = views[std::string(to_string(verdict.strategy))];
    view.predictions[verdict.record_id] = verdict.predicted_correct;
    view.steps[verdict.record_id] = verdict.num_steps;
  }

  std::vector<MetricRow> rows;
  for (const std::string& strategy : strategy_order(verdicts)) {
    const auto it = views.find(strategy);
    if (it == views.end()) continue;
    for (const int threshold : thresholds) {
      std::map<std::string, SolutionOutcome> slice;
      for (const auto& [id, outcome] : it->second.predictions) {
        if (it->second.steps.at(id) > static_cast<std::size_t>(threshold)) {
          slice[id] = outcome;
        }
      }
      MetricRow row;
      row.strategy = strategy;
      row.label = "steps>" + std::to_string(threshold);
      row.counts = confusion(slice, reasoning_correct_truth, policy);
      row.metrics = prf1(row.counts);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

Report build_report(const std::vector<ProblemRecord>& records,
                    const std::vector<SolutionVerdict>& verdicts,
                    const ReportOptions& options) {
  std::ostringstream text;
  ordered_json data;

  // Ground truth and per-source membership.
  std::map<std::string, bool> truth;
  std::map<std::string, std::string> source_of;
  for (const ProblemRecord& record : records) {
    if (record.reasoning_correct) truth[record.id] = *record.reasoning_correct;
    source_of[record.id] = record.source.label;
  }

  std::map<std::string, StrategyView> views;
  for (const SolutionVerdict& verdict : verdicts) {
    StrategyView& view = views[std::string(to_string(verdict.strategy))];
    view.predictions[verdict.record_id] = verdict.predicted_correct;
    view.steps[verdict.record_id] = verdict.num_steps;
    view.usage.calls += verdict.usage.calls;
    view.usage.retries += verdict.usage.retries;
    view.usage.prompt_tokens += verdict.usage.prompt_tokens;
    view.usage.completion_tokens += verdict.usage.completion_tokens;
    view.usage.latency_seconds += verdict.usage.latency_seconds;
    view.wallclock += verdict.wallclock_seconds;
    view.backend = verdict.backend_name;
  }
  const std::vector<std::string> strategies = strategy_order(verdicts);

  const std::size_t scored =
      std::count_if(records.begin(), records.end(),
                    [](const ProblemRecord& r) { return r.reasoning_correct.has_value(); });

  text << "== stepverify evaluation report ==\n";
  text << "policy: indeterminate=" << to_string(options.policy)
       << "; overall=" << (options.macro_overall ? "macro-averaged" : "pooled")
       << "; positive class = incorrect solution\n";
  text << "corpus: " << records.size() << " records, " << scored
       << " with reasoning ground truth\n";
  data["policy"] = {{"indeterminate", to_string(options.policy)},
                    {"overall", options.macro_overall ? "macro" : "pooled"}};
  data["corpus"] = {{"records", records.size()}, {"with_ground_truth", scored}};

  // Corpus rates (answer-finding slice, Table-1 style).
  {
    const auto answer_finding = filter_answer_finding(records);
    const auto rate = answer_rate(answer_finding);
    const auto sound = sound_among_correct(answer_finding);
    text << "\n[corpus rates: answer-finding]\n";
    text << "records: " << answer_finding.size() << "\n";
    text << "answer correctness (%): " << (rate ? fixed(*rate, 1) : "n/a") << "\n";
    text << "sound reasoning among correct answers (%): "
         << (sound ? fixed(*sound, 1) : "n/a") << "\n";
    data["corpus_rates"] = {
        {"answer_finding_records", answer_finding.size()},
        {"answer_correctness_pct", rate ? ordered_json(*rate) : ordered_json(nullptr)},
        {"sound_among_correct_pct", sound ? ordered_json(*sound) : ordered_json(nullptr)},
    };
  }

  // Per-source F1 per strategy, plus pooled/macro overall and cost.
  text << "\n[f1 by source (%)]\n";
  text << "strategy          ";
  for (const std::string& source : source_columns()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%18s", source.c_str());
    text << buf;
  }
  text << "           Overall           cost($)\n";
  data["f1_by_source"] = ordered_json::array();

  bool any_degenerate = false;
  std::map<std::string, long long> indeterminate_by_strategy;
  for (const std::string& strategy : strategies) {
    const StrategyView& view = views.at(strategy);
    ordered_json row;
    row["strategy"] = strategy;
    char namebuf[32];
    std::snprintf(namebuf, sizeof(namebuf), "%-18s", strategy.c_str());
    text << namebuf;

    std::vector<double> per_source_f1;
    std::map<std::string, SolutionOutcome> scored_predictions;
    for (const auto& [id, outcome] : view.predictions) {
      if (truth.contains(id)) scored_predictions[id] = outcome;
    }
    for (const std::string& source : source_columns()) {
      std::map<std::string, SolutionOutcome> slice;
      for (const auto& [id, outcome] : scored_predictions) {
        if (source_of.at(id) == source) slice[id] = outcome;
      }
      std::string cell = "-";
      if (!slice.empty()) {
        const ConfusionCounts counts = confusion(slice, truth, options.policy);
        const Metrics metrics = prf1(counts);
        cell = fixed(100.0 * metrics.f1, 2);
        if (metrics.degenerate) {
          cell += "*";
          any_degenerate = true;
        }
        per_source_f1.push_back(100.0 * metrics.f1);
        row[source] = {{"f1_pct", 100.0 * metrics.f1},
                       {"tp", counts.tp},
                       {"fp", counts.fp},
                       {"fn", counts.fn},
                       {"tn", counts.tn},
                       {"indeterminate", counts.indeterminate},
                       {"degenerate", metrics.degenerate}};
      } else {
        row[source] = nullptr;
      }
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%18s", cell.c_str());
      text << buf;
    }

    std::string overall_cell = "-";
    if (!scored_predictions.empty()) {
      double overall_f1 = 0.0;
      bool overall_degenerate = false;
      ConfusionCounts pooled = confusion(scored_predictions, truth, options.policy);
      indeterminate_by_strategy[strategy] = pooled.indeterminate;
      if (options.macro_overall && !per_source_f1.empty()) {
        for (const double f1 : per_source_f1) overall_f1 += f1;
        overall_f1 /= static_cast<double>(per_source_f1.size());
      } else {
        const Metrics metrics = prf1(pooled);
        overall_f1 = 100.0 * metrics.f1;
        overall_degenerate = metrics.degenerate;
      }
      overall_cell = fixed(overall_f1, 2);
      if (overall_degenerate) {
        overall_cell += "*";
        any_degenerate = true;
      }
      row["Overall"] = {{"f1_pct", overall_f1},
                        {"tp", pooled.tp},
                        {"fp", pooled.fp},
                        {"fn", pooled.fn},
                        {"tn", pooled.tn},
                        {"indeterminate", pooled.indeterminate},
                        {"degenerate", overall_degenerate}};
    } else {
      row["Overall"] = nullptr;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%18s", overall_cell.c_str());
    text << buf;

    std::string cost_cell = "-";
    if (const auto it = options.profiles.find(view.backend); it != options.profiles.end()) {
      CallRecord rollup;
      rollup.prompt_tokens = view.usage.prompt_tokens;
      rollup.completion_tokens = view.usage.completion_tokens;
      const double cost = estimate_cost(std::span(&rollup, 1), it->second);
      cost_cell = fixed(cost, 2);
      row["cost"] = cost;
    } else {
      row["cost"] = nullptr;
    }
    std::snprintf(buf, sizeof(buf), "%18s", cost_cell.c_str());
    text << buf << "\n";
    data["f1_by_source"].push_back(std::move(row));
  }
  if (!strategies.empty()) {
    text << "indeterminate predictions:";
    for (const std::string& strategy : strategies) {
      text << " " << strategy << "=" << indeterminate_by_strategy[strategy];
    }
    text << (options.policy == IndeterminatePolicy::Pessimistic
                 ? " (scored as predicted-incorrect)\n"
                 : " (excluded from the confusion cells)\n");
  }
  if (any_degenerate) {
    text << "(* degenerate cell: a zero denominator convention applied)\n";
  }

  // Step strata.
  if (!options.step_thresholds.empty()) {
    text << "\n[f1 by step count (%)]\n";
    data["f1_by_steps"] = ordered_json::array();
    const auto rows = stratify_by_steps(verdicts, truth, options.step_thresholds,
                                        options.policy);
    for (const MetricRow& row : rows) {
      const long long n = row.counts.definite() +
                          (options.policy == IndeterminatePolicy::Exclude
                               ? row.counts.indeterminate
                               : 0);
      std::string cell = fixed(100.0 * row.metrics.f1, 2);
      if (row.metrics.degenerate) {
        cell += "*";
      }
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%-18s %-10s %10s   (n=%lld)\n",
                    row.strategy.c_str(), row.label.c_str(), cell.c_str(), n);
      text << buf;
      data["f1_by_steps"].push_back({{"strategy", row.strategy},
                                     {"stratum", row.label},
                                     {"f1_pct", 100.0 * row.metrics.f1},
                                     {"records", n},
                                     {"degenerate", row.metrics.degenerate}});
    }
  }

  // Strategy comparison with relative improvement.
  if (options.compare) {
    const auto& [base_name, new_name] = *options.compare;
    text << "\n[comparison: " << new_name << " vs " << base_name << "]\n";
    data["comparison"] = ordered_json::array();
    const auto overall_f1_of = [&](const std::string& strategy,
                                   int threshold) -> std::optional<double> {
      const auto it = views.find(strategy);
      if (it == views.end()) return std::nullopt;
      std::map<std::string, SolutionOutcome> slice;
      for (const auto& [id, outcome] : it->second.predictions) {
        if (!truth.contains(id)) continue;
        if (threshold >= 0 &&
            it->second.steps.at(id) <= static_cast<std::size_t>(threshold)) {
          continue;
        }
        slice[id] = outcome;
      }
      if (slice.empty()) return std::nullopt;
      return 100.0 * prf1(confusion(slice, truth, options.policy)).f1;
    };

    std::vector<int> strata = {-1};
    strata.insert(strata.end(), options.step_thresholds.begin(),
                  options.step_thresholds.end());
    for (const int threshold : strata) {
      const std::string label =
          threshold < 0 ? "overall" : "steps>" + std::to_string(threshold);
      const auto base_f1 = overall_f1_of(base_name, threshold);
      const auto new_f1 = overall_f1_of(new_name, threshold);
      std::string delta_cell = "n/a";
      ordered_json row{{"stratum", label}};
      if (base_f1 && new_f1) {
        row[base_name + "_f1_pct"] = *base_f1;
        row[new_name + "_f1_pct"] = *new_f1;
        if (*base_f1 > 0.0) {
          const double delta = relative_improvement(*new_f1, *base_f1);
          delta_cell = signed_fixed(delta, 2) + "%";
          row["relative_improvement_pct"] = delta;
        } else {
          row["relative_improvement_pct"] = nullptr;
        }
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-10s %s=%s  %s=%s  rel.improv=%s\n",
                      label.c_str(), base_name.c_str(), fixed(*base_f1, 2).c_str(),
                      new_name.c_str(), fixed(*new_f1, 2).c_str(), delta_cell.c_str());
        text << buf;
      } else {
        row["relative_improvement_pct"] = nullptr;
        text << label << " n/a (missing strategy data)\n";
      }
      data["comparison"].push_back(std::move(row));
    }
  }

  // Runtime rollup per strategy.
  if (!strategies.empty()) {
    text << "\n[runtime]\n";
    data["runtime"] = ordered_json::array();
    for (const std::string& strategy : strategies) {
      const StrategyView& view = views.at(strategy);
      const auto n = static_cast<double>(view.predictions.size());
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "%-18s records=%zu calls=%lld retries=%lld wallclock_s=%s mean_s_per_record=%s\n",
                    strategy.c_str(), view.predictions.size(), view.usage.calls,
                    view.usage.retries, fixed(view.wallclock, 3).c_str(),
                    fixed(n > 0 ? view.wallclock / n : 0.0, 3).c_str());
      text << buf;
      data["runtime"].push_back({{"strategy", strategy},
                                 {"records", view.predictions.size()},
                                 {"calls", view.usage.calls},
                                 {"retries", view.usage.retries},
                                 {"wallclock_seconds", view.wallclock},
                                 {"prompt_tokens", view.usage.prompt_tokens},
                                 {"completion_tokens", view.usage.completion_tokens}});
    }
  }

  // Step-count distribution over verified solutions (first strategy's view,
  // they all decompose identically).
  if (!strategies.empty()) {
    const StrategyView& view = views.at(strategies.front());
    std::vector<std::size_t> counts;
    counts.reserve(view.steps.size());
    for (const auto& [id, n] : view.steps) counts.push_back(n);
    const StepHistogram histogram = step_histogram_from_counts(counts);
    text << "\n[step distribution]\n";
    data["step_distribution"] = ordered_json::object();
    ordered_json histogram_json = ordered_json::object();
    for (const auto& [steps, freq] : histogram.counts) {
      text << "steps=" << steps << ": " << freq << "\n";
      histogram_json[std::to_string(steps)] = freq;
    }
    if (histogram.mean) {
      std::string modes;
      for (std::size_t i = 0; i < histogram.modes.size(); ++i) {
        if (i > 0) modes += ",";
        modes += std::to_string(histogram.modes[i]);
      }
      text << "mean=" << fixed(*histogram.mean, 2) << " median="
           << fixed(*histogram.median, 1) << " mode={" << modes << "} range="
           << *histogram.min << "-" << *histogram.max
           << " fraction<=7=" << fixed(*histogram.fraction_at_most_7, 3) << "\n";
      data["step_distribution"] = {
          {"histogram", histogram_json},
          {"mean", *histogram.mean},
          {"median", *histogram.median},
          {"modes", histogram.modes},
          {"min", *histogram.min},
          {"max", *histogram.max},
          {"fraction_at_most_7", *histogram.fraction_at_most_7},
      };
    }
  }

  // Error-category distribution over annotated records.
  {
    std::map<std::string, std::size_t> distribution;
    std::size_t annotated = 0;
    for (const ProblemRecord& record : records) {
      if (!record.error_type) continue;
      ++annotated;
      ++distribution[std::string(to_string(*record.error_type))];
    }
    if (annotated > 0) {
      text << "\n[error categories]\n";
      data["error_categories"] = ordered_json::object();
      for (const auto& [name, count] : distribution) {
        const double pct =
            100.0 * static_cast<double>(count) / static_cast<double>(annotated);
        text << name << ": " << count << " (" << fixed(pct, 1) << "%)\n";
        data["error_categories"][name] = {{"count", count}, {"pct", pct}};
      }
    }
  }

  return {text.str(), std::move(data)};
}

}  // namespace stepverify
