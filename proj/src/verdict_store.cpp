#include "stepverify/verdict_store.hpp"

#include <sstream>

#include "nlohmann/json.hpp"

namespace stepverify {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json call_to_json(const CallRecord& call) {
  return ordered_json{
      {"prompt_tokens", call.prompt_tokens},
      {"completion_tokens", call.completion_tokens},
      {"latency_seconds", call.latency_seconds},
      {"attempts", call.attempts},
      {"outcome", to_string(call.outcome)},
  };
}

CallRecord call_from_json(const ordered_json& obj) {
  CallRecord call;
  call.prompt_tokens = obj.at("prompt_tokens").get<long long>();
  call.completion_tokens = obj.at("completion_tokens").get<long long>();
  call.latency_seconds = obj.at("latency_seconds").get<double>();
  call.attempts = obj.at("attempts").get<int>();
  const auto outcome = call_outcome_from_string(obj.at("outcome").get<std::string>());
  if (!outcome) throw StoreError("unknown call outcome");
  call.outcome = *outcome;
  return call;
}

}  // namespace

VerdictKey key_of(const SolutionVerdict& verdict) {
  return {verdict.record_id, std::string(to_string(verdict.strategy)),
          verdict.backend_name};
}

std::string verdict_to_line(const SolutionVerdict& verdict) {
  ordered_json obj;
  obj["record_id"] = verdict.record_id;
  obj["strategy"] = to_string(verdict.strategy);
  obj["backend"] = verdict.backend_name;
  obj["num_steps"] = verdict.num_steps;
  obj["predicted_correct"] = to_string(verdict.predicted_correct);
  obj["wallclock_seconds"] = verdict.wallclock_seconds;
  obj["usage"] = ordered_json{
      {"calls", verdict.usage.calls},
      {"retries", verdict.usage.retries},
      {"prompt_tokens", verdict.usage.prompt_tokens},
      {"completion_tokens", verdict.usage.completion_tokens},
      {"latency_seconds", verdict.usage.latency_seconds},
  };
  ordered_json steps = ordered_json::array();
  for (const StepVerdict& step : verdict.step_verdicts) {
    ordered_json entry;
    entry["index"] = step.index;
    entry["status"] = to_string(step.status);
    if (step.status == StepStatus::Judged) entry["is_correct"] = step.is_correct;
    ordered_json errors = ordered_json::array();
    for (const ErrorCategory category : step.errors) errors.push_back(to_string(category));
    entry["errors"] = std::move(errors);
    entry["unknown_labels"] = step.unknown_labels;
    entry["rationale"] = step.rationale;
    entry["call"] = call_to_json(step.call);
    steps.push_back(std::move(entry));
  }
  obj["steps"] = std::move(steps);
  return obj.dump();
}

SolutionVerdict verdict_from_line(const std::string& line, std::size_t line_no) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw StoreError("line " + std::to_string(line_no) + ": malformed entry: " +
                     e.what());
  }
  try {
    SolutionVerdict verdict;
    verdict.record_id = obj.at("record_id").get<std::string>();
    const auto strategy = strategy_from_string(obj.at("strategy").get<std::string>());
    if (!strategy) throw StoreError("unknown strategy");
    verdict.strategy = *strategy;
    verdict.backend_name = obj.at("backend").get<std::string>();
    verdict.num_steps = obj.at("num_steps").get<std::size_t>();
    const auto outcome =
        solution_outcome_from_string(obj.at("predicted_correct").get<std::string>());
    if (!outcome) throw StoreError("unknown predicted_correct value");
    verdict.predicted_correct = *outcome;
    verdict.wallclock_seconds = obj.at("wallclock_seconds").get<double>();
    const ordered_json& usage = obj.at("usage");
    verdict.usage.calls = usage.at("calls").get<long long>();
    verdict.usage.retries = usage.at("retries").get<long long>();
    verdict.usage.prompt_tokens = usage.at("prompt_tokens").get<long long>();
    verdict.usage.completion_tokens = usage.at("completion_tokens").get<long long>();
    verdict.usage.latency_seconds = usage.at("latency_seconds").get<double>();
    for (const ordered_json& entry : obj.at("steps")) {
      StepVerdict step;
      step.index = entry.at("index").get<std::size_t>();
      const auto status = step_status_from_string(entry.at("status").get<std::string>());
      if (!status) throw StoreError("unknown step status");
      step.status = *status;
      if (step.status == StepStatus::Judged) {
        step.is_correct = entry.at("is_correct").get<bool>();
      }
      for (const ordered_json& name : entry.at("errors")) {
        const auto category = error_category_from_string(name.get<std::string>());
        if (!category) throw StoreError("unknown error category");
        step.errors.push_back(*category);
      }
      step.unknown_labels =
          entry.at("unknown_labels").get<std::vector<std::string>>();
      step.rationale = entry.at("rationale").get<std::string>();
      step.call = call_from_json(entry.at("call"));
      verdict.step_verdicts.push_back(std::move(step));
    }
    return verdict;
  } catch (const nlohmann::json::exception& e) {
    throw StoreError("line " + std::to_string(line_no) + ": " + e.what());
  }
}

VerdictStore::VerdictStore(std::filesystem::path path,
                           std::optional<std::set<std::string>> known_ids)
    : path_(std::move(path)), known_ids_(std::move(known_ids)) {
  load();
  out_.open(path_, std::ios::app);
  if (!out_) throw StoreError("cannot open '" + path_.string() + "' for append");
}

void VerdictStore::load() {
  std::ifstream in(path_);
  if (!in) return;  // a fresh store

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    SolutionVerdict verdict;
    try {
      verdict = verdict_from_line(line, line_no);
    } catch (const StoreError&) {
      // getline sets eof only when the final line had no terminating newline,
      // i.e. a torn trailing write from an interrupted run; drop it.
      if (in.eof()) {
        ++torn_lines_;
        break;
      }
      throw;
    }
    const VerdictKey key = key_of(verdict);
    if (index_.contains(key)) {
      throw StoreError("line " + std::to_string(line_no) + ": duplicate key (" +
                       key.record_id + ", " + key.strategy + ", " + key.backend + ")");
    }
    index_[key] = entries_.size();
    entries_.push_back(std::move(verdict));
  }
}

VerdictStore::Ack VerdictStore::store(const SolutionVerdict& verdict) {
  std::lock_guard lock(mutex_);
  if (known_ids_ && !known_ids_->contains(verdict.record_id)) {
    throw StoreError("record id '" + verdict.record_id + "' is not in the corpus");
  }
  const VerdictKey key = key_of(verdict);
  if (const auto it = index_.find(key); it != index_.end()) {
    return {false, entries_[it->second]};
  }
  out_ << verdict_to_line(verdict) << '\n';
  out_.flush();
  if (!out_) throw StoreError("write failure on '" + path_.string() + "'");
  index_[key] = entries_.size();
  entries_.push_back(verdict);
  return {true, verdict};
}

bool VerdictStore::contains(const VerdictKey& key) const {
  std::lock_guard lock(mutex_);
  return index_.contains(key);
}

std::optional<SolutionVerdict> VerdictStore::find(const VerdictKey& key) const {
  std::lock_guard lock(mutex_);
  if (const auto it = index_.find(key); it != index_.end()) {
    return entries_[it->second];
  }
  return std::nullopt;
}

std::vector<SolutionVerdict> VerdictStore::all() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::size_t VerdictStore::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace stepverify
