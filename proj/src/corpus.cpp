#include "stepverify/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"

namespace stepverify {
namespace {

using ordered_json = nlohmann::ordered_json;

const char* const kKnownFields[] = {
    "id",           "problem",        "solution",      "reasoning_content",
    "answer_correct", "reasoning_correct", "reference_answer", "problem_type",
    "generator_model", "source",      "error_type",    "num_steps",
};

bool is_known_field(const std::string& key) {
  for (const char* field : kKnownFields) {
    if (key == field) return true;
  }
  return false;
}

// Validation failures are wrapped with the line number by record_from_line.
struct FieldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string require_string(const ordered_json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw FieldError(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw FieldError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const ordered_json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FieldError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

std::optional<bool> optional_bool(const ordered_json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean())
    throw FieldError(std::string("field '") + key + "' is not a true/false literal");
  return it->get<bool>();
}

}  // namespace

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::SolutionByGuess: return "SolutionByGuess";
    case ErrorCategory::CircularReasoning: return "CircularReasoning";
    case ErrorCategory::InequalityManipulation: return "InequalityManipulation";
    case ErrorCategory::LogicalFallacy: return "LogicalFallacy";
    case ErrorCategory::CalculationError: return "CalculationError";
  }
  return "LogicalFallacy";
}

std::optional<ErrorCategory> error_category_from_string(std::string_view name) {
  if (name == "SolutionByGuess") return ErrorCategory::SolutionByGuess;
  if (name == "CircularReasoning") return ErrorCategory::CircularReasoning;
  if (name == "InequalityManipulation") return ErrorCategory::InequalityManipulation;
  if (name == "LogicalFallacy") return ErrorCategory::LogicalFallacy;
  if (name == "CalculationError") return ErrorCategory::CalculationError;
  return std::nullopt;
}

std::string_view to_string(ProblemType type) {
  return type == ProblemType::Proof ? "proof" : "answer_finding";
}

std::optional<ProblemType> problem_type_from_string(std::string_view name) {
  if (name == "proof") return ProblemType::Proof;
  if (name == "answer_finding") return ProblemType::AnswerFinding;
  return std::nullopt;
}

Source Source::from_string(std::string_view text) {
  if (text == "CMO") return {Kind::CMO, "CMO"};
  if (text == "IMO") return {Kind::IMO, "IMO"};
  if (text == "OpenMathReasoning") return {Kind::OpenMathReasoning, "OpenMathReasoning"};
  return {Kind::Other, std::string(text)};
}

ProblemRecord record_from_line(const std::string& line, std::size_t line_no) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
  }
  if (!obj.is_object())
    throw CorpusError("line " + std::to_string(line_no) + ": record is not an object");

  try {
    ProblemRecord record;
    if (const auto id = optional_string(obj, "id"); id && !id->empty()) {
      record.id = *id;
    } else if (!id) {
      // Assigned at ingestion when absent.
      char buf[32];
      std::snprintf(buf, sizeof(buf), "auto-%06zu", line_no);
      record.id = buf;
    } else {
      throw FieldError("id is empty");
    }
    record.problem = require_string(obj, "problem");
    record.solution = require_string(obj, "solution");
    if (record.problem.empty()) throw FieldError("problem is empty");
    if (record.solution.empty()) throw FieldError("solution is empty");

    record.reasoning_content = optional_string(obj, "reasoning_content");
    record.answer_correct = optional_bool(obj, "answer_correct");
    record.reasoning_correct = optional_bool(obj, "reasoning_correct");
    record.reference_answer = optional_string(obj, "reference_answer");

    const std::string type_name = require_string(obj, "problem_type");
    const auto type = problem_type_from_string(type_name);
    if (!type) throw FieldError("unknown problem_type '" + type_name + "'");
    record.problem_type = *type;

    if (const auto model = optional_string(obj, "generator_model")) {
      record.generator_model = *model;
    }
    record.source = Source::from_string(require_string(obj, "source"));

    if (const auto error_name = optional_string(obj, "error_type")) {
      const auto category = error_category_from_string(*error_name);
      if (!category) throw FieldError("unknown error_type '" + *error_name + "'");
      record.error_type = category;
      if (record.reasoning_correct && *record.reasoning_correct) {
        throw FieldError("error_type present but reasoning_correct is true");
      }
    }

    if (const auto it = obj.find("num_steps"); it != obj.end() && !it->is_null()) {
      if (!it->is_number_integer()) throw FieldError("num_steps is not an integer");
      const auto n = it->get<long long>();
      if (n < 1) throw FieldError("num_steps must be >= 1");
      record.num_steps = static_cast<int>(n);
    }

    for (const auto& [key, value] : obj.items()) {
      if (is_known_field(key)) continue;
      record.extra[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    return record;
  } catch (const FieldError& e) {
    throw CorpusError("line " + std::to_string(line_no) + ": " + e.what());
  }
}

std::string record_to_line(const ProblemRecord& record) {
  ordered_json obj;
  obj["id"] = record.id;
  obj["problem"] = record.problem;
  obj["solution"] = record.solution;
  if (record.reasoning_content) obj["reasoning_content"] = *record.reasoning_content;
  if (record.answer_correct) obj["answer_correct"] = *record.answer_correct;
  if (record.reasoning_correct) obj["reasoning_correct"] = *record.reasoning_correct;
  if (record.reference_answer) obj["reference_answer"] = *record.reference_answer;
  obj["problem_type"] = to_string(record.problem_type);
  obj["generator_model"] = record.generator_model;
  obj["source"] = record.source.label;
  if (record.error_type) obj["error_type"] = to_string(*record.error_type);
  if (record.num_steps) obj["num_steps"] = *record.num_steps;
  for (const auto& [key, value] : record.extra) obj[key] = value;
  return obj.dump();
}

LoadResult load_corpus(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open '" + path.string() + "'");

  LoadResult result;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ProblemRecord record;
    try {
      record = record_from_line(line, line_no);
    } catch (const CorpusError& e) {
      if (strict) throw;
      result.skipped.push_back({line_no, e.what()});
      continue;
    }
    if (!seen_ids.insert(record.id).second) {
      throw CorpusError("line " + std::to_string(line_no) + ": duplicate id '" +
                        record.id + "'");
    }
    result.records.push_back(std::move(record));
  }
  if (in.bad()) throw CorpusError("read failure on '" + path.string() + "'");
  return result;
}

void save_corpus(const std::filesystem::path& path,
                 const std::vector<ProblemRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CorpusError("cannot write '" + path.string() + "'");
  for (const auto& record : records) out << record_to_line(record) << '\n';
  if (!out) throw CorpusError("write failure on '" + path.string() + "'");
}

std::vector<ProblemRecord> filter_answer_finding(
    const std::vector<ProblemRecord>& records) {
  std::vector<ProblemRecord> out;
  out.reserve(records.size());
  for (const auto& record : records) {
    if (record.problem_type == ProblemType::AnswerFinding) out.push_back(record);
  }
  return out;
}

}  // namespace stepverify
