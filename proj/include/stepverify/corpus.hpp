#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stepverify/taxonomy.hpp"

namespace stepverify {

class CorpusError : public std::runtime_error {
 public:
  explicit CorpusError(const std::string& message)
      : std::runtime_error("corpus: " + message) {}
};

enum class ProblemType { Proof, AnswerFinding };

std::string_view to_string(ProblemType type);
std::optional<ProblemType> problem_type_from_string(std::string_view name);

/// Problem provenance. Known competition sources get a fixed kind; anything
/// else is kept verbatim under Other.
struct Source {
  enum class Kind { CMO, IMO, OpenMathReasoning, Other };
  Kind kind = Kind::Other;
  std::string label;  // canonical name, or the raw text for Other

  static Source from_string(std::string_view text);
  bool operator==(const Source&) const = default;
};

/// One dataset row: a problem, the model-generated solution under
/// verification, and whatever labels the corpus carries.
struct ProblemRecord {
  std::string id;
  std::string problem;
  std::string solution;
  std::optional<std::string> reasoning_content;
  std::optional<bool> answer_correct;     // automated final-answer check
  std::optional<bool> reasoning_correct;  // human label, evaluation ground truth
  std::optional<std::string> reference_answer;
  ProblemType problem_type = ProblemType::AnswerFinding;
  std::string generator_model;
  Source source;
  std::optional<ErrorCategory> error_type;
  std::optional<int> num_steps;  // annotated step count, >= 1
  std::map<std::string, std::string> extra;

  bool operator==(const ProblemRecord&) const = default;
};

struct LoadIssue {
  std::size_t line = 0;
  std::string message;
};

struct LoadResult {
  std::vector<ProblemRecord> records;
  std::vector<LoadIssue> skipped;  // empty in strict mode (strict aborts)
};

/// Reads a line-delimited corpus file, one JSON object per line. In strict
/// mode any invalid record aborts the load; otherwise invalid records are
/// skipped and reported. Duplicate ids are always fatal.
LoadResult load_corpus(const std::filesystem::path& path, bool strict);

void save_corpus(const std::filesystem::path& path,
                 const std::vector<ProblemRecord>& records);

std::string record_to_line(const ProblemRecord& record);
ProblemRecord record_from_line(const std::string& line, std::size_t line_no);

std::vector<ProblemRecord> filter_answer_finding(
    const std::vector<ProblemRecord>& records);

}  // namespace stepverify
