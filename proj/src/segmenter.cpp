#include "stepverify/segmenter.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace stepverify {
namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

struct Line {
  std::size_t begin = 0;  // offset of first char
  std::size_t end = 0;    // offset one past last char, excluding '\n'
  bool blank = true;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = (nl == std::string_view::npos) ? text.size() : nl;
    Line line{pos, end, true};
    for (std::size_t i = pos; i < end; ++i) {
      if (!is_space(text[i])) {
        line.blank = false;
        break;
      }
    }
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

// Line-initial enumeration markers: "1.", "7)", "Step 2:", "- ".
bool starts_with_marker(std::string_view text, const Line& line) {
  std::size_t i = line.begin;
  while (i < line.end && (text[i] == ' ' || text[i] == '\t')) ++i;
  if (i >= line.end) return false;

  if (std::isdigit(static_cast<unsigned char>(text[i]))) {
    std::size_t j = i;
    while (j < line.end && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    if (j < line.end && (text[j] == '.' || text[j] == ')')) {
      return j + 1 >= line.end || is_space(text[j + 1]);
    }
    return false;
  }
  if (text.substr(i, 5) == "Step " && i + 5 < line.end &&
      std::isdigit(static_cast<unsigned char>(text[i + 5]))) {
    std::size_t j = i + 5;
    while (j < line.end && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    return j < line.end && (text[j] == ':' || text[j] == '.');
  }
  if (text[i] == '-') {
    return i + 1 < line.end && text[i + 1] == ' ';
  }
  return false;
}

// A separator span [begin, end) removed between two steps.
struct Boundary {
  std::size_t begin = 0;
  std::size_t end = 0;  // == offset of the next step's first char
};

std::vector<Boundary> detect_boundaries(std::string_view text, BoundaryMode mode) {
  const std::vector<Line> lines = split_lines(text);
  std::vector<Boundary> boundaries;

  const bool want_blank = mode != BoundaryMode::NumberedMarker;
  const bool want_marker = mode != BoundaryMode::BlankLine;

  std::size_t prev_content = lines.size();  // index of last content line seen
  bool gap_since_content = false;           // blank lines since prev_content
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const Line& line = lines[li];
    if (line.blank) {
      gap_since_content = true;
      continue;
    }
    if (prev_content != lines.size()) {
      if (want_blank && gap_since_content) {
        // Separator: from the newline ending the previous content line up to
        // the start of this line.
        boundaries.push_back({lines[prev_content].end, line.begin});
      } else if (want_marker && starts_with_marker(text, line)) {
        // Separator: the line break alone; the marker stays in its step.
        boundaries.push_back({line.begin - 1, line.begin});
      }
    }
    prev_content = li;
    gap_since_content = false;
  }
  return boundaries;
}

}  // namespace

std::string_view to_string(BoundaryMode mode) {
  switch (mode) {
    case BoundaryMode::BlankLine: return "blank-line";
    case BoundaryMode::NumberedMarker: return "numbered-marker";
    case BoundaryMode::Hybrid: return "hybrid";
  }
  return "hybrid";
}

std::optional<BoundaryMode> boundary_mode_from_string(std::string_view name) {
  if (name == "blank-line" || name == "blank_line") return BoundaryMode::BlankLine;
  if (name == "numbered-marker" || name == "numbered_marker")
    return BoundaryMode::NumberedMarker;
  if (name == "hybrid") return BoundaryMode::Hybrid;
  return std::nullopt;
}

std::size_t token_length(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

StepSequence decompose(std::string_view solution, const SegmenterConfig& config) {
  if (config.theta < 1) throw SegmenterError("theta must be >= 1");
  if (token_length(solution) == 0) throw SegmenterError("empty solution text");

  const std::vector<Boundary> boundaries =
      detect_boundaries(solution, config.boundary_mode);

  StepSequence sequence;
  sequence.source_span = solution.size();
  std::size_t cursor = 0;
  for (const Boundary& b : boundaries) {
    sequence.steps.emplace_back(solution.substr(cursor, b.begin - cursor));
    sequence.separators.emplace_back(solution.substr(b.begin, b.end - b.begin));
    cursor = b.end;
  }
  sequence.steps.emplace_back(solution.substr(cursor));

  // Greedy left-to-right merge of short steps; a merged step is re-checked.
  const auto theta = static_cast<std::size_t>(config.theta);
  std::size_t i = 0;
  while (sequence.steps.size() > 1 && i < sequence.steps.size()) {
    if (token_length(sequence.steps[i]) >= theta) {
      ++i;
      continue;
    }
    if (i + 1 < sequence.steps.size()) {
      sequence.steps[i] += sequence.separators[i] + sequence.steps[i + 1];
      sequence.steps.erase(sequence.steps.begin() + static_cast<long>(i) + 1);
      sequence.separators.erase(sequence.separators.begin() + static_cast<long>(i));
    } else {
      // Short trailing step: no successor, merge backward.
      sequence.steps[i - 1] += sequence.separators[i - 1] + sequence.steps[i];
      sequence.steps.pop_back();
      sequence.separators.pop_back();
      break;
    }
  }
  return sequence;
}

std::string reconstruct(const StepSequence& sequence) {
  std::string text;
  text.reserve(sequence.source_span);
  for (std::size_t i = 0; i < sequence.steps.size(); ++i) {
    if (i > 0) text += sequence.separators[i - 1];
    text += sequence.steps[i];
  }
  return text;
}

StepHistogram step_histogram(const std::vector<StepSequence>& sequences) {
  std::vector<std::size_t> counts;
  counts.reserve(sequences.size());
  for (const auto& sequence : sequences) counts.push_back(sequence.steps.size());
  return step_histogram_from_counts(counts);
}

StepHistogram step_histogram_from_counts(const std::vector<std::size_t>& counts) {
  StepHistogram histogram;
  if (counts.empty()) return histogram;

  for (std::size_t n : counts) ++histogram.counts[n];

  std::vector<std::size_t> sorted = counts;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double total = static_cast<double>(
      std::accumulate(sorted.begin(), sorted.end(), std::size_t{0}));
  histogram.mean = total / static_cast<double>(n);
  histogram.median = (n % 2 == 1)
                         ? static_cast<double>(sorted[n / 2])
                         : (static_cast<double>(sorted[n / 2 - 1]) +
                            static_cast<double>(sorted[n / 2])) /
                               2.0;
  histogram.min = sorted.front();
  histogram.max = sorted.back();

  std::size_t best = 0;
  for (const auto& [value, freq] : histogram.counts) best = std::max(best, freq);
  for (const auto& [value, freq] : histogram.counts) {
    if (freq == best) histogram.modes.push_back(value);
  }

  const auto at_most_7 = static_cast<double>(std::count_if(
      sorted.begin(), sorted.end(), [](std::size_t v) { return v <= 7; }));
  histogram.fraction_at_most_7 = at_most_7 / static_cast<double>(n);
  return histogram;
}

}  // namespace stepverify
