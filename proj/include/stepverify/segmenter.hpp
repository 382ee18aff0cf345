#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stepverify {

class SegmenterError : public std::runtime_error {
 public:
  explicit SegmenterError(const std::string& message)
      : std::runtime_error("segmenter: " + message) {}
};

enum class BoundaryMode { BlankLine, NumberedMarker, Hybrid };

std::string_view to_string(BoundaryMode mode);
std::optional<BoundaryMode> boundary_mode_from_string(std::string_view name);

struct SegmenterConfig {
  int theta = 12;  // minimum step length in whitespace tokens
  BoundaryMode boundary_mode = BoundaryMode::Hybrid;
};

/// An ordered decomposition of a solution. Interleaving steps with the
/// removed separators reproduces the original text byte for byte.
struct StepSequence {
  std::vector<std::string> steps;       // n entries, each non-empty
  std::vector<std::string> separators;  // n-1 entries
  std::size_t source_span = 0;          // character count of the original text
};

/// Number of maximal non-whitespace runs.
std::size_t token_length(std::string_view text);

/// Splits at detected boundaries, then greedily merges left to right: a step
/// shorter than theta tokens is concatenated with its successor (separator
/// reinserted) and re-checked; a short trailing step merges backward.
StepSequence decompose(std::string_view solution, const SegmenterConfig& config);

std::string reconstruct(const StepSequence& sequence);

struct StepHistogram {
  std::map<std::size_t, std::size_t> counts;  // step count -> frequency
  // Summary statistics; absent for empty input.
  std::optional<double> mean;
  std::optional<double> median;
  std::vector<std::size_t> modes;  // all modal values, ascending
  std::optional<std::size_t> min;
  std::optional<std::size_t> max;
  std::optional<double> fraction_at_most_7;
};

StepHistogram step_histogram(const std::vector<StepSequence>& sequences);
StepHistogram step_histogram_from_counts(const std::vector<std::size_t>& counts);

}  // namespace stepverify
