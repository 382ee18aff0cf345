#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "stepverify/segmenter.hpp"
#include "test_util.hpp"

using namespace stepverify;

namespace {

// Random multi-paragraph text mixing blank-line gaps, enumeration markers,
// indentation, CRLF endings and multi-byte characters.
std::string random_solution(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_paragraphs(1, 8);
  std::uniform_int_distribution<int> n_words(1, 30);
  std::uniform_int_distribution<int> word_kind(0, 5);
  std::uniform_int_distribution<int> sep_kind(0, 3);
  std::uniform_int_distribution<int> marker_kind(0, 4);

  std::string text;
  const int paragraphs = n_paragraphs(rng);
  for (int p = 0; p < paragraphs; ++p) {
    if (p > 0) {
      switch (sep_kind(rng)) {
        case 0: text += "\n\n"; break;
        case 1: text += "\n \t\n"; break;
        case 2: text += "\n\n\n"; break;
        case 3: text += "\r\n\r\n"; break;
      }
    }
    switch (marker_kind(rng)) {
      case 0: text += std::to_string(p + 1) + ". "; break;
      case 1: text += "Step " + std::to_string(p + 1) + ": "; break;
      case 2: text += "- "; break;
      default: break;
    }
    const int words = n_words(rng);
    for (int w = 0; w < words; ++w) {
      if (w > 0) text += (word_kind(rng) == 0) ? "  " : " ";
      switch (word_kind(rng)) {
        case 1: text += "x\xc2\xb2"; break;
        case 2: text += "\\frac{a}{b}"; break;
        default: text += "w" + std::to_string(w); break;
      }
    }
    if (word_kind(rng) == 0) text += "\nsame paragraph continuation line";
  }
  return text;
}

}  // namespace

TEST_CASE("token_length counts maximal non-whitespace runs") {
  CHECK(token_length("x = 2") == 3);
  CHECK(token_length("") == 0);
  CHECK(token_length("  a\tb\nc ") == 3);
  CHECK(token_length("one") == 1);
  CHECK(token_length(" \t\n ") == 0);
}

TEST_CASE("three long paragraphs stay three steps") {
  const std::string text = testutil::multi_paragraph_solution(3, 20);
  const auto sequence = decompose(text, {12, BoundaryMode::Hybrid});
  REQUIRE(sequence.steps.size() == 3);
  for (const auto& step : sequence.steps) CHECK(token_length(step) == 20);
  CHECK(reconstruct(sequence) == text);
}

TEST_CASE("a short first paragraph merges into its successor") {
  const std::string text =
      testutil::paragraph(5, "a") + "\n\n" + testutil::paragraph(30, "b");
  const auto sequence = decompose(text, {12, BoundaryMode::Hybrid});
  REQUIRE(sequence.steps.size() == 1);
  CHECK(token_length(sequence.steps[0]) == 35);
  CHECK(reconstruct(sequence) == text);
}

TEST_CASE("single paragraph yields one step and no separators") {
  const auto sequence = decompose("just one paragraph of text", {12, BoundaryMode::Hybrid});
  CHECK(sequence.steps.size() == 1);
  CHECK(sequence.separators.empty());
}

TEST_CASE("merged steps re-check until long enough") {
  // 3 + 4 + 6 tokens chain-merge into one 13-token step; the 30-token tail stays.
  const std::string text = testutil::paragraph(3, "a") + "\n\n" +
                           testutil::paragraph(4, "b") + "\n\n" +
                           testutil::paragraph(6, "c") + "\n\n" +
                           testutil::paragraph(30, "d");
  const auto sequence = decompose(text, {12, BoundaryMode::Hybrid});
  REQUIRE(sequence.steps.size() == 2);
  CHECK(token_length(sequence.steps[0]) == 13);
  CHECK(token_length(sequence.steps[1]) == 30);
}

TEST_CASE("a short trailing step merges backward") {
  const std::string text =
      testutil::paragraph(20, "a") + "\n\n" + testutil::paragraph(3, "b");
  const auto sequence = decompose(text, {12, BoundaryMode::Hybrid});
  REQUIRE(sequence.steps.size() == 1);
  CHECK(token_length(sequence.steps[0]) == 23);
  CHECK(reconstruct(sequence) == text);
}

TEST_CASE("numbered markers split without blank lines") {
  const std::string text = "1. " + testutil::paragraph(15, "a") + "\n2. " +
                           testutil::paragraph(15, "b") + "\nStep 3: " +
                           testutil::paragraph(15, "c");
  const auto hybrid = decompose(text, {12, BoundaryMode::Hybrid});
  CHECK(hybrid.steps.size() == 3);
  CHECK(reconstruct(hybrid) == text);

  const auto blank_only = decompose(text, {12, BoundaryMode::BlankLine});
  CHECK(blank_only.steps.size() == 1);
}

TEST_CASE("blank-line mode ignores markers") {
  const std::string text = "1. " + testutil::paragraph(15, "a") + "\n\n2. " +
                           testutil::paragraph(15, "b");
  const auto markers_only = decompose(text, {12, BoundaryMode::NumberedMarker});
  CHECK(markers_only.steps.size() == 2);
  CHECK(reconstruct(markers_only) == text);
}

TEST_CASE("empty input is an error") {
  CHECK_THROWS_AS((void)decompose("", {12, BoundaryMode::Hybrid}), SegmenterError);
  CHECK_THROWS_AS((void)decompose("  \n\t \n", {12, BoundaryMode::Hybrid}),
                  SegmenterError);
  CHECK_THROWS_AS((void)decompose("text", {0, BoundaryMode::Hybrid}), SegmenterError);
}

TEST_CASE("an extreme threshold merges everything") {
  const std::string text = testutil::multi_paragraph_solution(6, 20);
  const auto sequence = decompose(text, {1000, BoundaryMode::Hybrid});
  CHECK(sequence.steps.size() == 1);
  CHECK(reconstruct(sequence) == text);
}

TEST_CASE("decomposition properties over random inputs") {
  std::mt19937_64 rng(987654321);
  std::uniform_int_distribution<int> theta_dist(1, 40);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string text = random_solution(rng);
    const int theta = theta_dist(rng);
    const SegmenterConfig config{theta, BoundaryMode::Hybrid};
    const auto sequence = decompose(text, config);

    CHECK(reconstruct(sequence) == text);
    REQUIRE(!sequence.steps.empty());
    CHECK(sequence.separators.size() == sequence.steps.size() - 1);
    for (std::size_t i = 0; i + 1 < sequence.steps.size(); ++i) {
      CHECK(token_length(sequence.steps[i]) >= static_cast<std::size_t>(theta));
    }
    for (const auto& step : sequence.steps) CHECK(!step.empty());

    // Determinism.
    const auto again = decompose(text, config);
    CHECK(again.steps == sequence.steps);
    CHECK(again.separators == sequence.separators);

    // Step count never increases with theta.
    const auto wider = decompose(text, {theta + 7, BoundaryMode::Hybrid});
    CHECK(wider.steps.size() <= sequence.steps.size());
  }
}

TEST_CASE("histogram of [5,5,6]") {
  std::vector<StepSequence> sequences;
  for (const int n : {5, 5, 6}) {
    StepSequence sequence;
    sequence.steps.assign(n, "s");
    sequence.separators.assign(n - 1, " ");
    sequences.push_back(sequence);
  }
  const auto histogram = step_histogram(sequences);
  REQUIRE(histogram.mean.has_value());
  CHECK(*histogram.mean == doctest::Approx(16.0 / 3.0));
  CHECK(*histogram.median == 5.0);
  CHECK(histogram.modes == std::vector<std::size_t>{5});
  CHECK(histogram.counts.at(5) == 2);
  CHECK(histogram.counts.at(6) == 1);
}

TEST_CASE("empty histogram reports absent statistics") {
  const auto histogram = step_histogram({});
  CHECK(histogram.counts.empty());
  CHECK(!histogram.mean.has_value());
  CHECK(!histogram.median.has_value());
  CHECK(histogram.modes.empty());
}

TEST_CASE("modal ties report every modal value") {
  const auto histogram = step_histogram_from_counts({2, 2, 3, 3, 9});
  CHECK(histogram.modes == std::vector<std::size_t>{2, 3});
}

TEST_CASE("a 204-solution corpus with mean 5.04, median 5, mode 6, range 1-13") {
  // Frequencies per step count; sum of counts 204, total steps 1028.
  const std::vector<std::pair<std::size_t, std::size_t>> frequency = {
      {1, 10}, {2, 17}, {3, 26}, {4, 32}, {5, 35}, {6, 38}, {7, 22},
      {8, 10}, {9, 6},  {10, 4}, {11, 2}, {12, 1}, {13, 1}};
  std::vector<std::size_t> counts;
  for (const auto& [value, repeats] : frequency) {
    counts.insert(counts.end(), repeats, value);
  }
  REQUIRE(counts.size() == 204);

  const auto histogram = step_histogram_from_counts(counts);
  REQUIRE(histogram.mean.has_value());
  CHECK(*histogram.mean == doctest::Approx(5.04).epsilon(0.001));
  CHECK(*histogram.median == 5.0);
  CHECK(histogram.modes == std::vector<std::size_t>{6});
  CHECK(*histogram.min == 1);
  CHECK(*histogram.max == 13);
}
