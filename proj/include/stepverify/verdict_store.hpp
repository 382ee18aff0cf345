#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "stepverify/verifier.hpp"

namespace stepverify {

class StoreError : public std::runtime_error {
 public:
  explicit StoreError(const std::string& message)
      : std::runtime_error("verdict store: " + message) {}
};

struct VerdictKey {
  std::string record_id;
  std::string strategy;
  std::string backend;

  auto operator<=>(const VerdictKey&) const = default;
};

VerdictKey key_of(const SolutionVerdict& verdict);

std::string verdict_to_line(const SolutionVerdict& verdict);
SolutionVerdict verdict_from_line(const std::string& line, std::size_t line_no);

/// Append-only log of solution verdicts keyed by (record id, strategy,
/// backend). Safe for concurrent store() calls; writes are serialized and
/// flushed per line so an interrupted run resumes from complete entries. A
/// torn trailing line (no final newline) is dropped on open.
class VerdictStore {
 public:
  /// Opens or creates the log. When known_ids is given, storing a verdict for
  /// any other record id is an error.
  explicit VerdictStore(std::filesystem::path path,
                        std::optional<std::set<std::string>> known_ids = std::nullopt);

  struct Ack {
    bool inserted = false;     // false: key already present, store was a no-op
    SolutionVerdict entry;     // the durably stored verdict
  };

  Ack store(const SolutionVerdict& verdict);

  bool contains(const VerdictKey& key) const;
  std::optional<SolutionVerdict> find(const VerdictKey& key) const;
  std::vector<SolutionVerdict> all() const;
  std::size_t size() const;
  std::size_t torn_lines() const { return torn_lines_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  void load();

  std::filesystem::path path_;
  std::optional<std::set<std::string>> known_ids_;
  mutable std::mutex mutex_;
  std::ofstream out_;
  std::map<VerdictKey, std::size_t> index_;
  std::vector<SolutionVerdict> entries_;
  std::size_t torn_lines_ = 0;
};

}  // namespace stepverify
