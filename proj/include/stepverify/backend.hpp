#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace stepverify {

enum class BackendKind { Http, Mock };

/// A named verifier endpoint plus its cost model and rate limits. Credentials
/// are never stored inline; auth_env names the environment variable holding
/// the API key.
struct BackendProfile {
  std::string name;
  BackendKind kind = BackendKind::Http;
  std::string endpoint;  // base URL up to and including the API prefix, e.g. https://host/v1
  std::string model;
  std::string auth_env;
  double price_in = 0.0;   // currency per million prompt tokens
  double price_out = 0.0;  // currency per million completion tokens
  int max_retries = 3;
  double timeout_seconds = 120.0;
  int max_concurrency = 8;
  // Mock-only knobs, used by profiles of kind Mock.
  std::string mock_response = "VERDICT: CORRECT";
  double mock_latency_ms = 0.0;
};

/// Usage and timing for one completed (or abandoned) backend call.
struct CallRecord {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  double latency_seconds = 0.0;
  int attempts = 0;
  enum class Outcome { Ok, RetriedOk, Failed } outcome = Outcome::Ok;
};

std::string_view to_string(CallRecord::Outcome outcome);
std::optional<CallRecord::Outcome> call_outcome_from_string(std::string_view name);

struct CompletionResult {
  std::string text;
  CallRecord record;
};

class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& message, CallRecord record)
      : std::runtime_error(message), record(std::move(record)) {}
  CallRecord record;
};

class RetriesExhaustedError : public BackendError {
  using BackendError::BackendError;
};
class TimeoutError : public BackendError {
  using BackendError::BackendError;
};
class AuthError : public BackendError {
  using BackendError::BackendError;
};

/// Exponential backoff between retries: base * factor^k, jittered by
/// +/- jitter. Tests shrink the base so retry paths stay fast.
struct RetryPolicy {
  double base_seconds = 1.0;
  double factor = 2.0;
  double jitter = 0.2;
};

namespace detail {

class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}
  void acquire();
  void release();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int count_;
};

}  // namespace detail

/// A verifier agent. complete() retries transient failures with exponential
/// backoff and never has more than max_concurrency attempts in flight.
class Backend {
 public:
  explicit Backend(BackendProfile profile, RetryPolicy retry = {},
                   std::uint64_t seed = 0);
  virtual ~Backend() = default;

  CompletionResult complete(const std::string& prompt);

  const BackendProfile& profile() const { return profile_; }

 protected:
  struct Attempt {
    enum class Status { Ok, Transient, Timeout, AuthFailure };
    Status status = Status::Ok;
    std::string text;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    std::string message;
  };

  virtual Attempt attempt_once(const std::string& prompt) = 0;

 private:
  double backoff_seconds(int attempt_index);

  BackendProfile profile_;
  RetryPolicy retry_;
  detail::Semaphore slots_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

/// Deterministic test double. Responses are looked up by prompt fingerprint;
/// a fingerprint maps to a sequence consumed in order (the last entry
/// repeats). Unmatched prompts get the default response. The reserved
/// responses "!fail", "!timeout" and "!auth" simulate the corresponding
/// failure modes. Token counts are whitespace-token counts, so cost tests are
/// deterministic.
class ScriptedBackend final : public Backend {
 public:
  using Script = std::unordered_map<std::uint64_t, std::vector<std::string>>;

  ScriptedBackend(BackendProfile profile, Script script,
                  std::string default_response = "VERDICT: CORRECT",
                  std::chrono::milliseconds simulated_latency = {},
                  RetryPolicy retry = {0.001, 2.0, 0.0}, std::uint64_t seed = 0);

  /// Stable 64-bit FNV-1a hash of the prompt text.
  static std::uint64_t fingerprint(std::string_view prompt);

  // Instrumentation for call-count and concurrency-ceiling checks.
  long long calls() const;
  int max_in_flight() const;

 protected:
  Attempt attempt_once(const std::string& prompt) override;

 private:
  Script script_;
  std::unordered_map<std::uint64_t, std::size_t> cursors_;
  std::string default_response_;
  std::chrono::milliseconds latency_;
  mutable std::mutex mutex_;
  long long calls_ = 0;
  int in_flight_ = 0;
  int max_in_flight_ = 0;
};

/// OpenAI-compatible chat-completion client. Sends a single user message and
/// reads choices[0].message.content plus the usage block.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendProfile profile, RetryPolicy retry = {},
                       std::uint64_t seed = 0);

 protected:
  Attempt attempt_once(const std::string& prompt) override;

 private:
  std::string base_url_;
  std::string path_prefix_;
};

/// Sum of per-call token cost at the profile's per-million prices.
double estimate_cost(std::span<const CallRecord> records,
                     const BackendProfile& profile);

std::vector<BackendProfile> load_profiles(const std::filesystem::path& path);

std::unique_ptr<Backend> make_backend(const BackendProfile& profile,
                                      RetryPolicy retry = {},
                                      std::uint64_t seed = 0);

}  // namespace stepverify
