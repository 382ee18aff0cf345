#include "stepverify/backend.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "nlohmann/json.hpp"
#include "stepverify/segmenter.hpp"

namespace stepverify {
namespace {

using nlohmann::json;

std::chrono::steady_clock::time_point now() {
  return std::chrono::steady_clock::now();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(now() - start).count();
}

}  // namespace

std::string_view to_string(CallRecord::Outcome outcome) {
  switch (outcome) {
    case CallRecord::Outcome::Ok: return "ok";
    case CallRecord::Outcome::RetriedOk: return "retried_ok";
    case CallRecord::Outcome::Failed: return "failed";
  }
  return "failed";
}

std::optional<CallRecord::Outcome> call_outcome_from_string(std::string_view name) {
  if (name == "ok") return CallRecord::Outcome::Ok;
  if (name == "retried_ok") return CallRecord::Outcome::RetriedOk;
  if (name == "failed") return CallRecord::Outcome::Failed;
  return std::nullopt;
}

namespace detail {

void Semaphore::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return count_ > 0; });
  --count_;
}

void Semaphore::release() {
  {
    std::lock_guard lock(mutex_);
    ++count_;
  }
  cv_.notify_one();
}

}  // namespace detail

Backend::Backend(BackendProfile profile, RetryPolicy retry, std::uint64_t seed)
    : profile_(std::move(profile)),
      retry_(retry),
      slots_(std::max(1, profile_.max_concurrency)),
      rng_(seed) {}

double Backend::backoff_seconds(int attempt_index) {
  double delay = retry_.base_seconds;
  for (int i = 0; i < attempt_index; ++i) delay *= retry_.factor;
  if (retry_.jitter > 0.0) {
    std::lock_guard lock(rng_mutex_);
    std::uniform_real_distribution<double> dist(-retry_.jitter, retry_.jitter);
    delay *= 1.0 + dist(rng_);
  }
  return delay;
}

CompletionResult Backend::complete(const std::string& prompt) {
  const auto start = now();
  Attempt last;
  int attempts = 0;
  for (int attempt_index = 0; attempt_index <= profile_.max_retries; ++attempt_index) {
    {
      slots_.acquire();
      struct Release {
        detail::Semaphore& s;
        ~Release() { s.release(); }
      } release{slots_};
      last = attempt_once(prompt);
    }
    ++attempts;

    if (last.status == Attempt::Status::Ok) {
      CallRecord record;
      record.prompt_tokens = last.prompt_tokens;
      record.completion_tokens = last.completion_tokens;
      record.latency_seconds = seconds_since(start);
      record.attempts = attempts;
      record.outcome =
          attempts > 1 ? CallRecord::Outcome::RetriedOk : CallRecord::Outcome::Ok;
      return {std::move(last.text), record};
    }
    if (last.status == Attempt::Status::AuthFailure) {
      CallRecord record{0, 0, seconds_since(start), attempts,
                        CallRecord::Outcome::Failed};
      throw AuthError("backend '" + profile_.name +
                          "' authentication failed: " + last.message,
                      record);
    }
    if (attempt_index < profile_.max_retries) {
      std::this_thread::sleep_for(
          std::chrono::duration<double>(backoff_seconds(attempt_index)));
    }
  }

  CallRecord record{0, 0, seconds_since(start), attempts, CallRecord::Outcome::Failed};
  const std::string detail = last.message.empty() ? "transient failure" : last.message;
  if (last.status == Attempt::Status::Timeout) {
    throw TimeoutError("backend '" + profile_.name + "' timed out after " +
                           std::to_string(attempts) + " attempts: " + detail,
                       record);
  }
  throw RetriesExhaustedError("backend '" + profile_.name + "' failed after " +
                                  std::to_string(attempts) + " attempts: " + detail,
                              record);
}

ScriptedBackend::ScriptedBackend(BackendProfile profile, Script script,
                                 std::string default_response,
                                 std::chrono::milliseconds simulated_latency,
                                 RetryPolicy retry, std::uint64_t seed)
    : Backend(std::move(profile), retry, seed),
      script_(std::move(script)),
      default_response_(std::move(default_response)),
      latency_(simulated_latency) {}

std::uint64_t ScriptedBackend::fingerprint(std::string_view prompt) {
  // FNV-1a, 64 bit.
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : prompt) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

long long ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

int ScriptedBackend::max_in_flight() const {
  std::lock_guard lock(mutex_);
  return max_in_flight_;
}

ScriptedBackend::Attempt ScriptedBackend::attempt_once(const std::string& prompt) {
  std::string response;
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    ++in_flight_;
    max_in_flight_ = std::max(max_in_flight_, in_flight_);
    const std::uint64_t fp = fingerprint(prompt);
    if (const auto it = script_.find(fp); it != script_.end() && !it->second.empty()) {
      std::size_t& cursor = cursors_[fp];
      response = it->second[std::min(cursor, it->second.size() - 1)];
      ++cursor;
    } else {
      response = default_response_;
    }
  }

  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

  Attempt attempt;
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  if (response == "!fail") {
    attempt.status = Attempt::Status::Transient;
    attempt.message = "scripted transient failure";
    return attempt;
  }
  if (response == "!timeout") {
    attempt.status = Attempt::Status::Timeout;
    attempt.message = "scripted timeout";
    return attempt;
  }
  if (response == "!auth") {
    attempt.status = Attempt::Status::AuthFailure;
    attempt.message = "scripted auth failure";
    return attempt;
  }
  attempt.status = Attempt::Status::Ok;
  attempt.text = response;
  attempt.prompt_tokens = static_cast<long long>(token_length(prompt));
  attempt.completion_tokens = static_cast<long long>(token_length(response));
  return attempt;
}

HttpBackend::HttpBackend(BackendProfile profile, RetryPolicy retry, std::uint64_t seed)
    : Backend(std::move(profile), retry, seed) {
  const std::string& endpoint = this->profile().endpoint;
  const std::size_t scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("backend endpoint must be an http(s) URL: " + endpoint);
  }
  const std::size_t path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_url_ = endpoint;
    path_prefix_.clear();
  } else {
    base_url_ = endpoint.substr(0, path_start);
    path_prefix_ = endpoint.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
}

HttpBackend::Attempt HttpBackend::attempt_once(const std::string& prompt) {
  Attempt attempt;

  std::string credential;
  if (!profile().auth_env.empty()) {
    const char* value = std::getenv(profile().auth_env.c_str());
    if (value == nullptr || *value == '\0') {
      attempt.status = Attempt::Status::AuthFailure;
      attempt.message = "environment variable " + profile().auth_env + " is not set";
      return attempt;
    }
    credential = value;
  }

  httplib::Client client(base_url_);
  const auto timeout = std::chrono::duration<double>(profile().timeout_seconds);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  if (!credential.empty()) client.set_bearer_token_auth(credential);

  json body{
      {"model", profile().model},
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
      {"temperature", 0},
  };

  const auto result =
      client.Post(path_prefix_ + "/chat/completions", body.dump(), "application/json");
  if (!result) {
    const auto err = result.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write) {
      attempt.status = Attempt::Status::Timeout;
    } else {
      attempt.status = Attempt::Status::Transient;
    }
    attempt.message = httplib::to_string(err);
    return attempt;
  }
  if (result->status == 401 || result->status == 403) {
    attempt.status = Attempt::Status::AuthFailure;
    attempt.message = "HTTP " + std::to_string(result->status);
    return attempt;
  }
  if (result->status != 200) {
    attempt.status = Attempt::Status::Transient;
    attempt.message = "HTTP " + std::to_string(result->status);
    return attempt;
  }

  try {
    const json response = json::parse(result->body);
    attempt.text = response.at("choices").at(0).at("message").at("content")
                       .get<std::string>();
    if (const auto usage = response.find("usage"); usage != response.end()) {
      attempt.prompt_tokens = usage->value("prompt_tokens", 0ll);
      attempt.completion_tokens = usage->value("completion_tokens", 0ll);
    } else {
      attempt.prompt_tokens = static_cast<long long>(token_length(prompt));
      attempt.completion_tokens = static_cast<long long>(token_length(attempt.text));
    }
    attempt.status = Attempt::Status::Ok;
  } catch (const json::exception& e) {
    attempt.status = Attempt::Status::Transient;
    attempt.message = std::string("malformed completion response: ") + e.what();
  }
  return attempt;
}

double estimate_cost(std::span<const CallRecord> records,
                     const BackendProfile& profile) {
  double total = 0.0;
  for (const CallRecord& record : records) {
    total += (static_cast<double>(record.prompt_tokens) * profile.price_in +
              static_cast<double>(record.completion_tokens) * profile.price_out) /
             1e6;
  }
  return total;
}

std::vector<BackendProfile> load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profiles file '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed profiles file: " + std::string(e.what()));
  }
  if (!doc.is_object() || !doc.contains("profiles") || !doc["profiles"].is_array()) {
    throw std::runtime_error("profiles file must be an object with a 'profiles' array");
  }

  std::vector<BackendProfile> profiles;
  for (const json& entry : doc["profiles"]) {
    BackendProfile profile;
    profile.name = entry.at("name").get<std::string>();
    const std::string kind = entry.value("kind", std::string("http"));
    if (kind == "mock") {
      profile.kind = BackendKind::Mock;
    } else if (kind == "http") {
      profile.kind = BackendKind::Http;
    } else {
      throw std::runtime_error("profile '" + profile.name + "': unknown kind '" +
                               kind + "'");
    }
    profile.endpoint = entry.value("endpoint", std::string());
    profile.model = entry.value("model", std::string());
    profile.auth_env = entry.value("auth_env", std::string());
    profile.price_in = entry.value("price_in", 0.0);
    profile.price_out = entry.value("price_out", 0.0);
    profile.max_retries = entry.value("max_retries", 3);
    profile.timeout_seconds = entry.value("timeout_seconds", 120.0);
    profile.max_concurrency = entry.value("max_concurrency", 8);
    profile.mock_response = entry.value("mock_response", std::string("VERDICT: CORRECT"));
    profile.mock_latency_ms = entry.value("mock_latency_ms", 0.0);

    if (profile.price_in < 0 || profile.price_out < 0) {
      throw std::runtime_error("profile '" + profile.name + "': prices must be >= 0");
    }
    if (profile.max_concurrency < 1) {
      throw std::runtime_error("profile '" + profile.name + "': max_concurrency must be >= 1");
    }
    if (profile.max_retries < 0) {
      throw std::runtime_error("profile '" + profile.name + "': max_retries must be >= 0");
    }
    if (profile.kind == BackendKind::Http && profile.endpoint.empty()) {
      throw std::runtime_error("profile '" + profile.name + "': endpoint is required");
    }
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

std::unique_ptr<Backend> make_backend(const BackendProfile& profile,
                                      RetryPolicy retry, std::uint64_t seed) {
  if (profile.kind == BackendKind::Mock) {
    return std::make_unique<ScriptedBackend>(
        profile, ScriptedBackend::Script{}, profile.mock_response,
        std::chrono::milliseconds(static_cast<long long>(profile.mock_latency_ms)),
        RetryPolicy{0.001, retry.factor, retry.jitter}, seed);
  }
  return std::make_unique<HttpBackend>(profile, retry, seed);
}

}  // namespace stepverify
