// Chat-completion backends: the uniform contract, two deterministic
// offline implementations, a retrying decorator, and an HTTP client
// for chat-completions endpoints.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "som/errors.hpp"
#include "som/rng.hpp"

namespace som {

struct DecodingParams {
    double temperature = 0.0;
    double top_p = 1.0;
    std::optional<int> top_k;

    bool operator==(const DecodingParams& other) const = default;
};

// Presets by model name (case/punctuation-insensitive), mirroring the
// published decoding table.  Unknown names raise ConfigError.
DecodingParams decoding_preset(const std::string& model);
void validate_decoding(const DecodingParams& params);

enum class Role { System, User, Assistant };
std::string to_string(Role r);
Role parse_role(const std::string& text);

struct ChatMessage {
    Role role = Role::User;
    std::string content;  // non-empty

    bool operator==(const ChatMessage& other) const = default;
};

struct Completion {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    std::int64_t latency_ms = 0;
    // true when token counts are word-count estimates, not endpoint usage
    bool approximate_usage = false;
    int attempts = 1;
};

// Call identity for randomness/script routing only.  Offline backends
// key their RNG streams and scripts on it so that concurrency cannot
// reorder randomness; it never carries society, strategy, or task
// content, keeping replies a pure function of (history, params) per
// backend state (the interface audit test asserts this for HTTP).
struct CallMeta {
    std::string case_id;
    std::uint64_t experiment_seed = 0;
    std::size_t trial = 0;
    std::size_t agent_index = 0;
    int round = 0;  // -1 = persona priming acknowledgment
};

class Backend {
public:
    virtual ~Backend() = default;
    // Returns the assistant reply plus usage; must not mutate history.
    // Throws BackendError (Retryable / Protocol / Fatal).
    virtual Completion complete(const std::vector<ChatMessage>& history,
                                const DecodingParams& params, const CallMeta& meta) = 0;
    // Approximate context window in tokens; 0 = unbounded.
    virtual std::size_t context_limit() const { return 0; }
};

// Fixed per-(agent_index, round) replies.  Round -1 returns "ok" unless
// scripted otherwise.  Token counts are whitespace word counts.
class ScriptedBackend : public Backend {
public:
    void script(std::size_t agent_index, int round, std::string text);
    // Reply for every (agent, round) without an exact entry.
    void script_default(std::string text);
    // Make the call at (agent_index, round) throw instead of replying.
    void fail_at(std::size_t agent_index, int round, BackendError::Kind kind);

    Completion complete(const std::vector<ChatMessage>& history,
                        const DecodingParams& params, const CallMeta& meta) override;
    std::size_t context_limit() const override { return limit_; }
    void set_context_limit(std::size_t limit) { limit_ = limit; }

private:
    std::map<std::pair<std::size_t, int>, std::string> entries_;
    std::map<std::pair<std::size_t, int>, BackendError::Kind> failures_;
    std::optional<std::string> default_text_;
    std::size_t limit_ = 0;
};

// Seeded multiple-choice behavior model: answers the gold letter with
// probability base_accuracy on the first round, then in debate rounds
// adopts the unique most-frequent previous answer with probability
// sway_probability (otherwise keeps its own, or moves off the mode).
// All randomness comes from the stream keyed by
// (experiment seed, case id, trial, agent index, round).
class StochasticBackend : public Backend {
public:
    StochasticBackend(double base_accuracy, double sway_probability);

    // Letter answered as "correct" at round 0 (default "A").
    void set_gold(std::string letter);

    Completion complete(const std::vector<ChatMessage>& history,
                        const DecodingParams& params, const CallMeta& meta) override;

private:
    double base_accuracy_;
    double sway_probability_;
    std::string gold_ = "A";
    std::vector<std::string> alphabet_ = {"A", "B", "C", "D"};
};

struct RetryPolicy {
    int max_attempts = 3;
    std::int64_t base_backoff_ms = 100;
};

// Retries Retryable errors with exponential backoff and full jitter.
// Protocol errors fail immediately; Fatal errors propagate unchanged.
// The attempt count is recorded on the returned completion.
class RetryBackend : public Backend {
public:
    using Sleeper = std::function<void(std::int64_t)>;
    RetryBackend(std::shared_ptr<Backend> inner, RetryPolicy policy,
                 Sleeper sleeper = nullptr, std::uint64_t jitter_seed = 0x6a1773);

    Completion complete(const std::vector<ChatMessage>& history,
                        const DecodingParams& params, const CallMeta& meta) override;
    std::size_t context_limit() const override { return inner_->context_limit(); }

private:
    std::shared_ptr<Backend> inner_;
    RetryPolicy policy_;
    Sleeper sleeper_;
    std::mutex mutex_;
    Rng jitter_;
};

// Sliding-window requests-per-minute limiter plus an in-flight cap,
// shared across workers.  Zero disables the respective limit.
class RateLimiter {
public:
    using Clock = std::function<std::int64_t()>;  // milliseconds
    using Sleeper = std::function<void(std::int64_t)>;
    RateLimiter(int rpm_limit, int max_inflight, Clock clock = nullptr,
                Sleeper sleeper = nullptr);

    void acquire();
    void release();

private:
    int rpm_limit_;
    int max_inflight_;
    Clock clock_;
    Sleeper sleeper_;
    std::mutex mutex_;
    int inflight_ = 0;
    std::vector<std::int64_t> window_;  // request timestamps, ms
};

struct HttpBackendOptions {
    std::string base_url;  // e.g. "http://127.0.0.1:8089/v1"
    std::string model;
    int rpm_limit = 0;
    int max_inflight = 0;
    std::size_t context_limit = 0;
    std::int64_t timeout_ms = 30000;
};

// POST {base_url}/chat/completions with {model, messages, temperature,
// top_p[, top_k]}; reads choices[0].message.content and usage.
// Bearer token comes from the SOM_API_KEY environment variable and is
// never written to logs or transcripts.  Transport failures and
// 429/5xx replies are Retryable; other non-2xx statuses and malformed
// bodies are Protocol errors.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendOptions options);
    ~HttpBackend() override;

    Completion complete(const std::vector<ChatMessage>& history,
                        const DecodingParams& params, const CallMeta& meta) override;
    std::size_t context_limit() const override { return options_.context_limit; }

private:
    HttpBackendOptions options_;
    std::string host_;       // scheme://authority
    std::string path_;       // endpoint path
    std::string api_key_;
    std::unique_ptr<RateLimiter> limiter_;
};

}  // namespace som
