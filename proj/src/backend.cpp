#include "som/backend.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "som/util.hpp"

namespace som {

namespace {

std::string normalize_model_name(const std::string& name) {
    std::string out;
    for (char c : name)
        if (std::isalnum(static_cast<unsigned char>(c)))
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::int64_t steady_now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void default_sleep_ms(std::int64_t ms) {
    if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

// Every "(L)" occurrence with L in the given alphabet, in order.
std::vector<std::string> scan_letters(const std::string& text,
                                      const std::vector<std::string>& alphabet) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i + 3 <= text.size(); ++i) {
        if (text[i] != '(' || text[i + 2] != ')') continue;
        const std::string letter(1, text[i + 1]);
        if (std::find(alphabet.begin(), alphabet.end(), letter) != alphabet.end())
            out.push_back(letter);
    }
    return out;
}

// Unique most-frequent answer; empty when the top count is shared or
// every answer occurs exactly once.
std::string unique_mode(const std::vector<std::string>& votes) {
    std::map<std::string, int> counts;
    for (const auto& v : votes) counts[v]++;
    int best = 0;
    std::string winner;
    bool tied = false;
    for (const auto& [value, count] : counts) {
        if (count > best) {
            best = count;
            winner = value;
            tied = false;
        } else if (count == best) {
            tied = true;
        }
    }
    if (best < 2 || tied) return "";
    return winner;
}

Completion word_counted(const std::vector<ChatMessage>& history, std::string text) {
    Completion c;
    c.prompt_tokens = 0;
    for (const auto& m : history) c.prompt_tokens += word_count(m.content);
    c.completion_tokens = word_count(text);
    c.text = std::move(text);
    c.approximate_usage = true;
    return c;
}

}  // namespace

DecodingParams decoding_preset(const std::string& model) {
    const std::string key = normalize_model_name(model);
    DecodingParams p;
    if (key == "gpt35turbo1106") {
        p.temperature = 0.0;
        p.top_p = 1.0;
        return p;
    }
    if (key == "llama2chat13b" || key == "llama2chat70b" || key == "mixtral8x7b") {
        p.temperature = 0.75;
        p.top_k = 50;
        p.top_p = 0.95;
        return p;
    }
    if (key == "qwen72b") {
        p.temperature = 0.75;
        p.top_k = 50;
        p.top_p = 0.80;
        return p;
    }
    throw ConfigError("decoding.preset", "no preset for model '" + model + "'");
}

void validate_decoding(const DecodingParams& params) {
    if (!(params.temperature >= 0.0))
        throw ConfigError("decoding.temperature", "must be >= 0");
    if (!(params.top_p > 0.0 && params.top_p <= 1.0))
        throw ConfigError("decoding.top_p", "must be in (0, 1]");
    if (params.top_k && *params.top_k < 1)
        throw ConfigError("decoding.top_k", "must be a positive integer");
}

std::string to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    throw DomainError("unreachable role");
}

Role parse_role(const std::string& text) {
    if (text == "system") return Role::System;
    if (text == "user") return Role::User;
    if (text == "assistant") return Role::Assistant;
    throw ParseError("unknown role '" + text + "'", 0);
}

// --- ScriptedBackend ---

void ScriptedBackend::script(std::size_t agent_index, int round, std::string text) {
    entries_[{agent_index, round}] = std::move(text);
}

void ScriptedBackend::script_default(std::string text) {
    default_text_ = std::move(text);
}

void ScriptedBackend::fail_at(std::size_t agent_index, int round, BackendError::Kind kind) {
    failures_[{agent_index, round}] = kind;
}

Completion ScriptedBackend::complete(const std::vector<ChatMessage>& history,
                                     const DecodingParams& params, const CallMeta& meta) {
    (void)params;
    if (history.empty()) throw DomainError("history must not be empty");
    const auto fail = failures_.find({meta.agent_index, meta.round});
    if (fail != failures_.end())
        throw BackendError(fail->second,
                           "scripted failure at agent " + std::to_string(meta.agent_index) +
                               " round " + std::to_string(meta.round));
    const auto it = entries_.find({meta.agent_index, meta.round});
    std::string text;
    if (it != entries_.end())
        text = it->second;
    else if (meta.round == -1)
        text = "ok";
    else if (default_text_)
        text = *default_text_;
    else
        throw BackendError(BackendError::Kind::Fatal,
                           "no script for agent " + std::to_string(meta.agent_index) +
                               " round " + std::to_string(meta.round));
    return word_counted(history, std::move(text));
}

// --- StochasticBackend ---

StochasticBackend::StochasticBackend(double base_accuracy, double sway_probability)
    : base_accuracy_(base_accuracy), sway_probability_(sway_probability) {
    if (base_accuracy < 0.0 || base_accuracy > 1.0)
        throw ConfigError("backend.base_accuracy", "must be in [0, 1]");
    if (sway_probability < 0.0 || sway_probability > 1.0)
        throw ConfigError("backend.sway_probability", "must be in [0, 1]");
}

void StochasticBackend::set_gold(std::string letter) {
    if (std::find(alphabet_.begin(), alphabet_.end(), letter) == alphabet_.end())
        throw ConfigError("backend.gold", "gold letter '" + letter + "' not in alphabet");
    gold_ = std::move(letter);
}

Completion StochasticBackend::complete(const std::vector<ChatMessage>& history,
                                       const DecodingParams& params, const CallMeta& meta) {
    (void)params;
    if (history.empty()) throw DomainError("history must not be empty");
    if (meta.round == -1) return word_counted(history, "ok");

    Rng rng(derive_call_seed(meta.experiment_seed, meta.case_id, meta.trial,
                             meta.agent_index, meta.round));

    auto wrap = [&](const std::string& letter) {
        return word_counted(history, "(" + letter + ")");
    };
    auto uniform_except = [&](const std::string& excluded) {
        std::vector<std::string> pool;
        for (const auto& a : alphabet_)
            if (a != excluded) pool.push_back(a);
        return pool[rng.next_below(pool.size())];
    };

    if (meta.round == 0) {
        if (rng.next_double() < base_accuracy_) return wrap(gold_);
        return wrap(uniform_except(gold_));
    }

    // own previous answer: last "(L)" in the latest assistant message
    std::string own;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        if (it->role != Role::Assistant) continue;
        const auto letters = scan_letters(it->content, alphabet_);
        if (!letters.empty()) own = letters.back();
        break;
    }
    // other agents' previous answers arrive inside the latest user message
    std::vector<std::string> votes;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        if (it->role != Role::User) continue;
        votes = scan_letters(it->content, alphabet_);
        break;
    }
    if (!own.empty()) votes.push_back(own);

    const std::string mode = unique_mode(votes);
    if (mode.empty())
        return wrap(own.empty() ? alphabet_[rng.next_below(alphabet_.size())] : own);
    if (rng.next_double() < sway_probability_) return wrap(mode);
    if (!own.empty() && own != mode) return wrap(own);
    return wrap(uniform_except(mode));
}

// --- RetryBackend ---

RetryBackend::RetryBackend(std::shared_ptr<Backend> inner, RetryPolicy policy,
                           Sleeper sleeper, std::uint64_t jitter_seed)
    : inner_(std::move(inner)),
      policy_(policy),
      sleeper_(sleeper ? std::move(sleeper) : default_sleep_ms),
      jitter_(jitter_seed) {
    if (policy_.max_attempts < 1)
        throw ConfigError("backend.retry.max_attempts", "must be >= 1");
}

Completion RetryBackend::complete(const std::vector<ChatMessage>& history,
                                  const DecodingParams& params, const CallMeta& meta) {
    int attempt = 0;
    while (true) {
        ++attempt;
        try {
            Completion c = inner_->complete(history, params, meta);
            c.attempts = attempt;
            return c;
        } catch (const BackendError& e) {
            if (e.kind == BackendError::Kind::Fatal) throw;
            if (e.kind == BackendError::Kind::Protocol)
                throw BackendError(BackendError::Kind::Fatal,
                                   std::string("protocol error: ") + e.what(), attempt);
            if (attempt >= policy_.max_attempts)
                throw BackendError(BackendError::Kind::Fatal,
                                   "retries exhausted, last error: " + std::string(e.what()),
                                   attempt);
            std::int64_t cap;
            {
                std::lock_guard<std::mutex> lock(mutex_);
                cap = static_cast<std::int64_t>(
                    policy_.base_backoff_ms * static_cast<double>(1LL << (attempt - 1)) *
                    jitter_.next_double());
            }
            sleeper_(cap);
        }
    }
}

// --- RateLimiter ---

RateLimiter::RateLimiter(int rpm_limit, int max_inflight, Clock clock, Sleeper sleeper)
    : rpm_limit_(rpm_limit),
      max_inflight_(max_inflight),
      clock_(clock ? std::move(clock) : steady_now_ms),
      sleeper_(sleeper ? std::move(sleeper) : default_sleep_ms) {}

void RateLimiter::acquire() {
    while (true) {
        std::int64_t wait_ms = 0;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            const std::int64_t now = clock_();
            window_.erase(std::remove_if(window_.begin(), window_.end(),
                                         [&](std::int64_t t) { return now - t >= 60000; }),
                          window_.end());
            const bool inflight_ok = max_inflight_ <= 0 || inflight_ < max_inflight_;
            const bool rpm_ok =
                rpm_limit_ <= 0 || static_cast<int>(window_.size()) < rpm_limit_;
            if (inflight_ok && rpm_ok) {
                ++inflight_;
                if (rpm_limit_ > 0) window_.push_back(now);
                return;
            }
            if (!rpm_ok) {
                const std::int64_t oldest =
                    *std::min_element(window_.begin(), window_.end());
                wait_ms = std::max<std::int64_t>(1, 60000 - (now - oldest));
            } else {
                wait_ms = 1;
            }
        }
        sleeper_(wait_ms);
    }
}

void RateLimiter::release() {
    std::lock_guard<std::mutex> lock(mutex_);
    --inflight_;
}

// --- HttpBackend ---

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    const std::string& url = options_.base_url;
    const std::size_t scheme = url.find("://");
    if (scheme == std::string::npos ||
        (url.compare(0, scheme, "http") != 0 && url.compare(0, scheme, "https") != 0))
        throw ConfigError("backend.base_url", "expected http(s)://host[:port][/prefix]");
    const std::size_t slash = url.find('/', scheme + 3);
    host_ = slash == std::string::npos ? url : url.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    path_ = prefix + "/chat/completions";
    if (const char* key = std::getenv("SOM_API_KEY")) api_key_ = key;
    if (options_.rpm_limit > 0 || options_.max_inflight > 0)
        limiter_ = std::make_unique<RateLimiter>(options_.rpm_limit, options_.max_inflight);
}

HttpBackend::~HttpBackend() = default;

Completion HttpBackend::complete(const std::vector<ChatMessage>& history,
                                 const DecodingParams& params, const CallMeta& meta) {
    (void)meta;  // replies depend only on (history, params); see CallMeta
    if (history.empty()) throw DomainError("history must not be empty");

    struct Slot {
        RateLimiter* limiter;
        ~Slot() {
            if (limiter) limiter->release();
        }
    } slot{nullptr};
    if (limiter_) {
        limiter_->acquire();
        slot.limiter = limiter_.get();
    }

    nlohmann::ordered_json body;
    body["model"] = options_.model;
    body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : history)
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    if (params.top_k) body["top_k"] = *params.top_k;

    httplib::Client client(host_);
    client.set_connection_timeout(std::chrono::milliseconds(options_.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(options_.timeout_ms));
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const std::int64_t started = steady_now_ms();
    const httplib::Result res =
        client.Post(path_, headers, body.dump(), "application/json");
    const std::int64_t latency = steady_now_ms() - started;

    if (!res)
        throw BackendError(BackendError::Kind::Retryable,
                           "transport failure: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw BackendError(BackendError::Kind::Retryable,
                           "http status " + std::to_string(res->status));
    if (res->status < 200 || res->status >= 300)
        throw BackendError(BackendError::Kind::Protocol,
                           "http status " + std::to_string(res->status));

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw BackendError(BackendError::Kind::Protocol,
                           std::string("invalid JSON reply: ") + e.what());
    }
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty() ||
        !doc["choices"][0].contains("message") ||
        !doc["choices"][0]["message"].contains("content") ||
        !doc["choices"][0]["message"]["content"].is_string())
        throw BackendError(BackendError::Kind::Protocol,
                           "reply lacks choices[0].message.content");

    Completion c;
    c.text = doc["choices"][0]["message"]["content"].get<std::string>();
    c.latency_ms = latency;
    if (doc.contains("usage") && doc["usage"].is_object() &&
        doc["usage"].value("prompt_tokens", -1) >= 0 &&
        doc["usage"].value("completion_tokens", -1) >= 0) {
        c.prompt_tokens = doc["usage"]["prompt_tokens"].get<std::size_t>();
        c.completion_tokens = doc["usage"]["completion_tokens"].get<std::size_t>();
    } else {
        std::size_t prompt = 0;
        for (const auto& m : history) prompt += word_count(m.content);
        c.prompt_tokens = prompt;
        c.completion_tokens = word_count(c.text);
        c.approximate_usage = true;
    }
    return c;
}

}  // namespace som
