#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mathgen/random.hpp"

namespace mathgen {

enum class ChatRole { System, User, Assistant };

std::string_view to_string(ChatRole role);

struct ChatMessage {
    ChatRole role;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::optional<std::int64_t> sampling_seed;
    std::optional<int> max_tokens;
};

// Throws ConfigError when the request violates its invariants.
void validate(const ChatRequest& request);

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    TokenUsage& operator+=(const TokenUsage& o) {
        prompt_tokens += o.prompt_tokens;
        completion_tokens += o.completion_tokens;
        return *this;
    }
};

struct ChatResponse {
    std::string content;
    TokenUsage usage;
    std::chrono::milliseconds latency{0};
    int attempts = 1;
    // Waits actually slept before each retry.
    std::vector<std::chrono::milliseconds> backoff;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

struct DecodingParams {
    double temperature = 0.0;
    std::int64_t seed = 0;
};

inline constexpr double kMinAgentTemperature = 0.7;
inline constexpr double kMaxAgentTemperature = 1.2;

// Per-agent decoding parameters: temperature uniform in [0.7, 1.2] and a
// non-negative 31-bit sampling seed.
DecodingParams draw_decoding_params(Rng& run_rng);

/// Deterministic backend for tests and offline sweeps.
///
/// Replies come from a sequential queue first. Once the queue is empty,
/// `rules` are consulted in order: the first rule whose `match` substring
/// occurs anywhere in the request picks one of its responses by a stable
/// hash of the request, so the reply depends only on the request and never
/// on call order. With neither left, complete() throws ScriptExhausted.
///
/// Script JSON is either an array of strings (queue only) or
/// `{"responses": [...], "rules": [{"match": "...", "responses": [...]}]}`.
class ScriptedBackend : public ChatBackend {
public:
    struct Rule {
        std::string match;
        std::vector<std::string> responses;
    };

    explicit ScriptedBackend(std::vector<std::string> responses, std::vector<Rule> rules = {});
    ScriptedBackend(ScriptedBackend&& other) noexcept;

    static ScriptedBackend from_json(const nlohmann::json& script);
    static ScriptedBackend from_file(const std::string& path);

    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "mock"; }

    std::size_t calls() const;
    std::vector<ChatRequest> requests() const;

private:
    mutable std::mutex mu_;
    std::vector<std::string> queue_;
    std::size_t next_ = 0;
    std::vector<Rule> rules_;
    std::vector<ChatRequest> seen_;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{1000};
    std::chrono::milliseconds max_backoff{30000};
    double multiplier = 2.0;

    // Wait before retry number `retry` (0-based): initial * multiplier^retry, capped.
    std::chrono::milliseconds backoff_for(int retry) const;
};

// Caps the number of simultaneous holders.
class ConcurrencyLimiter {
public:
    explicit ConcurrencyLimiter(int limit);

    class Permit {
    public:
        explicit Permit(ConcurrencyLimiter& owner) : owner_(&owner) { owner_->acquire(); }
        Permit(const Permit&) = delete;
        Permit& operator=(const Permit&) = delete;
        ~Permit() { owner_->release(); }

    private:
        ConcurrencyLimiter* owner_;
    };

    int limit() const noexcept { return limit_; }
    int in_use() const;

private:
    void acquire();
    void release();

    int limit_;
    int in_use_ = 0;
    mutable std::mutex mu_;
    std::condition_variable cv_;
};

struct LiveBackendConfig {
    std::string base_url = "https://api.openai.com";
    std::string api_key_env = "MATHGEN_API_KEY";
    std::chrono::seconds timeout{120};
    RetryPolicy retry;
    int max_concurrency = 4;
};

/// OpenAI-compatible chat completions client.
///
/// POSTs to `{base_url}/v1/chat/completions` with a bearer token read from
/// the configured environment variable. Connection errors, timeouts, 429 and
/// 5xx responses are retried with exponential backoff; other failures are
/// returned immediately.
class OpenAIBackend : public ChatBackend {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    // Throws ConfigError when the credential variable is unset or empty.
    explicit OpenAIBackend(LiveBackendConfig config, Sleeper sleeper = {});
    // Uses an explicit credential instead of the environment.
    OpenAIBackend(LiveBackendConfig config, std::string api_key, Sleeper sleeper = {});

    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "live"; }

    const LiveBackendConfig& config() const noexcept { return config_; }

private:
    LiveBackendConfig config_;
    std::string api_key_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    Sleeper sleeper_;
    ConcurrencyLimiter limiter_;
};

nlohmann::json to_wire(const ChatRequest& request);
// Throws MalformedResponse when the body lacks choices[0].message.content.
ChatResponse from_wire(const std::string& body);

}  // namespace mathgen
