#include "mathgen/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "mathgen/error.hpp"

namespace mathgen {

std::string_view to_string(ChatRole role) {
    switch (role) {
        case ChatRole::System: return "system";
        case ChatRole::User: return "user";
        case ChatRole::Assistant: return "assistant";
    }
    return "unknown";
}

void validate(const ChatRequest& request) {
    if (request.messages.empty()) throw ConfigError("chat request has no messages");
    for (const auto& m : request.messages) {
        if (m.content.empty()) throw ConfigError("chat message content is empty");
    }
    if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
        throw ConfigError("temperature must be in [0, 2]");
    }
    if (request.model.empty()) throw ConfigError("chat request has no model name");
}

DecodingParams draw_decoding_params(Rng& run_rng) {
    DecodingParams p;
    p.temperature = uniform_real(run_rng, kMinAgentTemperature, kMaxAgentTemperature);
    p.seed = static_cast<std::int64_t>(run_rng() >> 33);
    return p;
}

namespace {

std::int64_t count_words(std::string_view text) {
    std::int64_t n = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        const bool space = std::isspace(c) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

std::string request_key(const ChatRequest& request) {
    std::string key;
    for (const auto& m : request.messages) {
        key += to_string(m.role);
        key += '\x1f';
        key += m.content;
        key += '\x1e';
    }
    key += std::to_string(request.sampling_seed.value_or(-1));
    return key;
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses, std::vector<Rule> rules)
    : queue_(std::move(responses)), rules_(std::move(rules)) {
    for (const auto& r : rules_) {
        if (r.responses.empty()) throw ConfigError("mock rule '" + r.match + "' has no responses");
    }
}

ScriptedBackend::ScriptedBackend(ScriptedBackend&& other) noexcept {
    std::lock_guard lock(other.mu_);
    queue_ = std::move(other.queue_);
    next_ = other.next_;
    rules_ = std::move(other.rules_);
    seen_ = std::move(other.seen_);
}

ScriptedBackend ScriptedBackend::from_json(const nlohmann::json& script) {
    if (script.is_array()) return ScriptedBackend(script.get<std::vector<std::string>>());
    if (!script.is_object()) throw ConfigError("mock script must be a JSON array or object");
    std::vector<std::string> queue;
    if (script.contains("responses")) queue = script.at("responses").get<std::vector<std::string>>();
    std::vector<Rule> rules;
    if (script.contains("rules")) {
        for (const auto& r : script.at("rules")) {
            rules.push_back({r.at("match").get<std::string>(),
                             r.at("responses").get<std::vector<std::string>>()});
        }
    }
    return ScriptedBackend(std::move(queue), std::move(rules));
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock script '" + path + "'");
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid mock script '" + path + "': " + e.what());
    }
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
    validate(request);
    std::lock_guard lock(mu_);
    seen_.push_back(request);
    ChatResponse resp;
    if (next_ < queue_.size()) {
        resp.content = queue_[next_++];
    } else {
        const auto key = request_key(request);
        const Rule* hit = nullptr;
        for (const auto& rule : rules_) {
            if (key.find(rule.match) != std::string::npos) {
                hit = &rule;
                break;
            }
        }
        if (!hit) {
            throw ScriptExhausted("mock script exhausted after " + std::to_string(queue_.size()) +
                                  " scripted responses and no rule matched");
        }
        resp.content = hit->responses[fnv1a64(key) % hit->responses.size()];
    }
    for (const auto& m : request.messages) resp.usage.prompt_tokens += count_words(m.content);
    resp.usage.completion_tokens = count_words(resp.content);
    return resp;
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mu_);
    return seen_.size();
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
    std::lock_guard lock(mu_);
    return seen_;
}

std::chrono::milliseconds RetryPolicy::backoff_for(int retry) const {
    const double ms =
        static_cast<double>(initial_backoff.count()) * std::pow(multiplier, static_cast<double>(retry));
    const double capped = std::min(ms, static_cast<double>(max_backoff.count()));
    return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

ConcurrencyLimiter::ConcurrencyLimiter(int limit) : limit_(limit) {
    if (limit < 1) throw ConfigError("concurrency limit must be at least 1");
}

int ConcurrencyLimiter::in_use() const {
    std::lock_guard lock(mu_);
    return in_use_;
}

void ConcurrencyLimiter::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_use_ < limit_; });
    ++in_use_;
}

void ConcurrencyLimiter::release() {
    {
        std::lock_guard lock(mu_);
        --in_use_;
    }
    cv_.notify_one();
}

nlohmann::json to_wire(const ChatRequest& request) {
    nlohmann::json body;
    body["model"] = request.model;
    auto& msgs = body["messages"] = nlohmann::json::array();
    for (const auto& m : request.messages) {
        msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    body["temperature"] = request.temperature;
    if (request.sampling_seed) body["seed"] = *request.sampling_seed;
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
    return body;
}

ChatResponse from_wire(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedResponse(std::string("response is not JSON: ") + e.what());
    }
    ChatResponse resp;
    try {
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw MalformedResponse("message content is not a string");
        resp.content = content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw MalformedResponse(std::string("missing choices[0].message.content: ") + e.what());
    }
    if (resp.content.empty()) throw MalformedResponse("empty message content");
    if (j.contains("usage") && j["usage"].is_object()) {
        resp.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
        resp.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    return resp;
}

namespace {

std::string read_credential(const std::string& env_name) {
    const char* value = std::getenv(env_name.c_str());
    if (value == nullptr || *value == '\0') {
        throw ConfigError("credential environment variable " + env_name + " is not set");
    }
    return value;
}

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

OpenAIBackend::OpenAIBackend(LiveBackendConfig config, Sleeper sleeper)
    : OpenAIBackend(config, read_credential(config.api_key_env), std::move(sleeper)) {}

OpenAIBackend::OpenAIBackend(LiveBackendConfig config, std::string api_key, Sleeper sleeper)
    : config_(std::move(config)),
      api_key_(std::move(api_key)),
      sleeper_(std::move(sleeper)),
      limiter_(config_.max_concurrency) {
    if (api_key_.empty()) throw ConfigError("empty API credential");
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

    auto url = config_.base_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

ChatResponse OpenAIBackend::complete(const ChatRequest& request) {
    validate(request);
    const std::string body = to_wire(request).dump();
    const std::string path = path_prefix_ + "/v1/chat/completions";

    ConcurrencyLimiter::Permit permit(limiter_);
    httplib::Client client(scheme_host_port_);
    client.set_bearer_token_auth(api_key_);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    const auto start = std::chrono::steady_clock::now();
    std::vector<std::chrono::milliseconds> waits;
    std::string last_error;
    const int max_attempts = config_.retry.max_retries + 1;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        auto res = client.Post(path, body, "application/json");
        std::chrono::milliseconds retry_after{0};
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            auto resp = from_wire(res->body);
            resp.attempts = attempt;
            resp.backoff = waits;
            resp.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start);
            return resp;
        } else if (transient_status(res->status)) {
            last_error = "HTTP " + std::to_string(res->status);
            if (res->has_header("Retry-After")) {
                try {
                    retry_after = std::chrono::seconds(std::stol(res->get_header_value("Retry-After")));
                } catch (const std::exception&) {
                    // HTTP-date form is ignored
                }
            }
        } else {
            throw BackendError("HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        if (attempt == max_attempts) break;
        auto wait = std::max(config_.retry.backoff_for(attempt - 1), retry_after);
        wait = std::min(wait, std::max(config_.retry.max_backoff, config_.retry.backoff_for(0)));
        spdlog::warn("chat request attempt {}/{} failed ({}); retrying in {} ms", attempt,
                     max_attempts, last_error, wait.count());
        waits.push_back(wait);
        sleeper_(wait);
    }
    throw RetriesExhausted("chat request failed after " + std::to_string(max_attempts) +
                               " attempts: " + last_error,
                           max_attempts);
}

}  // namespace mathgen
