#pragma once

#include <cstddef>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "mathgen/backend.hpp"
#include "mathgen/corpus.hpp"
#include "mathgen/templates.hpp"

namespace mathgen {

struct QAPair {
    std::string question;
    std::string answer;
    std::optional<std::string> reasoning;

    bool operator==(const QAPair&) const = default;
};

enum class DecisionKind { New, Revise, Agree };

std::string_view to_string(DecisionKind kind);

/// One versatile-agent turn. New carries a pair; Revise carries a pair, a
/// target and feedback; Agree carries a target and feedback. Targets are
/// 1-based candidate numbers.
struct AgentDecision {
    DecisionKind kind = DecisionKind::New;
    std::optional<QAPair> pair;
    std::optional<std::string> feedback;
    std::optional<int> target;

    bool operator==(const AgentDecision&) const = default;
};

// Throws ParseError when the field-presence rules do not hold.
void check_decision(const AgentDecision& decision, std::optional<std::size_t> n_candidates = {});

struct GenerationContext {
    std::string kc;
    DifficultyLevel difficulty = DifficultyLevel::Medium;
    std::vector<SampledExample> examples;
    bool autocot = false;
    bool solution_generation = false;

    // autocot and solution_generation are mutually exclusive.
    void validate() const;
};

enum class AgentRole { Teacher, Critic, Versatile, Ceo, Bloom, Judge };

std::string_view to_string(AgentRole role);

struct Speaker {
    AgentRole role = AgentRole::Teacher;
    int agent = 1;  // 1-based within its role

    bool operator==(const Speaker&) const = default;
};

struct CeoVerdict {
    bool consensus = false;
    int choice = 1;  // 1-based
    std::optional<std::string> rationale;
};

struct TranscriptMessage {
    Speaker speaker;
    int round = 0;  // 0 for the initial TCC generation and the CEO turn
    std::optional<AgentDecision> decision;  // versatile turns
    std::optional<QAPair> pair;             // teacher turns
    std::optional<std::string> feedback;    // critic turns
    std::optional<CeoVerdict> verdict;      // CEO turn
    std::string raw;
    DecodingParams params;
    int attempts = 1;
};

// Append-only conversation log.
class Transcript {
public:
    void append(TranscriptMessage message) { messages_.push_back(std::move(message)); }
    const std::vector<TranscriptMessage>& messages() const noexcept { return messages_; }
    std::size_t size() const noexcept { return messages_.size(); }
    bool empty() const noexcept { return messages_.empty(); }
    const TranscriptMessage& back() const { return messages_.back(); }

private:
    std::vector<TranscriptMessage> messages_;
};

struct Candidate {
    QAPair pair;
    Speaker author;
    std::size_t message_index = 0;
    std::optional<int> revises;  // 1-based candidate this one revises
};

// Output grammars.
std::string qa_format(bool autocot);
std::string decision_format(bool has_candidates, bool autocot);
std::string serialize_pair(const QAPair& pair);
std::string serialize_decision(const AgentDecision& decision);

std::string render_examples(const std::vector<SampledExample>& examples);
std::string render_history(const Transcript& history);
std::string render_candidates(const std::vector<Candidate>& candidates);
std::string difficulty_guidance(DifficultyLevel d);

// Variables shared by every prompt about a generation context.
TemplateVars context_vars(const GenerationContext& ctx);

std::vector<ChatMessage> render_teacher_prompt(const TemplateSet& templates,
                                               const GenerationContext& ctx,
                                               const Transcript* history = nullptr);
std::vector<ChatMessage> render_critic_prompt(const TemplateSet& templates, const QAPair& pair,
                                              const GenerationContext& ctx,
                                              const Transcript& history);
std::vector<ChatMessage> render_versatile_prompt(const TemplateSet& templates,
                                                 const GenerationContext& ctx,
                                                 const Transcript& history,
                                                 const std::vector<Candidate>& candidates,
                                                 int agent);
// Throws std::invalid_argument on empty history or no candidates.
std::vector<ChatMessage> render_ceo_prompt(const TemplateSet& templates,
                                           const GenerationContext& ctx, const Transcript& history,
                                           const std::vector<Candidate>& candidates);

// Parsers accept surrounding prose, markdown emphasis and any label case.
QAPair parse_qa(std::string_view text, bool keep_reasoning = true);
AgentDecision parse_decision(std::string_view text,
                             std::optional<std::size_t> n_candidates = std::nullopt,
                             bool keep_reasoning = true);
CeoVerdict parse_ceo(std::string_view text, std::size_t n_candidates);
std::string parse_feedback(std::string_view text);
int parse_score(std::string_view text, std::string_view label = "SCORE");

struct CallRecord {
    Speaker speaker;
    int round = 0;
    ChatRequest request;
    std::string response;
    int attempts = 1;
    std::vector<std::chrono::milliseconds> backoff;
    std::chrono::milliseconds latency{0};
    TokenUsage usage;
    std::optional<std::string> parse_error;
};

// Every request/response pair of a run, including rejected replies.
class CallLog {
public:
    void add(CallRecord record);
    std::vector<CallRecord> records() const;
    TokenUsage usage() const;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::vector<CallRecord> records_;
};

struct ModelSettings {
    std::string generator = "gpt-4o";
    std::string judge = "gpt-4";
    std::optional<int> max_tokens;
};

struct AgentEnv {
    ChatBackend& backend;
    const TemplateSet& templates;
    ModelSettings models;
    CallLog* log = nullptr;
};

inline constexpr int kMaxCorrectiveRetries = 2;

struct TurnSpec {
    Speaker speaker;
    int round = 0;
    std::string model;
    double temperature = 0.0;
    std::optional<std::int64_t> seed;
    std::string format;  // grammar restated in the corrective reminder
};

template <typename T>
struct TurnResult {
    T value;
    std::string raw;
    int attempts = 1;
};

struct RawTurn {
    std::string raw;
    int attempts = 1;
};

/// Sends `messages` and hands the reply to `accept`. When `accept` throws
/// ParseError the reply and a corrective reminder are appended and the model
/// is asked again, at most kMaxCorrectiveRetries times; after that the turn
/// throws TurnFailed. Backend errors propagate unchanged.
RawTurn ask_raw(const AgentEnv& env, const TurnSpec& turn, std::vector<ChatMessage> messages,
                const std::function<void(std::string_view)>& accept);

template <typename Parse>
auto ask(const AgentEnv& env, const TurnSpec& turn, std::vector<ChatMessage> messages,
         Parse&& parse) {
    using T = std::invoke_result_t<Parse, std::string_view>;
    std::optional<T> value;
    auto raw = ask_raw(env, turn, std::move(messages),
                       [&](std::string_view text) { value = parse(text); });
    return TurnResult<T>{std::move(*value), std::move(raw.raw), raw.attempts};
}

}  // namespace mathgen
