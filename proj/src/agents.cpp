#include "mathgen/agents.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mathgen/error.hpp"

namespace mathgen {

std::string_view to_string(DecisionKind kind) {
    switch (kind) {
        case DecisionKind::New: return "NEW";
        case DecisionKind::Revise: return "REVISE";
        case DecisionKind::Agree: return "AGREE";
    }
    return "UNKNOWN";
}

std::string_view to_string(AgentRole role) {
    switch (role) {
        case AgentRole::Teacher: return "teacher";
        case AgentRole::Critic: return "critic";
        case AgentRole::Versatile: return "versatile";
        case AgentRole::Ceo: return "ceo";
        case AgentRole::Bloom: return "bloom";
        case AgentRole::Judge: return "judge";
    }
    return "unknown";
}

void GenerationContext::validate() const {
    if (autocot && solution_generation) {
        throw ConfigError("autocot and solution_generation cannot both be enabled");
    }
    if (kc.empty()) throw ConfigError("generation context has no KC name");
}

void check_decision(const AgentDecision& d, std::optional<std::size_t> n_candidates) {
    const auto word = std::string(to_string(d.kind));
    const bool needs_pair = d.kind != DecisionKind::Agree;
    const bool needs_target = d.kind != DecisionKind::New;
    if (needs_pair && !d.pair) throw ParseError(word + " requires QUESTION and ANSWER");
    if (d.pair && (d.pair->question.empty() || d.pair->answer.empty())) {
        throw ParseError(word + " has an empty QUESTION or ANSWER");
    }
    if (needs_target && !d.target) throw ParseError(word + " requires TARGET");
    if (needs_target && (!d.feedback || d.feedback->empty())) {
        throw ParseError(word + " requires FEEDBACK");
    }
    if (d.target && n_candidates) {
        if (*d.target < 1 || static_cast<std::size_t>(*d.target) > *n_candidates) {
            throw ParseError("TARGET " + std::to_string(*d.target) + " does not name one of the " +
                             std::to_string(*n_candidates) + " candidates");
        }
    }
}

// ---------------------------------------------------------------------------
// Grammar

std::string qa_format(bool autocot) {
    if (autocot) {
        return "QUESTION: <the question>\nREASONING: <step-by-step working>\nANSWER: <the final answer>";
    }
    return "QUESTION: <the question>\nANSWER: <the final answer>";
}

std::string decision_format(bool has_candidates, bool autocot) {
    const std::string reasoning = autocot ? "REASONING: <step-by-step working>\n" : "";
    if (!has_candidates) {
        return "DECISION: NEW\nQUESTION: <the question>\n" + reasoning +
               "ANSWER: <the final answer>\nFEEDBACK: <optional note to the group>";
    }
    return "DECISION: NEW | REVISE | AGREE\n"
           "TARGET: <candidate number; required for REVISE and AGREE>\n"
           "QUESTION: <the question; required for NEW and REVISE>\n" +
           reasoning +
           "ANSWER: <the final answer; required for NEW and REVISE>\n"
           "FEEDBACK: <constructive feedback; required for REVISE and AGREE>";
}

std::string serialize_pair(const QAPair& pair) {
    std::string out = "QUESTION: " + pair.question + "\n";
    if (pair.reasoning) out += "REASONING: " + *pair.reasoning + "\n";
    out += "ANSWER: " + pair.answer;
    return out;
}

std::string serialize_decision(const AgentDecision& d) {
    std::string out = "DECISION: " + std::string(to_string(d.kind));
    if (d.target) out += "\nTARGET: " + std::to_string(*d.target);
    if (d.pair) out += "\n" + serialize_pair(*d.pair);
    if (d.feedback) out += "\nFEEDBACK: " + *d.feedback;
    return out;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

// Mixed-case labels keep prompt content distinct from the reply grammar.
std::string show_pair(const QAPair& pair) {
    std::string out = "Question: " + pair.question + "\n";
    if (pair.reasoning) out += "Reasoning: " + *pair.reasoning + "\n";
    out += "Answer: " + pair.answer;
    return out;
}

std::string speaker_name(const Speaker& s) {
    switch (s.role) {
        case AgentRole::Teacher: return "Teacher";
        case AgentRole::Critic: return "Critic";
        case AgentRole::Versatile: return "Agent " + std::to_string(s.agent);
        case AgentRole::Ceo: return "CEO";
        case AgentRole::Bloom: return "Bloom Agent";
        case AgentRole::Judge: return "Evaluator";
    }
    return "Unknown";
}

std::string mode_instruction(const TemplateSet& templates, const GenerationContext& ctx) {
    if (ctx.autocot) return templates.get("mode_autocot");
    if (ctx.solution_generation) return templates.get("mode_solution");
    return "";
}

std::vector<ChatMessage> two_part(std::string system, std::string user) {
    return {{ChatRole::System, std::move(system)}, {ChatRole::User, std::move(user)}};
}

}  // namespace

std::string difficulty_guidance(DifficultyLevel d) {
    switch (d) {
        case DifficultyLevel::Easy:
            return "a routine question that checks recall of a fact or a familiar one-step procedure";
        case DifficultyLevel::Medium:
            return "a question that needs the concept applied over a few steps";
        case DifficultyLevel::Hard:
            return "a multi-step question that needs analysis or the combination of several ideas";
    }
    return "";
}

std::string render_examples(const std::vector<SampledExample>& examples) {
    if (examples.empty()) return "";
    std::ostringstream out;
    out << "\nExample questions for this knowledge component:\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        out << "Example " << (i + 1);
        if (ex.shown_label) out << " (difficulty: " << to_string(*ex.shown_label) << ")";
        out << ":\n" << ex.record.body << "\n";
    }
    return out.str();
}

std::string render_history(const Transcript& history) {
    if (history.empty()) return "(no messages yet)";
    std::ostringstream out;
    bool first = true;
    for (const auto& m : history.messages()) {
        if (!first) out << "\n\n";
        first = false;
        out << "[" << speaker_name(m.speaker);
        if (m.round > 0) out << ", round " << m.round;
        if (m.decision) out << ", " << to_string(m.decision->kind);
        out << "]\n";
        if (m.decision) {
            const auto& d = *m.decision;
            if (d.target) out << "Target: candidate " << *d.target << "\n";
            if (d.pair) out << show_pair(*d.pair) << "\n";
            if (d.feedback) out << "Feedback: " << *d.feedback << "\n";
        } else if (m.pair) {
            out << show_pair(*m.pair) << "\n";
        } else if (m.feedback) {
            out << "Feedback: " << *m.feedback << "\n";
        } else if (m.verdict) {
            out << "Consensus: " << (m.verdict->consensus ? "yes" : "no") << "\nChoice: candidate "
                << m.verdict->choice << "\n";
        } else {
            out << m.raw << "\n";
        }
    }
    auto s = out.str();
    while (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
}

std::string render_candidates(const std::vector<Candidate>& candidates) {
    if (candidates.empty()) return "There are no candidates yet.";
    std::ostringstream out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i > 0) out << "\n\n";
        out << "Candidate " << (i + 1) << " (by " << speaker_name(candidates[i].author) << "):\n"
            << show_pair(candidates[i].pair);
    }
    return out.str();
}

TemplateVars context_vars(const GenerationContext& ctx) {
    return {
        {"kc", ctx.kc},
        {"difficulty", std::string(to_string(ctx.difficulty))},
        {"difficulty_guidance", difficulty_guidance(ctx.difficulty)},
        {"examples", render_examples(ctx.examples)},
    };
}

std::vector<ChatMessage> render_teacher_prompt(const TemplateSet& templates,
                                               const GenerationContext& ctx,
                                               const Transcript* history) {
    ctx.validate();
    auto vars = context_vars(ctx);
    vars["mode_instruction"] = mode_instruction(templates, ctx);
    vars["format"] = qa_format(ctx.autocot);
    auto system = templates.render("teacher_system", vars);

    const TranscriptMessage* previous = nullptr;
    const TranscriptMessage* feedback = nullptr;
    if (history) {
        for (const auto& m : history->messages()) {
            if (m.pair) previous = &m;
            if (m.feedback) feedback = &m;
        }
    }
    if (previous && feedback) {
        vars["previous"] = show_pair(*previous->pair);
        vars["feedback"] = *feedback->feedback;
        vars["history"] = render_history(*history);
        return two_part(std::move(system), templates.render("teacher_revision", vars));
    }
    return two_part(std::move(system), templates.render("teacher_user", vars));
}

std::vector<ChatMessage> render_critic_prompt(const TemplateSet& templates, const QAPair& pair,
                                              const GenerationContext& ctx,
                                              const Transcript& history) {
    ctx.validate();
    auto vars = context_vars(ctx);
    vars["history"] = render_history(history);
    vars["pair"] = show_pair(pair);
    return two_part(templates.render("critic_system", vars), templates.render("critic_user", vars));
}

std::vector<ChatMessage> render_versatile_prompt(const TemplateSet& templates,
                                                 const GenerationContext& ctx,
                                                 const Transcript& history,
                                                 const std::vector<Candidate>& candidates,
                                                 int agent) {
    ctx.validate();
    const bool has = !candidates.empty();
    auto vars = context_vars(ctx);
    vars["agent"] = std::to_string(agent);
    vars["mode_instruction"] = mode_instruction(templates, ctx);
    vars["format"] = decision_format(has, ctx.autocot);
    vars["decision_rules"] =
        has ? "- NEW: propose a new question and answer.\n"
              "- REVISE: improve one of the current candidates and explain what you changed.\n"
              "- AGREE: endorse one of the current candidates and give constructive feedback."
            : "- NEW: there are no candidates yet, so you must propose a new question and answer.";
    vars["history"] = render_history(history);
    vars["candidates"] = render_candidates(candidates);
    return two_part(templates.render("versatile_system", vars),
                    templates.render("versatile_user", vars));
}

std::vector<ChatMessage> render_ceo_prompt(const TemplateSet& templates,
                                           const GenerationContext& ctx, const Transcript& history,
                                           const std::vector<Candidate>& candidates) {
    if (history.empty()) throw std::invalid_argument("CEO prompt needs a non-empty discussion");
    if (candidates.empty()) throw std::invalid_argument("CEO prompt needs at least one candidate");
    auto vars = context_vars(ctx);
    vars["history"] = render_history(history);
    vars["candidates"] = render_candidates(candidates);
    return two_part(templates.render("ceo_system", vars), templates.render("ceo_user", vars));
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

const std::vector<std::string_view> kLabels = {
    "QUESTION", "ANSWER",     "REASONING", "FEEDBACK",   "TARGET",
    "DECISION", "CONSENSUS",  "CHOICE",    "RATIONALE",  "SCORE",
    "CLARITY",  "RELEVANCE",  "IMPORTANCE", "DIFFICULTY_MATCHING", "ANSWERABILITY",
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Recognizes "LABEL: value" lines, tolerating markdown bullets and emphasis.
std::optional<std::pair<std::string, std::string_view>> label_line(std::string_view line) {
    auto s = trim(line);
    while (!s.empty() && (s.front() == '*' || s.front() == '#' || s.front() == '-' ||
                          s.front() == '_' || s.front() == '>')) {
        s.remove_prefix(1);
        s = trim(s);
    }
    const auto colon = s.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon > 24) return std::nullopt;
    auto head = s.substr(0, colon);
    while (!head.empty() && (head.back() == '*' || head.back() == '_' || head.back() == ' ')) {
        head.remove_suffix(1);
    }
    std::string label;
    for (char c : head) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            label.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        } else if (c == ' ' || c == '_') {
            label.push_back('_');
        } else {
            return std::nullopt;
        }
    }
    if (std::find(kLabels.begin(), kLabels.end(), label) == kLabels.end()) return std::nullopt;
    auto value = s.substr(colon + 1);
    while (!value.empty() && (value.front() == '*' || value.front() == '_')) value.remove_prefix(1);
    return std::make_pair(std::move(label), value);
}

// First occurrence of each label; a section runs until the next label line.
std::map<std::string, std::string> sections(std::string_view text) {
    std::map<std::string, std::string> out;
    std::string current;
    std::string buffer;
    auto flush = [&] {
        if (!current.empty() && !out.contains(current)) out[current] = std::string(trim(buffer));
        buffer.clear();
    };
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(pos, end - pos);
        if (auto hit = label_line(line)) {
            flush();
            current = hit->first;
            buffer = std::string(hit->second);
        } else if (!current.empty()) {
            buffer.push_back('\n');
            buffer.append(line);
        }
        pos = end + 1;
    }
    flush();
    return out;
}

std::optional<std::string> section(const std::map<std::string, std::string>& s,
                                   const std::string& label) {
    auto it = s.find(label);
    if (it == s.end() || it->second.empty()) return std::nullopt;
    return it->second;
}

std::optional<long> first_integer(std::string_view value) {
    const auto start = value.find_first_of("0123456789");
    if (start == std::string_view::npos) return std::nullopt;
    if (start > 0 && value[start - 1] == '-') return std::nullopt;
    long n = 0;
    auto [ptr, ec] = std::from_chars(value.data() + start, value.data() + value.size(), n);
    if (ec != std::errc{}) return std::nullopt;
    // "4.5" is not an integer score
    if (ptr + 1 < value.data() + value.size() && *ptr == '.' &&
        std::isdigit(static_cast<unsigned char>(ptr[1]))) {
        return std::nullopt;
    }
    return n;
}

}  // namespace

QAPair parse_qa(std::string_view text, bool keep_reasoning) {
    const auto s = sections(text);
    auto q = section(s, "QUESTION");
    auto a = section(s, "ANSWER");
    if (!q || !a) throw ParseError("reply must contain QUESTION: and ANSWER: sections");
    QAPair pair{std::move(*q), std::move(*a), std::nullopt};
    if (keep_reasoning) pair.reasoning = section(s, "REASONING");
    return pair;
}

AgentDecision parse_decision(std::string_view text, std::optional<std::size_t> n_candidates,
                             bool keep_reasoning) {
    const auto s = sections(text);
    auto word = section(s, "DECISION");
    if (!word) throw ParseError("reply must contain a DECISION: line");
    std::string w;
    for (char c : *word) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            w.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        } else if (!w.empty()) {
            break;
        }
    }
    AgentDecision d;
    if (w == "NEW") d.kind = DecisionKind::New;
    else if (w == "REVISE") d.kind = DecisionKind::Revise;
    else if (w == "AGREE") d.kind = DecisionKind::Agree;
    else throw ParseError("unknown decision '" + *word + "'; expected NEW, REVISE or AGREE");

    d.feedback = section(s, "FEEDBACK");
    if (d.kind != DecisionKind::Agree) {
        auto q = section(s, "QUESTION");
        auto a = section(s, "ANSWER");
        if (q && a) {
            d.pair = QAPair{std::move(*q), std::move(*a), std::nullopt};
            if (keep_reasoning) d.pair->reasoning = section(s, "REASONING");
        }
    }
    if (d.kind != DecisionKind::New) {
        if (auto t = section(s, "TARGET")) {
            auto n = first_integer(*t);
            if (!n) throw ParseError("TARGET '" + *t + "' is not a candidate number");
            d.target = static_cast<int>(*n);
        }
    }
    check_decision(d, n_candidates);
    return d;
}

CeoVerdict parse_ceo(std::string_view text, std::size_t n_candidates) {
    const auto s = sections(text);
    auto consensus = section(s, "CONSENSUS");
    if (!consensus) throw ParseError("reply must contain a CONSENSUS: yes|no line");
    std::string c;
    for (char ch : *consensus) {
        if (!std::isalpha(static_cast<unsigned char>(ch))) {
            if (!c.empty()) break;
            continue;
        }
        c.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    CeoVerdict v;
    if (c == "yes" || c == "true") v.consensus = true;
    else if (c == "no" || c == "false") v.consensus = false;
    else throw ParseError("CONSENSUS must be yes or no, got '" + *consensus + "'");

    auto choice = section(s, "CHOICE");
    if (!choice) throw ParseError("reply must contain a CHOICE: line");
    auto n = first_integer(*choice);
    if (!n) throw ParseError("CHOICE '" + *choice + "' is not a candidate number");
    if (*n < 1 || static_cast<std::size_t>(*n) > n_candidates) {
        throw ParseError("CHOICE " + std::to_string(*n) + " is outside [1, " +
                         std::to_string(n_candidates) + "]");
    }
    v.choice = static_cast<int>(*n);
    v.rationale = section(s, "RATIONALE");
    return v;
}

std::string parse_feedback(std::string_view text) {
    const auto s = sections(text);
    if (auto f = section(s, "FEEDBACK")) return *f;
    auto whole = trim(text);
    if (whole.empty()) throw ParseError("empty feedback");
    return std::string(whole);
}

int parse_score(std::string_view text, std::string_view label) {
    const auto s = sections(text);
    auto value = section(s, std::string(label));
    if (!value) throw ParseError("reply must contain a " + std::string(label) + ": line");
    auto n = first_integer(*value);
    if (!n) throw ParseError(std::string(label) + " '" + *value + "' is not an integer");
    if (*n < 1 || *n > 5) {
        throw ParseError(std::string(label) + " " + std::to_string(*n) + " is outside [1, 5]");
    }
    return static_cast<int>(*n);
}

// ---------------------------------------------------------------------------
// Calls

void CallLog::add(CallRecord record) {
    std::lock_guard lock(mu_);
    records_.push_back(std::move(record));
}

std::vector<CallRecord> CallLog::records() const {
    std::lock_guard lock(mu_);
    return records_;
}

TokenUsage CallLog::usage() const {
    std::lock_guard lock(mu_);
    TokenUsage total;
    for (const auto& r : records_) total += r.usage;
    return total;
}

std::size_t CallLog::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

RawTurn ask_raw(const AgentEnv& env, const TurnSpec& turn, std::vector<ChatMessage> messages,
                const std::function<void(std::string_view)>& accept) {
    std::string last_error;
    std::string last_raw;
    for (int attempt = 1; attempt <= kMaxCorrectiveRetries + 1; ++attempt) {
        ChatRequest request;
        request.model = turn.model;
        request.messages = messages;
        request.temperature = turn.temperature;
        request.sampling_seed = turn.seed;
        request.max_tokens = env.models.max_tokens;
        auto response = env.backend.complete(request);

        CallRecord rec;
        rec.speaker = turn.speaker;
        rec.round = turn.round;
        rec.response = response.content;
        rec.attempts = response.attempts;
        rec.backoff = response.backoff;
        rec.latency = response.latency;
        rec.usage = response.usage;
        try {
            accept(response.content);
            if (env.log) {
                rec.request = std::move(request);
                env.log->add(std::move(rec));
            }
            return {std::move(response.content), attempt};
        } catch (const ParseError& e) {
            last_error = e.what();
            last_raw = response.content;
            rec.parse_error = last_error;
            if (env.log) {
                rec.request = std::move(request);
                env.log->add(std::move(rec));
            }
        }
        messages.push_back({ChatRole::Assistant, last_raw.empty() ? std::string("(empty reply)")
                                                                   : last_raw});
        messages.push_back({ChatRole::User, render_template(env.templates.get("correction"),
                                                            {{"error", last_error},
                                                             {"format", turn.format}})});
    }
    throw TurnFailed(std::string(to_string(turn.speaker.role)), turn.speaker.agent, turn.round,
                     kMaxCorrectiveRetries + 1, last_error, last_raw);
}

}  // namespace mathgen
