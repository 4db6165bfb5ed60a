#pragma once

#include <stdexcept>
#include <string>

namespace mathgen {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or missing configuration (including a missing credential).
class ConfigError : public Error {
public:
    using Error::Error;
};

class CorpusError : public Error {
public:
    using Error::Error;
};

// Model output that does not follow the expected grammar.
class ParseError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class RetriesExhausted : public BackendError {
public:
    RetriesExhausted(const std::string& what, int attempts)
        : BackendError(what), attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class ScriptExhausted : public BackendError {
public:
    using BackendError::BackendError;
};

class MalformedResponse : public BackendError {
public:
    using BackendError::BackendError;
};

// An agent turn that still failed to parse after its corrective retries.
class TurnFailed : public Error {
public:
    TurnFailed(std::string role, int agent, int round, int attempts, std::string last_error,
               std::string last_raw)
        : Error("turn failed: " + role + " (agent " + std::to_string(agent) + ", round " +
                std::to_string(round) + ") after " + std::to_string(attempts) +
                " attempts: " + last_error),
          role(std::move(role)), agent(agent), round(round), attempts(attempts),
          last_error(std::move(last_error)), last_raw(std::move(last_raw)) {}

    std::string role;
    int agent;
    int round;
    int attempts;
    std::string last_error;
    std::string last_raw;
};

}  // namespace mathgen
