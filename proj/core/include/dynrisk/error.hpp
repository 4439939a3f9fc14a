#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dynrisk {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string &what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_{line} {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Invalid configuration or inconsistent inputs between artifacts.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Arguments outside an operation's mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A model could not be trained on the supplied data.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// Cox fit diverged because a covariate perfectly orders the events.
class SeparationError : public TrainingError {
public:
    SeparationError(const std::string &what, std::string feature)
        : TrainingError(what), feature_{std::move(feature)} {}

    const std::string &feature() const noexcept { return feature_; }

private:
    std::string feature_;
};

class RankDeficiencyError : public TrainingError {
public:
    using TrainingError::TrainingError;
};

class OverflowError : public TrainingError {
public:
    using TrainingError::TrainingError;
};

/// Scoring failed for a specific subject.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string &what, std::string subject)
        : Error(what), subject_{std::move(subject)} {}

    const std::string &subject() const noexcept { return subject_; }

private:
    std::string subject_;
};

} // namespace dynrisk
