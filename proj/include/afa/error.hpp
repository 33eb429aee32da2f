#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace afa {

// Base of every error raised by the library. Callers that only need a
// message can catch this; the CLI maps the concrete types to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An argument violated a documented precondition.
class InputError : public Error {
public:
    using Error::Error;
};

// A value left the definition domain of a conjugation function inside a
// forward or backward pass. Carries the branch it came from.
class DomainError : public Error {
public:
    DomainError(std::size_t branch, const std::string& what)
        : Error("branch " + std::to_string(branch) + ": " + what), branch_(branch) {}

    std::size_t branch() const noexcept { return branch_; }

private:
    std::size_t branch_;
};

// Non-finite value in a gradient computation.
class NumericError : public Error {
public:
    using Error::Error;
};

// Session bookkeeping violated (missing classes, too few shots, ...).
class ProtocolError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    TrainingError(std::size_t epoch, const std::string& what)
        : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

// Malformed text input (config or feature file). The message names the
// source and line.
class ParseError : public Error {
public:
    using Error::Error;
};

class ConfigError : public ParseError {
public:
    using ParseError::ParseError;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace afa
