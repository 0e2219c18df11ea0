#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ncert {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Syntax error in an expression string; position is a 0-based byte offset.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " (at position " + std::to_string(pos) + ")"), pos_(pos) {}
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

// Domain error during evaluation (division by zero, sqrt of a negative, ...).
class EvalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Raised by the decay-rate search when no rate in the scanned grid certifies.
class NoCertifiableRate : public Error {
public:
    using Error::Error;
};

}  // namespace ncert
