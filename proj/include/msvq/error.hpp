#ifndef MSVQ_ERROR_HPP
#define MSVQ_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace msvq {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad data handed to an operation (empty series, dimension mismatch, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Inconsistent parameters (section count, weights, feature set, ...).
class InvalidConfig : public Error {
public:
    using Error::Error;
};

// Text-format failure; line() is 1-based, 0 when the failure is not tied to a line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line), message_(what) {}

    std::size_t line() const noexcept { return line_; }
    // The message without the line prefix.
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::string message_;
};

// Model file could not be loaded (version, truncation, ...).
class LoadError : public Error {
public:
    using Error::Error;
};

} // namespace msvq

#endif
