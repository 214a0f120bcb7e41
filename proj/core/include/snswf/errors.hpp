#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snswf {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed an argument outside the operation's domain.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Malformed text input. Line and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column = 0)
        : Error(message), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Well-formed input that violates a structural requirement (e.g. non-uniform time grid).
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Base for failures that depend on the numerical content of the data.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DegenerateInputError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateWhiteningError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularSystemError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularSpectrumError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UndefinedSnrError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace snswf
