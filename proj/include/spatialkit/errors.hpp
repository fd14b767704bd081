#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spatialkit {

// Error categories map onto CLI exit codes: validation -> 1, io -> 2,
// anything else -> 3.
enum class ErrorKind { validation, io, internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class DecodeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class OutOfBoundsError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyMaskError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NoValidDepthError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SessionClosedError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Carries the byte offset (or token index, see message) of the offending input.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t position)
        : ValidationError(what), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

}  // namespace spatialkit
