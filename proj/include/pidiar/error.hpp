#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pidiar {

// Malformed line in a text input (RTTM, UEM, overlap lists). Lines are 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string &what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Problem with a binary container or its sidecar. `offset` is a byte offset
// into the payload file.
class FormatError : public std::runtime_error {
public:
    FormatError(std::size_t offset, const std::string &what)
        : std::runtime_error("offset " + std::to_string(offset) + ": " + what),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pidiar
