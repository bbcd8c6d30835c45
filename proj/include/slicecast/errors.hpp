#pragma once

#include <stdexcept>
#include <string>

namespace slicecast {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text; carries the 1-based line the parser choked on.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}
    ParseError(const std::string& msg, int line)
        : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

// Structurally well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace slicecast
