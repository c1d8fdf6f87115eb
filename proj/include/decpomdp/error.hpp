#pragma once

#include <stdexcept>
#include <string>

namespace decpomdp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed model or policy text. Carries a 1-based source position.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, int line, int column)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                msg),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Well-formed text describing an invalid model (bad distribution, unknown name, ...).
class SemanticError : public Error {
public:
    using Error::Error;
};

class ZeroProbabilityObservation : public Error {
public:
    using Error::Error;
};

class CapacityExceeded : public Error {
public:
    using Error::Error;
};

class LpNumericalFailure : public Error {
public:
    using Error::Error;
};

class SearchSpaceExhausted : public Error {
public:
    using Error::Error;
};

class NodeLimitExceeded : public Error {
public:
    using Error::Error;
};

class UnknownBenchmark : public Error {
public:
    using Error::Error;
};

class PolicyModelMismatch : public Error {
public:
    using Error::Error;
};

} // namespace decpomdp
