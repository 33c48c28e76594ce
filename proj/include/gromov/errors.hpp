#pragma once

#include <stdexcept>
#include <string>

namespace gromov {

// base of every library error; kind() is a stable machine tag
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

// bad letters, bad files, unparsable input
class MalformedInput : public Error {
public:
    explicit MalformedInput(const std::string& msg, std::string kind = "malformed-input")
        : Error(std::move(kind), msg) {}
};

class ParseError : public MalformedInput {
public:
    ParseError(int line, const std::string& msg)
        : MalformedInput("line " + std::to_string(line) + ": " + msg, "parse-error"), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

// parameter outside the documented domain
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg, std::string kind = "domain-error")
        : Error(std::move(kind), msg) {}
};

// a documented precondition (e.g. small cancellation) does not hold
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& msg, std::string kind = "precondition-failed")
        : Error(std::move(kind), msg) {}
};

class BudgetExceeded : public Error {
public:
    BudgetExceeded(const std::string& msg, long long budget, std::string kind = "budget-exceeded")
        : Error(std::move(kind), msg), budget_(budget) {}
    long long budget() const noexcept { return budget_; }

private:
    long long budget_;
};

// the ball ran out of vertices before the requested radius
class PartialBall : public BudgetExceeded {
public:
    PartialBall(const std::string& msg, long long budget, int completed)
        : BudgetExceeded(msg, budget, "partial-ball"), completed_(completed) {}
    int completed_radius() const noexcept { return completed_; }

private:
    int completed_;
};

// randomized construction failed on this sample
class ConstructionObstructed : public Error {
public:
    explicit ConstructionObstructed(const std::string& msg, std::string kind = "construction-obstructed")
        : Error(std::move(kind), msg) {}
};

}  // namespace gromov
