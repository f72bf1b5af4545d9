#pragma once

#include <stdexcept>
#include <string>

namespace oscint {

/// Base class for all engine errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& m) : std::runtime_error(m) {}
};

/// Syntax error from the expression parser; `pos` is a 0-based byte offset.
struct ParseError : Error {
    size_t pos;
    ParseError(const std::string& m, size_t p) : Error(m + " (at position " + std::to_string(p) + ")"), pos(p) {}
};

/// The sign oracle could not decide within its precision budget.
/// Never swallowed: callers either surface it or convert it to an explicit
/// "undecided" outcome.
struct UnknownSign : Error {
    int bits_reached;
    explicit UnknownSign(const std::string& m, int bits = 0)
        : Error("undecided: " + m), bits_reached(bits) {}
};

/// A term/work/switch budget ran out. Streams that may legally truncate
/// catch this and set their truncation marker instead.
struct BudgetExhausted : Error {
    explicit BudgetExhausted(const std::string& m) : Error("budget exhausted: " + m) {}
};

/// Evaluation outside the domain (log of a non-positive enclosure, fractional
/// power of a negative quantity, ...).
struct DomainError : Error {
    explicit DomainError(const std::string& m) : Error("domain error: " + m) {}
};

/// Input is outside the supported fragment (real-constant exponents,
/// non-rational trig multipliers, trig inside exp, ...).
struct Unsupported : Error {
    explicit Unsupported(const std::string& m) : Error("unsupported: " + m) {}
};

/// A theorem hypothesis check failed; `which` names the violated hypothesis.
struct HypothesisViolation : Error {
    std::string which;
    explicit HypothesisViolation(const std::string& w)
        : Error("hypothesis violation: " + w), which(w) {}
};

} // namespace oscint
