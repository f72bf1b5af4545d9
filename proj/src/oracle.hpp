#pragma once

#include "series.hpp"

namespace oscint {

/// Outcome of a sign/zero query. Zero is only ever produced by an exact
/// structural proof; Positive/Negative require an enclosure excluding zero.
/// Unknown is a value, never an error.
enum class VerdictKind : uint8_t { Zero, Positive, Negative, Unknown };

struct Verdict {
    VerdictKind kind;
    int bitsReached = 0;
    static Verdict zero() { return {VerdictKind::Zero, 0}; }
    static Verdict pos(int b) { return {VerdictKind::Positive, b}; }
    static Verdict negv(int b) { return {VerdictKind::Negative, b}; }
    static Verdict unknown(int b) { return {VerdictKind::Unknown, b}; }
};

/// Sign of a Var-free, integral-free constant expression: structural
/// normalization first, then interval evaluation at escalating precision.
Verdict constSign(const ExprPtr& e, const Config& cfg);

/// Eventual sign of a base-field function, decided from the leading
/// multiseries coefficient.
Verdict funcSignAtInfinity(const ExprPtr& e, Session& S);

/// Cross-check helper: evaluates e at x and reports whether the numeric
/// enclosure is consistent with the verdict (used by soundness tests).
bool signConsistentAt(const ExprPtr& e, const Rat& x, int bits, Verdict v);

} // namespace oscint
