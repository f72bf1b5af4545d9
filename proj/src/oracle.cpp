#include "oracle.hpp"

#include "interval.hpp"

namespace oscint {

Verdict constSign(const ExprPtr& eIn, const Config& cfg) {
    ExprPtr e = normalize(eIn);
    if (containsVar(e) || containsOscInt(e)) throw DomainError("constSign needs a closed constant");
    if (e->isNum()) {
        int s = sgn(e->num);
        if (s == 0) return Verdict::zero();
        return s > 0 ? Verdict::pos(0) : Verdict::negv(0);
    }
    int bits = cfg.zero_min_bits;
    while (true) {
        try {
            Interval v = evalInterval(e, Rat(1), bits);
            if (v.finite() && !v.containsZero())
                return v.signLo() > 0 ? Verdict::pos(bits) : Verdict::negv(bits);
        } catch (const DomainError&) {
            // enclosure too wide for a log/power domain at this precision; escalate
        }
        if (bits >= cfg.zero_max_bits) return Verdict::unknown(bits);
        bits *= 2;
        if (bits > cfg.zero_max_bits) bits = cfg.zero_max_bits;
    }
}

int constSignOrThrow(const ExprPtr& e, const Config& cfg) {
    Verdict v = constSign(e, cfg);
    switch (v.kind) {
        case VerdictKind::Zero: return 0;
        case VerdictKind::Positive: return 1;
        case VerdictKind::Negative: return -1;
        default: throw UnknownSign("sign of constant " + print(e), v.bitsReached);
    }
}

Verdict funcSignAtInfinity(const ExprPtr& eIn, Session& S) {
    ExprPtr e;
    try {
        e = scaleNormalize(normalize(eIn), S);
    } catch (const UnknownSign& u) {
        return Verdict::unknown(u.bits_reached);
    }
    if (!containsVar(e)) return constSign(e, S.cfg);
    try {
        auto lead = leadingOpt(e, S);
        if (!lead) return Verdict::zero();
        return constSign(lead->coeff, S.cfg);
    } catch (const UnknownSign& u) {
        return Verdict::unknown(u.bits_reached);
    } catch (const BudgetExhausted&) {
        return Verdict::unknown(S.cfg.zero_max_bits);
    }
}

int funcSignOrThrow(const ExprPtr& e, Session& S) {
    Verdict v = funcSignAtInfinity(e, S);
    switch (v.kind) {
        case VerdictKind::Zero: return 0;
        case VerdictKind::Positive: return 1;
        case VerdictKind::Negative: return -1;
        default: throw UnknownSign("eventual sign of " + print(e), v.bitsReached);
    }
}

bool isZeroFunc(const ExprPtr& e, Session& S) {
    auto it = S.signCache.find(e.get());
    if (it != S.signCache.end()) return it->second == 0;
    int s = containsVar(e) ? funcSignOrThrow(e, S) : constSignOrThrow(e, S.cfg);
    S.signCache.emplace(e.get(), s);
    return s == 0;
}

bool signConsistentAt(const ExprPtr& e, const Rat& x, int bits, Verdict v) {
    Interval val = evalInterval(normalize(e), x, bits);
    switch (v.kind) {
        case VerdictKind::Zero: return val.containsZero();
        case VerdictKind::Positive: return val.signHi() > 0;
        case VerdictKind::Negative: return val.signLo() < 0;
        default: return true;
    }
}

} // namespace oscint
