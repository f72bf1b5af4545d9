#include "integrate.hpp"

#include "oracle.hpp"

namespace oscint {

namespace {

// exponent of the IterLog(k) factor of the monomial, as a power of log_k(x)
Rat chainPower(const Monomial& m, Session& S, int k) {
    auto id = S.scale.findIterLog(k);
    if (!id) return Rat(0);
    auto it = m.e.find(*id);
    if (it == m.e.end()) return Rat(0);
    return -it->second; // t^q = log_k(x)^(-q)
}

bool hasExpContent(const Monomial& m, Session& S) {
    for (auto& [id, q] : m.e) {
        (void)q;
        if (S.scale.byId(id).kind == ElemKind::ExpElem) return true;
    }
    return false;
}

int maxChainDepth(const Monomial& m, Session& S) {
    int d = 0;
    for (auto& [id, q] : m.e) {
        (void)q;
        const ScaleElem& el = S.scale.byId(id);
        if (el.kind == ElemKind::IterLog) d = std::max(d, el.k);
    }
    return d;
}

} // namespace

ExprPtr integrateLeadingTerm(const ExprPtr& h, Session& S) {
    Leading l = leading(scaleNormalize(normalize(h), S), S);
    if (hasExpContent(l.mono, S)) {
        // h ~ c*T with an exponential factor: H ~ h / (log T)'
        ExprPtr dlogT = monomialLogDeriv(l.mono, S);
        return normalize(div2(h, dlogT));
    }
    Rat a = chainPower(l.mono, S, 0); // power of x
    if (a != -1) {
        return normalize(mulr(Rat(1) / (a + 1), mul2(var(), h)));
    }
    // leading x-exponent is -1: descend through the log powers
    int D = maxChainDepth(l.mono, S);
    ExprPtr prefix = var();
    for (int d = 1; d <= D; d++) {
        Rat b = chainPower(l.mono, S, d);
        prefix = mul2(prefix, logChain(d));
        if (b != -1) {
            return normalize(mulr(Rat(1) / (b + 1), mul2(prefix, h)));
        }
    }
    // pure 1/(x log x ... log_D x) leading term: a fresh iterated logarithm
    S.ensureIterLog(D + 1);
    return normalize(mul2(l.coeff, logChain(D + 1)));
}

BaseIntegral::BaseIntegral(ExprPtr h, Session& S) {
    residual_ = scaleNormalize(normalize(std::move(h)), S);
    if (isZeroFunc(residual_, S)) exact_ = true;
}

void BaseIntegral::step(Session& S) {
    if (exact_) return;
    ExprPtr u = integrateLeadingTerm(residual_, S);
    ExprPtr next = scaleNormalize(normalize(sub2(residual_, differentiate(u))), S);
    // the construction must strictly shrink the residual
    if (!isZeroFunc(next, S)) {
        Gamma0Cmp c = cmpGamma0(next, residual_, S);
        if (c.c != Cmp0::Less)
            throw Error("internal: antiderivative residual did not shrink for " + print(residual_));
    }
    terms_.push_back(u);
    residual_ = next;
    if (isZeroFunc(residual_, S)) exact_ = true;
}

size_t BaseIntegral::ensure(size_t n, Session& S) {
    while (terms_.size() < n && !exact_) step(S);
    return terms_.size();
}

ExprPtr BaseIntegral::partialSum() const {
    return add(std::vector<ExprPtr>(terms_));
}

ExprPtr integrateExact(const ExprPtr& h, Session& S, int maxSteps) {
    BaseIntegral I(h, S);
    for (int i = 0; i < maxSteps && !I.exact(); i++) I.step(S);
    return I.closedForm();
}

} // namespace oscint
