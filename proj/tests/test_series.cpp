#include "doctest.h"

#include <random>

#include "oracle.hpp"
#include "series.hpp"

using namespace oscint;

namespace {
ExprPtr P(const std::string& s) { return parse(s); }

std::vector<Term> firstTerms(const ExprPtr& e, int n, Session& S) {
    ExprPtr en = scaleNormalize(normalize(e), S);
    Stream s = expandIn(en, levelRank(en, S), S);
    std::vector<Term> out;
    for (int i = 0; i < n; i++) {
        auto t = s.at(static_cast<size_t>(i), S);
        if (!t) break;
        out.push_back(*t);
    }
    return out;
}

// scale invariant: log t_i / log t_{i+1} -> 0 for adjacent pairs
void checkScaleInvariant(Session& S) {
    for (int r = 0; r + 1 < S.scale.size(); r++) {
        ExprPtr La = elemLogExpr(S.scale.byRank(r));
        ExprPtr Lb = elemLogExpr(S.scale.byRank(r + 1));
        Session T(S.cfg);
        T.scale = S.scale;
        LimitVal lim = limitAtInfinity(normalize(div2(La, Lb)), T);
        REQUIRE(lim.kind == LimitVal::Finite);
        CHECK(lim.value->isZero());
    }
}
} // namespace

TEST_CASE("scale growth is the minimal extension") {
    Session S;
    CHECK(S.scale.size() == 1); // x^-1 always present
    scaleNormalize(P("x+1"), S);
    CHECK(S.scale.size() == 1);
    scaleNormalize(P("exp(x^2)"), S);
    REQUIRE(S.scale.size() == 2);
    CHECK(S.scale.byRank(1).kind == ElemKind::ExpElem);
    checkScaleInvariant(S);

    Session S2;
    scaleNormalize(P("log(log(x))"), S2);
    REQUIRE(S2.scale.size() == 3); // downward-closed iterated logs
    CHECK(S2.scale.byRank(0).k == 2);
    CHECK(S2.scale.byRank(1).k == 1);
    CHECK(S2.scale.byRank(2).k == 0);
    checkScaleInvariant(S2);
}

TEST_CASE("geometric and exponential series") {
    Session S;
    auto ts = firstTerms(P("1/(x-1)"), 4, S);
    REQUIRE(ts.size() == 4);
    for (int i = 0; i < 4; i++) {
        CHECK(ts[static_cast<size_t>(i)].exponent == i + 1);
        CHECK(ts[static_cast<size_t>(i)].coeff->isOne());
    }
    auto te = firstTerms(P("exp(1/x)"), 3, S);
    REQUIRE(te.size() == 3);
    CHECK(te[0].exponent == 0);
    CHECK(te[1].exponent == 1);
    CHECK(te[2].exponent == 2);
    CHECK(print(te[2].coeff) == "1/2");
}

TEST_CASE("two-level expansion of x^3(1+exp(-x^3))") {
    Session S;
    ExprPtr e = scaleNormalize(normalize(P("x^3*(1+exp(-x^3))")), S);
    REQUIRE(S.scale.size() == 2);
    // at the exponential level: t^0 coefficient x^3, then t^1 coefficient x^3
    Stream s = expandIn(e, 1, S);
    auto t0 = s.at(0, S);
    auto t1 = s.at(1, S);
    REQUIRE(t0);
    REQUIRE(t1);
    CHECK(t0->exponent == 0);
    CHECK(t0->coeff == P("x^3"));
    CHECK(t1->exponent == 1);
    CHECK(t1->coeff == P("x^3"));
    Leading l = leading(e, S);
    CHECK(l.coeff->isOne());
    CHECK(monomialStr(l.mono, S) == "x^3");
}

TEST_CASE("leading monomials") {
    Session S;
    Leading l = leading(scaleNormalize(P("5/(x*log(x)^2)"), S), S);
    CHECK(print(l.coeff) == "5");
    CHECK(monomialStr(l.mono, S) == "log(x)^-2*x^-1");
    Leading l2 = leading(scaleNormalize(P("exp(-x)+1/x"), S), S);
    CHECK(l2.coeff->isOne());
    CHECK(monomialStr(l2.mono, S) == "x^-1");
}

TEST_CASE("gamma comparisons") {
    Session S;
    CHECK(cmpGamma(P("log(x)"), P("x"), S) == CmpG::Less);
    Gamma0Cmp c = cmpGamma0(P("2*x+1"), P("x"), S);
    CHECK(c.c == Cmp0::Equal);
    CHECK(print(c.ratio) == "2");
    // 1/(x log x) vs 1/(x log^2 x log2 x): gamma0 greater, bowtie-equivalent
    ExprPtr f = P("1/(x*log(x))");
    ExprPtr g = P("1/(x*log(x)^2*log(log(x)))");
    CHECK(cmpGamma0(f, g, S).c == Cmp0::Greater);
    CHECK(isBowtie(f, g, S));
    CHECK(!isBowtie(P("x"), P("x^2"), S));
    CHECK(isBowtie(P("x*log(x)"), P("x"), S));
}

TEST_CASE("limits") {
    Session S;
    LimitVal v = limitAtInfinity(P("x^2*exp(-x)"), S);
    CHECK(v.kind == LimitVal::Finite);
    CHECK(v.value->isZero());
    v = limitAtInfinity(P("(1+1/x)*pi"), S);
    CHECK(v.kind == LimitVal::Finite);
    CHECK(v.value == P("pi"));
    v = limitAtInfinity(P("x-log(x)"), S);
    CHECK(v.kind == LimitVal::PosInf);
    v = limitAtInfinity(P("log(x)-x"), S);
    CHECK(v.kind == LimitVal::NegInf);
}

TEST_CASE("shadows, ghosts and the R/I classification") {
    Session S;
    int xId = S.ensureIterLog(0);
    ExprPtr f = P("1+1/x+1/x^2");
    CHECK(shadowExpr(f, xId, S)->isOne());
    CHECK(ghostExpr(f, xId, S) == P("1/x+1/x^2"));
    ExprPtr g = P("log(x)+1+1/x");
    CHECK(shadowExpr(g, xId, S) == P("log(x)+1"));
    CHECK(classifyRi(scaleNormalize(P("exp(-x)"), S), xId, S) == RiClass::InI);
    CHECK(classifyRi(P("log(x)"), xId, S) == RiClass::InRNotI);
    CHECK(classifyRi(P("x"), xId, S) == RiClass::OutsideR);
    CHECK_THROWS_AS(shadowExpr(P("x"), xId, S), DomainError);
}

TEST_CASE("expansion commutes with differentiation") {
    Session S;
    std::vector<ExprPtr> corpus = {P("1/(x-1)"), P("exp(1/x)"), P("x/(x^2+1)"), P("log(1+1/x)")};
    for (auto& e : corpus) {
        ExprPtr de = normalize(differentiate(e));
        auto ts = firstTerms(e, 5, S);
        // term-wise derivative of the expansion: d/dx (c * x^-r) for leaf c
        std::vector<ExprPtr> parts;
        for (auto& t : ts)
            parts.push_back(differentiate(mul2(t.coeff, pow(var(), -t.exponent))));
        ExprPtr approx = add(std::move(parts));
        ExprPtr resid = normalize(sub2(de, approx));
        if (!resid->isZero()) {
            // the residual must be smaller than the last kept derivative term
            Gamma0Cmp c = cmpGamma0(resid, parts.empty() ? P("1") : de, S);
            CHECK(c.c == Cmp0::Less);
        }
    }
}

TEST_CASE("comparison properties on generated pairs") {
    // gamma(h1) = gamma(h2) iff log-derivatives gamma0-equal (corpus form)
    Session S;
    std::vector<std::pair<ExprPtr, ExprPtr>> samePairs = {
        {P("x^2"), P("x^3*log(x)")},
        {P("x*log(x)^2"), P("x^5")},
        {P("exp(2*x)"), P("exp(x)*x^2")},
    };
    for (auto& [h1, h2] : samePairs) {
        CHECK(cmpGamma(h1, h2, S) == CmpG::Equal);
        ExprPtr ld1 = normalize(div2(differentiate(h1), h1));
        ExprPtr ld2 = normalize(div2(differentiate(h2), h2));
        CHECK(cmpGamma0(ld1, ld2, S).c == Cmp0::Equal);
    }
    // gamma(h) > gamma(x) implies h' bowtie h
    for (auto& h : {P("exp(x)"), P("exp(x^2)*x^3"), P("exp(x+log(x)^2)")}) {
        CHECK(isBowtie(normalize(differentiate(h)), h, S));
    }
    // h1'/h2' bowtie h1/h2 for non-constant-asymptotic pairs
    std::vector<std::pair<ExprPtr, ExprPtr>> pairs = {
        {P("x^3"), P("x*log(x)")},
        {P("exp(x)"), P("x^2")},
        {P("x^2+x"), P("log(x)")},
    };
    for (auto& [h1, h2] : pairs) {
        ExprPtr r1 = normalize(div2(differentiate(h1), differentiate(h2)));
        ExprPtr r2 = normalize(div2(h1, h2));
        CHECK(isBowtie(r1, r2, S));
    }
}

TEST_CASE("series JSON serialization shape") {
    Session S;
    std::string js = seriesJson(P("1/(x-1)"), S, 3);
    CHECK(js.find("\"level\"") != std::string::npos);
    CHECK(js.find("\"exponent\"") != std::string::npos);
    CHECK(js.find("\"rat\"") != std::string::npos);
    CHECK(js.find("\"truncated\"") != std::string::npos);
}
