#include "doctest.h"

#include "oracle.hpp"

using namespace oscint;

namespace {
ExprPtr P(const std::string& s) { return parse(s); }
} // namespace

TEST_CASE("constant signs") {
    Config cfg;
    CHECK(constSign(P("exp(log(2))-2"), cfg).kind == VerdictKind::Zero);
    Verdict v = constSign(P("pi-3"), cfg);
    CHECK(v.kind == VerdictKind::Positive);
    v = constSign(P("pi-355/113"), cfg);
    CHECK(v.kind == VerdictKind::Negative);
    CHECK(v.bitsReached >= 32);
    // zero comes only from an exact structural proof
    CHECK(constSign(P("(2/3)*(3/2)-1"), cfg).kind == VerdictKind::Zero);
    CHECK(constSign(P("exp(1)-e"), cfg).kind == VerdictKind::Zero);
}

TEST_CASE("eventual signs of base-field functions") {
    Session S;
    CHECK(funcSignAtInfinity(P("x-log(x)^100"), S).kind == VerdictKind::Positive);
    CHECK(funcSignAtInfinity(P("exp(x)*exp(-x)-1"), S).kind == VerdictKind::Zero);
    CHECK(funcSignAtInfinity(P("(x+1)^(1/1)-x-1"), S).kind == VerdictKind::Zero);
    CHECK(funcSignAtInfinity(P("log(x)-x^(1/10)"), S).kind == VerdictKind::Negative);
    CHECK(funcSignAtInfinity(P("exp(-x)-x^-100"), S).kind == VerdictKind::Negative);
}

TEST_CASE("soundness: verdicts agree with numeric evaluation at large x") {
    Session S;
    std::vector<ExprPtr> corpus = {
        P("x-log(x)^3"),       P("x^2-x*log(x)"), P("exp(x)-x^10"),
        P("1/x-1/(x-1)"),      P("x^(1/2)-log(x)^2"), P("exp(-x)*x^5"),
        P("log(x+1)-log(x)"),  P("2*x+1-x"),
    };
    for (auto& e : corpus) {
        Verdict v = funcSignAtInfinity(e, S);
        REQUIRE(v.kind != VerdictKind::Unknown);
        CAPTURE(print(e));
        CHECK(signConsistentAt(e, Rat(10000), 512, v));
        CHECK(signConsistentAt(e, Rat(100000000), 512, v));
    }
}

TEST_CASE("determinism") {
    Session S1, S2;
    ExprPtr e = P("x^3*exp(-x)-log(x)");
    Verdict a = funcSignAtInfinity(e, S1);
    Verdict b = funcSignAtInfinity(e, S2);
    CHECK(a.kind == b.kind);
}
