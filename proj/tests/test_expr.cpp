#include "doctest.h"

#include <random>

#include "expr.hpp"

using namespace oscint;

namespace {
ExprPtr P(const std::string& s) {
    int tag = 0;
    return parse(s, &tag);
}
} // namespace

TEST_CASE("parsing the grammar") {
    CHECK(print(P("sin(x^2)")) == "sin(x^2)");
    ExprPtr e = P("x*log(x)+x^(1/2)");
    CHECK(e->k == K::Sum);
    CHECK(e->ch.size() == 2);
    int tag = 0;
    ExprPtr i = parse("Int(exp(-x), sin, log(x))", &tag);
    REQUIRE(i->k == K::OscInt);
    CHECK(i->okind == TrigK::SinK);
    CHECK(print(i->ch[0]) == "exp(-x)");
    CHECK(print(i->ch[1]) == "log(x)");
    CHECK(i->otag == 1);
    CHECK(P("sqrt(x)") == P("x^(1/2)"));
    CHECK_THROWS_AS(P("foo(x)"), ParseError);
    CHECK_THROWS_AS(P("x+"), ParseError);
    CHECK_THROWS_AS(P("x^0"), ParseError);
}

TEST_CASE("normalization rules") {
    CHECK(normalize(P("exp(log(x))")) == P("x"));
    CHECK(print(P("2*x+3*x")) == "5*x");
    CHECK(P("(x^(1/2))^2") == P("x"));
    CHECK(P("exp(x)*exp(-x)")->isOne());
    CHECK(P("log(exp(x^2))") == P("x^2"));
    CHECK(P("exp(2*log(x)+x)") == P("x^2*exp(x)"));
    CHECK(P("x*(x+1)-x^2-x")->isZero());
    CHECK(P("(x+1)^2-x^2-2*x-1")->isZero());
    // idempotence
    for (const char* s : {"x*log(x)+x^(1/2)", "exp(1/x)", "sin(x^2)/x", "(x+1)/(x-1)"}) {
        ExprPtr e = P(s);
        CHECK(normalize(e) == e);
    }
}

TEST_CASE("differentiation") {
    CHECK(differentiate(P("sin(x^2)")) == P("2*x*cos(x^2)"));
    CHECK(differentiate(P("log(log(x))")) == P("1/(x*log(x))"));
    int tag = 0;
    ExprPtr i = parse("Int(x^2, sin, x^3)", &tag);
    CHECK(differentiate(i) == P("x^2*sin(x^3)"));
    CHECK(differentiate(P("exp(x^2)")) == P("2*x*exp(x^2)"));
}

TEST_CASE("print/parse round trip on random expressions") {
    std::mt19937 rng(12345);
    auto randExpr = [&](auto&& self, int depth) -> ExprPtr {
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
        switch (pick(rng)) {
            case 0: return var();
            case 1: {
                long v = static_cast<long>(rng() % 7) - 3;
                return num(v == 0 ? 2 : v);
            }
            case 2: return numq(static_cast<long>(rng() % 5) + 1, static_cast<long>(rng() % 4) + 1);
            case 3: return add2(self(self, depth - 1), self(self, depth - 1));
            case 4: return mul2(self(self, depth - 1), self(self, depth - 1));
            case 5: {
                long v = static_cast<long>(rng() % 5) - 2;
                return pow(var(), Rat(v == 0 ? 2 : v));
            }
            case 6: return exp_(mulr(Rat(static_cast<long>(rng() % 3) - 1), var()));
            case 7: return log_(add2(var(), num(static_cast<long>(rng() % 3) + 1)));
            case 8: return sin_(self(self, depth - 1));
            default: return cos_(var());
        }
    };
    for (int i = 0; i < 200; i++) {
        ExprPtr e = randExpr(randExpr, 3);
        CAPTURE(print(e));
        CHECK(parse(print(e)) == e);
    }
}

TEST_CASE("normalize and differentiate commute on a random corpus") {
    std::mt19937 rng(999);
    auto randExpr = [&](auto&& self, int depth) -> ExprPtr {
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 6);
        switch (pick(rng)) {
            case 0: return var();
            case 1: return num(static_cast<long>(rng() % 5) + 1);
            case 2: return add2(self(self, depth - 1), self(self, depth - 1));
            case 3: return mul2(self(self, depth - 1), self(self, depth - 1));
            case 4: return pow(add2(var(), num(1)), Rat(static_cast<long>(rng() % 3) + 1));
            case 5: return exp_(neg(var()));
            default: return log_(add2(var(), num(2)));
        }
    };
    for (int i = 0; i < 100; i++) {
        ExprPtr e = randExpr(randExpr, 3);
        // smart constructors keep everything normalized, so the orders agree
        CHECK(normalize(differentiate(e)) == differentiate(normalize(e)));
    }
}

TEST_CASE("denominator handling keeps quotients canonical") {
    ExprPtr e = P("x/(x+1) + 1/(x+1)");
    CHECK(normalize(e) == e);
    auto [n, d] = clearDenominators(P("1/(x-1) - 1/(x+1)"));
    CHECK(print(n) == "2");
    CHECK(d == P("(x-1)*(x+1)"));
}

TEST_CASE("rational literals") {
    CHECK(parseRational("2.5") == Rat(5, 2));
    CHECK(parseRational("10") == Rat(10));
    CHECK(parseRational("1/3") == Rat(1, 3));
    CHECK(parseRational("-0.25") == Rat(-1, 4));
}
