#include "doctest.h"

#include <cmath>
#include <random>

#include "interval.hpp"

using namespace oscint;

namespace {
ExprPtr P(const std::string& s) { return parse(s); }
} // namespace

TEST_CASE("enclosures of basic values") {
    Interval v = evalInterval(P("x^-1"), Rat(10), 64);
    CHECK(v.containsZero() == false);
    CHECK(v.widthD() < std::ldexp(1.0, -50));
    CHECK(doctest::Approx(v.midD()) == 0.1);

    // frozen independent value of sin(log(100))
    Interval s = evalInterval(P("sin(log(x))"), Rat(100), 128);
    double ref = -0.9942575694137896873616193719091560211288;
    CHECK(mpfr_cmp_d(s.lo(), ref - 1e-30) <= 0);
    CHECK(mpfr_cmp_d(s.hi(), ref + 1e-30) >= 0);

    // higher precision nests inside lower precision
    Interval s256 = evalInterval(P("sin(log(x))"), Rat(100), 256);
    CHECK(s.contains(s256));
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(evalInterval(P("log(x-10)"), Rat(5), 64), DomainError);
    CHECK_THROWS_AS(evalInterval(P("1/(x-10)"), Rat(10), 64), DomainError);
}

TEST_CASE("derivative agrees with centered finite differences") {
    std::mt19937 rng(7);
    std::vector<ExprPtr> corpus = {
        P("x^2*log(x)"), P("exp(-x)*x^3"), P("sin(x)/x"), P("log(x+1)-log(x)"),
        P("exp(1/x)"),   P("x^(1/2)+cos(x)"), P("x/(x+1)"),
    };
    for (auto& e : corpus) {
        ExprPtr de = differentiate(e);
        for (long x0 : {10L, 100L, 1000L}) {
            int bits = 256;
            Rat hstep(1, 1 << 20);
            Interval fp = evalInterval(e, Rat(x0) + hstep, bits);
            Interval fm = evalInterval(e, Rat(x0) - hstep, bits);
            double fd = fp.subI(fm).midD() / (2 * hstep.get_d());
            double dv = evalInterval(de, Rat(x0), bits).midD();
            CAPTURE(print(e));
            CAPTURE(x0);
            if (std::abs(dv) > 1e-30) {
                CHECK(std::abs(fd - dv) / std::abs(dv) < 1e-6);
            } else {
                CHECK(std::abs(fd) < 1e-9);
            }
        }
        (void)rng;
    }
}

TEST_CASE("trig enclosures stay within [-1,1] and catch extrema") {
    Interval wide(64);
    mpfr_set_d(wide.lo(), 1.0, MPFR_RNDD);
    mpfr_set_d(wide.hi(), 2.0, MPFR_RNDU);
    Interval s = wide.sinI();
    // sin has an interior maximum at pi/2 in [1,2]
    CHECK(mpfr_get_d(s.hi(), MPFR_RNDN) == 1.0);
    CHECK(mpfr_get_d(s.lo(), MPFR_RNDN) <= std::sin(1.0) + 1e-12);
}
