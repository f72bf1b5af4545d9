#include "interval.hpp"

#include <cmath>
#include <sstream>

namespace oscint {

Interval Interval::fromRat(const Rat& r, int bits) {
    Interval x(bits);
    mpfr_set_q(x.lo(), r.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(x.hi(), r.get_mpq_t(), MPFR_RNDU);
    return x;
}

Interval Interval::fromLong(long v, int bits) { return fromRat(Rat(v), bits); }

Interval Interval::pi(int bits) {
    Interval x(bits);
    mpfr_const_pi(x.lo(), MPFR_RNDD);
    mpfr_const_pi(x.hi(), MPFR_RNDU);
    return x;
}

Interval Interval::exactZero(int bits) { return fromLong(0, bits); }

double Interval::midD() const { return (mpfr_get_d(lo_.get(), MPFR_RNDN) + mpfr_get_d(hi_.get(), MPFR_RNDN)) / 2.0; }

double Interval::widthD() const {
    Real w(bits_);
    mpfr_sub(w.get(), hi_.get(), lo_.get(), MPFR_RNDU);
    return mpfr_get_d(w.get(), MPFR_RNDU);
}

double Interval::widthLog2() const {
    Real w(bits_);
    mpfr_sub(w.get(), hi_.get(), lo_.get(), MPFR_RNDU);
    if (mpfr_zero_p(w.get())) return -1e9;
    long ex = mpfr_get_exp(w.get());
    return static_cast<double>(ex);
}

bool Interval::containsZero() const { return mpfr_sgn(lo_.get()) <= 0 && mpfr_sgn(hi_.get()) >= 0; }

bool Interval::contains(const Interval& inner) const {
    return mpfr_cmp(lo_.get(), inner.lo_.get()) <= 0 && mpfr_cmp(hi_.get(), inner.hi_.get()) >= 0;
}

Interval Interval::addI(const Interval& o) const {
    Interval r(bits_);
    mpfr_add(r.lo(), lo_.get(), o.lo_.get(), MPFR_RNDD);
    mpfr_add(r.hi(), hi_.get(), o.hi_.get(), MPFR_RNDU);
    return r;
}

Interval Interval::subI(const Interval& o) const {
    Interval r(bits_);
    mpfr_sub(r.lo(), lo_.get(), o.hi_.get(), MPFR_RNDD);
    mpfr_sub(r.hi(), hi_.get(), o.lo_.get(), MPFR_RNDU);
    return r;
}

Interval Interval::negI() const {
    Interval r(bits_);
    mpfr_neg(r.lo(), hi_.get(), MPFR_RNDD);
    mpfr_neg(r.hi(), lo_.get(), MPFR_RNDU);
    return r;
}

Interval Interval::absI() const {
    Interval r(bits_);
    if (mpfr_sgn(lo_.get()) >= 0) return *this;
    if (mpfr_sgn(hi_.get()) <= 0) return negI();
    mpfr_set_zero(r.lo(), 1);
    mpfr_neg(r.hi(), lo_.get(), MPFR_RNDU);
    if (mpfr_cmp(hi_.get(), r.hi()) > 0) mpfr_set(r.hi(), hi_.get(), MPFR_RNDU);
    return r;
}

Interval Interval::mulI(const Interval& o) const {
    Interval r(bits_);
    mpfr_t c[4];
    for (auto& x : c) mpfr_init2(x, bits_);
    mpfr_mul(c[0], lo_.get(), o.lo_.get(), MPFR_RNDD);
    mpfr_mul(c[1], lo_.get(), o.hi_.get(), MPFR_RNDD);
    mpfr_mul(c[2], hi_.get(), o.lo_.get(), MPFR_RNDD);
    mpfr_mul(c[3], hi_.get(), o.hi_.get(), MPFR_RNDD);
    mpfr_set(r.lo(), c[0], MPFR_RNDD);
    for (int i = 1; i < 4; i++)
        if (mpfr_cmp(c[i], r.lo()) < 0) mpfr_set(r.lo(), c[i], MPFR_RNDD);
    mpfr_mul(c[0], lo_.get(), o.lo_.get(), MPFR_RNDU);
    mpfr_mul(c[1], lo_.get(), o.hi_.get(), MPFR_RNDU);
    mpfr_mul(c[2], hi_.get(), o.lo_.get(), MPFR_RNDU);
    mpfr_mul(c[3], hi_.get(), o.hi_.get(), MPFR_RNDU);
    mpfr_set(r.hi(), c[0], MPFR_RNDU);
    for (int i = 1; i < 4; i++)
        if (mpfr_cmp(c[i], r.hi()) > 0) mpfr_set(r.hi(), c[i], MPFR_RNDU);
    for (auto& x : c) mpfr_clear(x);
    return r;
}

Interval Interval::divI(const Interval& o) const {
    if (o.containsZero()) throw DomainError("division by an enclosure containing zero");
    Interval inv(bits_);
    mpfr_ui_div(inv.lo(), 1, o.hi_.get(), MPFR_RNDD);
    mpfr_ui_div(inv.hi(), 1, o.lo_.get(), MPFR_RNDU);
    return mulI(inv);
}

Interval Interval::expI() const {
    Interval r(bits_);
    mpfr_exp(r.lo(), lo_.get(), MPFR_RNDD);
    mpfr_exp(r.hi(), hi_.get(), MPFR_RNDU);
    return r;
}

Interval Interval::logI() const {
    if (mpfr_sgn(lo_.get()) <= 0) throw DomainError("log of an enclosure touching (-inf, 0]");
    Interval r(bits_);
    mpfr_log(r.lo(), lo_.get(), MPFR_RNDD);
    mpfr_log(r.hi(), hi_.get(), MPFR_RNDU);
    return r;
}

namespace {
// Enclosure of sin/cos over [lo, hi]: monotone pieces when the argument width
// is below pi, otherwise [-1, 1].
Interval trigEnclose(const Interval& x, bool isSin) {
    int bits = x.bits();
    Interval r(bits);
    Real w(bits);
    mpfr_sub(w.get(), x.hi(), x.lo(), MPFR_RNDU);
    Interval piI = Interval::pi(bits);
    if (mpfr_cmp(w.get(), piI.lo()) >= 0) {
        mpfr_set_si(r.lo(), -1, MPFR_RNDD);
        mpfr_set_si(r.hi(), 1, MPFR_RNDU);
        return r;
    }
    // four candidate values at endpoints (both roundings), then widen if a
    // critical point may lie inside: detect via derivative sign change.
    Real a(bits), b(bits);
    if (isSin) {
        mpfr_sin(a.get(), x.lo(), MPFR_RNDD);
        mpfr_sin(b.get(), x.hi(), MPFR_RNDD);
    } else {
        mpfr_cos(a.get(), x.lo(), MPFR_RNDD);
        mpfr_cos(b.get(), x.hi(), MPFR_RNDD);
    }
    mpfr_min(r.lo(), a.get(), b.get(), MPFR_RNDD);
    if (isSin) {
        mpfr_sin(a.get(), x.lo(), MPFR_RNDU);
        mpfr_sin(b.get(), x.hi(), MPFR_RNDU);
    } else {
        mpfr_cos(a.get(), x.lo(), MPFR_RNDU);
        mpfr_cos(b.get(), x.hi(), MPFR_RNDU);
    }
    mpfr_max(r.hi(), a.get(), b.get(), MPFR_RNDU);
    // derivative endpoints: cos for sin, -sin for cos
    Real da(bits), db(bits);
    if (isSin) {
        mpfr_cos(da.get(), x.lo(), MPFR_RNDN);
        mpfr_cos(db.get(), x.hi(), MPFR_RNDN);
    } else {
        mpfr_sin(da.get(), x.lo(), MPFR_RNDN);
        mpfr_sin(db.get(), x.hi(), MPFR_RNDN);
        mpfr_neg(da.get(), da.get(), MPFR_RNDN);
        mpfr_neg(db.get(), db.get(), MPFR_RNDN);
    }
    int sa = mpfr_sgn(da.get()), sb = mpfr_sgn(db.get());
    if (sa >= 0 && sb <= 0) mpfr_set_si(r.hi(), 1, MPFR_RNDU);   // interior maximum
    if (sa <= 0 && sb >= 0) mpfr_set_si(r.lo(), -1, MPFR_RNDD);  // interior minimum
    // guard the near-critical cases where rounding could flip the verdict
    Real margin(bits);
    mpfr_set_d(margin.get(), 1e-9, MPFR_RNDN);
    mpfr_abs(da.get(), da.get(), MPFR_RNDN);
    mpfr_abs(db.get(), db.get(), MPFR_RNDN);
    if (mpfr_cmp(da.get(), margin.get()) < 0 || mpfr_cmp(db.get(), margin.get()) < 0) {
        mpfr_set_si(r.lo(), -1, MPFR_RNDD);
        mpfr_set_si(r.hi(), 1, MPFR_RNDU);
    }
    return r;
}
} // namespace

Interval Interval::sinI() const { return trigEnclose(*this, true); }
Interval Interval::cosI() const { return trigEnclose(*this, false); }

Interval Interval::powIntI(long p) const {
    if (p == 0) return fromLong(1, bits_);
    if (p < 0) return fromLong(1, bits_).divI(powIntI(-p));
    Interval r(bits_);
    if (p % 2 == 1 || mpfr_sgn(lo_.get()) >= 0) {
        mpfr_pow_si(r.lo(), lo_.get(), p, MPFR_RNDD);
        mpfr_pow_si(r.hi(), hi_.get(), p, MPFR_RNDU);
        return r;
    }
    // even power of a sign-crossing or negative interval
    Interval a = absI();
    mpfr_pow_si(r.hi(), a.hi(), p, MPFR_RNDU);
    if (containsZero()) {
        mpfr_set_zero(r.lo(), 1);
    } else {
        mpfr_pow_si(r.lo(), a.lo(), p, MPFR_RNDD);
    }
    return r;
}

Interval Interval::rootI(unsigned long d) const {
    if (d % 2 == 0 && mpfr_sgn(lo_.get()) < 0)
        throw DomainError("even root of a negative enclosure");
    Interval r(bits_);
    mpfr_rootn_ui(r.lo(), lo_.get(), d, MPFR_RNDD);
    mpfr_rootn_ui(r.hi(), hi_.get(), d, MPFR_RNDU);
    return r;
}

Interval Interval::powRatI(const Rat& q) const {
    long p = q.get_num().get_si();
    unsigned long d = q.get_den().get_ui();
    if (d == 1) return powIntI(p);
    return rootI(d).powIntI(p);
}

std::string Interval::str(int digits) const {
    char* a = nullptr;
    char* b = nullptr;
    mpfr_asprintf(&a, "%.*Rg", digits, lo_.get());
    mpfr_asprintf(&b, "%.*Rg", digits, hi_.get());
    std::string out = std::string("[") + a + ", " + b + "]";
    mpfr_free_str(a);
    mpfr_free_str(b);
    return out;
}

// ---------------------------------------------------------------------------
// expression evaluation
// ---------------------------------------------------------------------------

Interval evalIntervalAt(const ExprPtr& e, const Interval& x, int bits) {
    switch (e->k) {
        case K::Num: return Interval::fromRat(e->num, bits);
        case K::Named: return Interval::pi(bits);
        case K::Var: return x;
        case K::Sum: {
            Interval r = Interval::fromLong(0, bits);
            for (auto& c : e->ch) r = r.addI(evalIntervalAt(c, x, bits));
            return r;
        }
        case K::Prod: {
            Interval r = Interval::fromLong(1, bits);
            for (auto& c : e->ch) r = r.mulI(evalIntervalAt(c, x, bits));
            return r;
        }
        case K::Pow: return evalIntervalAt(e->ch[0], x, bits).powRatI(e->num);
        case K::Exp: return evalIntervalAt(e->ch[0], x, bits).expI();
        case K::Log: return evalIntervalAt(e->ch[0], x, bits).logI();
        case K::Sin: return evalIntervalAt(e->ch[0], x, bits).sinI();
        case K::Cos: return evalIntervalAt(e->ch[0], x, bits).cosI();
        case K::OscInt: throw DomainError("cannot numerically evaluate an unexpanded integral");
    }
    throw DomainError("bad node");
}

Interval evalInterval(const ExprPtr& e, const Rat& x0, int bits) {
    return evalIntervalAt(e, Interval::fromRat(x0, bits), bits);
}

double evalDouble(const ExprPtr& e, double x) {
    switch (e->k) {
        case K::Num: return e->num.get_d();
        case K::Named: return M_PI;
        case K::Var: return x;
        case K::Sum: {
            double r = 0;
            for (auto& c : e->ch) r += evalDouble(c, x);
            return r;
        }
        case K::Prod: {
            double r = 1;
            for (auto& c : e->ch) r *= evalDouble(c, x);
            return r;
        }
        case K::Pow: {
            double b = evalDouble(e->ch[0], x);
            double q = e->num.get_d();
            if (e->num.get_den() == 1 && e->num.get_num().fits_slong_p())
                return std::pow(b, static_cast<double>(e->num.get_num().get_si()));
            return std::pow(b, q);
        }
        case K::Exp: return std::exp(evalDouble(e->ch[0], x));
        case K::Log: return std::log(evalDouble(e->ch[0], x));
        case K::Sin: return std::sin(evalDouble(e->ch[0], x));
        case K::Cos: return std::cos(evalDouble(e->ch[0], x));
        case K::OscInt: return std::numeric_limits<double>::quiet_NaN();
    }
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace oscint
