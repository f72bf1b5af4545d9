#pragma once

#include <mpfr.h>

#include <string>

#include "expr.hpp"

namespace oscint {

/// Arbitrary-precision real with explicit rounding; thin RAII wrapper over mpfr_t.
class Real {
  public:
    explicit Real(int bits = 64) { mpfr_init2(v_, bits); mpfr_set_zero(v_, 1); }
    Real(const Real& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
    Real(Real&& o) noexcept { mpfr_init2(v_, 2); mpfr_swap(v_, o.v_); }
    Real& operator=(const Real& o) {
        if (this != &o) { mpfr_set_prec(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
        return *this;
    }
    Real& operator=(Real&& o) noexcept { mpfr_swap(v_, o.v_); return *this; }
    ~Real() { mpfr_clear(v_); }

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }
    double d() const { return mpfr_get_d(v_, MPFR_RNDN); }

  private:
    mpfr_t v_;
};

/// Directed-rounding enclosure [lo, hi] at a given working precision.
class Interval {
  public:
    Interval() : lo_(64), hi_(64), bits_(64) {}
    explicit Interval(int bits) : lo_(bits), hi_(bits), bits_(bits) {}
    static Interval fromRat(const Rat& r, int bits);
    static Interval fromLong(long v, int bits);
    static Interval pi(int bits);
    static Interval exactZero(int bits);

    int bits() const { return bits_; }
    mpfr_srcptr lo() const { return lo_.get(); }
    mpfr_srcptr hi() const { return hi_.get(); }
    mpfr_ptr lo() { return lo_.get(); }
    mpfr_ptr hi() { return hi_.get(); }

    double midD() const;
    double widthD() const;
    /// width as 2^k upper bound exponent (rough), for convergence checks
    double widthLog2() const;
    bool containsZero() const;
    int signLo() const { return mpfr_sgn(lo_.get()); }
    int signHi() const { return mpfr_sgn(hi_.get()); }
    bool finite() const { return mpfr_number_p(lo_.get()) && mpfr_number_p(hi_.get()); }
    bool contains(const Interval& inner) const;

    Interval addI(const Interval& o) const;
    Interval subI(const Interval& o) const;
    Interval mulI(const Interval& o) const;
    Interval divI(const Interval& o) const;
    Interval negI() const;
    Interval absI() const;
    Interval expI() const;
    Interval logI() const; // throws DomainError when lo <= 0
    Interval sinI() const;
    Interval cosI() const;
    Interval powIntI(long p) const;
    Interval rootI(unsigned long d) const; // throws when negative and d even
    Interval powRatI(const Rat& q) const;

    std::string str(int digits = 20) const;

  private:
    Real lo_, hi_;
    int bits_;
};

/// Evaluates a Var-containing expression at x = x0 with enclosure semantics.
/// Rejects OscInt nodes. Throws DomainError for log of a non-positive enclosure.
Interval evalInterval(const ExprPtr& e, const Rat& x0, int bits);

/// Same with an interval argument (used by quadrature internals).
Interval evalIntervalAt(const ExprPtr& e, const Interval& x, int bits);

/// Fast non-validated double evaluation (scanning/plots); NaN/Inf propagate.
double evalDouble(const ExprPtr& e, double x);

} // namespace oscint
