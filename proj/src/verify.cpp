#include "verify.hpp"

#include <algorithm>
#include <cmath>

#include "oracle.hpp"

namespace oscint {

namespace {

// plain round-to-nearest evaluation at an mpfr point
void evalReal(const ExprPtr& e, const Real& x, int bits, Real& out) {
    switch (e->k) {
        case K::Num: {
            Real r(bits);
            mpfr_set_q(r.get(), e->num.get_mpq_t(), MPFR_RNDN);
            out = std::move(r);
            return;
        }
        case K::Named: {
            Real r(bits);
            mpfr_const_pi(r.get(), MPFR_RNDN);
            out = std::move(r);
            return;
        }
        case K::Var: out = x; return;
        case K::Sum: {
            Real acc(bits), tmp(bits);
            mpfr_set_zero(acc.get(), 1);
            for (auto& c : e->ch) {
                evalReal(c, x, bits, tmp);
                mpfr_add(acc.get(), acc.get(), tmp.get(), MPFR_RNDN);
            }
            out = std::move(acc);
            return;
        }
        case K::Prod: {
            Real acc(bits), tmp(bits);
            mpfr_set_si(acc.get(), 1, MPFR_RNDN);
            for (auto& c : e->ch) {
                evalReal(c, x, bits, tmp);
                mpfr_mul(acc.get(), acc.get(), tmp.get(), MPFR_RNDN);
            }
            out = std::move(acc);
            return;
        }
        case K::Pow: {
            Real b(bits);
            evalReal(e->ch[0], x, bits, b);
            Real r(bits);
            if (e->num.get_den() == 1 && e->num.get_num().fits_slong_p()) {
                mpfr_pow_si(r.get(), b.get(), e->num.get_num().get_si(), MPFR_RNDN);
            } else {
                unsigned long d = e->num.get_den().get_ui();
                Real root(bits);
                mpfr_rootn_ui(root.get(), b.get(), d, MPFR_RNDN);
                mpfr_pow_si(r.get(), root.get(), e->num.get_num().get_si(), MPFR_RNDN);
            }
            out = std::move(r);
            return;
        }
        case K::Exp: {
            Real a(bits);
            evalReal(e->ch[0], x, bits, a);
            Real r(bits);
            mpfr_exp(r.get(), a.get(), MPFR_RNDN);
            out = std::move(r);
            return;
        }
        case K::Log: {
            Real a(bits);
            evalReal(e->ch[0], x, bits, a);
            Real r(bits);
            mpfr_log(r.get(), a.get(), MPFR_RNDN);
            out = std::move(r);
            return;
        }
        case K::Sin:
        case K::Cos: {
            Real a(bits);
            evalReal(e->ch[0], x, bits, a);
            Real r(bits);
            if (e->k == K::Sin)
                mpfr_sin(r.get(), a.get(), MPFR_RNDN);
            else
                mpfr_cos(r.get(), a.get(), MPFR_RNDN);
            out = std::move(r);
            return;
        }
        case K::OscInt: throw DomainError("cannot evaluate an unexpanded integral");
    }
}

struct TSResult {
    Real value;
    Real err; // convergence-based estimate: last level difference, widened
    long evals = 0;
};

TSResult tanhSinh(const ExprPtr& f, const Real& a, const Real& b, int bits, int maxLevel) {
    TSResult res;
    Real mid(bits), half(bits);
    mpfr_add(mid.get(), a.get(), b.get(), MPFR_RNDN);
    mpfr_div_ui(mid.get(), mid.get(), 2, MPFR_RNDN);
    mpfr_sub(half.get(), b.get(), a.get(), MPFR_RNDN);
    mpfr_div_ui(half.get(), half.get(), 2, MPFR_RNDN);

    Real piHalf(bits);
    mpfr_const_pi(piHalf.get(), MPFR_RNDN);
    mpfr_div_ui(piHalf.get(), piHalf.get(), 2, MPFR_RNDN);

    const double tmax = std::asinh(2.0 / M_PI * std::log(2.0) * (bits + 16));

    Real sum(bits); // running sum of f(x_k) * w_k over all nodes
    mpfr_set_zero(sum.get(), 1);
    Real errEst(bits);
    mpfr_set_inf(errEst.get(), 1);

    auto addNode = [&](double t, Real& acc) {
        Real tt(bits);
        mpfr_set_d(tt.get(), t, MPFR_RNDN);
        Real sh(bits), ch(bits);
        mpfr_sinh_cosh(sh.get(), ch.get(), tt.get(), MPFR_RNDN);
        Real u(bits);
        mpfr_mul(u.get(), piHalf.get(), sh.get(), MPFR_RNDN);
        Real tu(bits), cu(bits);
        mpfr_tanh(tu.get(), u.get(), MPFR_RNDN);
        mpfr_cosh(cu.get(), u.get(), MPFR_RNDN);
        Real w(bits);
        mpfr_mul(w.get(), piHalf.get(), ch.get(), MPFR_RNDN);
        mpfr_mul(cu.get(), cu.get(), cu.get(), MPFR_RNDN);
        mpfr_div(w.get(), w.get(), cu.get(), MPFR_RNDN);
        Real xx(bits);
        mpfr_mul(xx.get(), half.get(), tu.get(), MPFR_RNDN);
        mpfr_add(xx.get(), xx.get(), mid.get(), MPFR_RNDN);
        Real fx(bits);
        evalReal(f, xx, bits, fx);
        res.evals++;
        if (!mpfr_number_p(fx.get())) return;
        mpfr_mul(fx.get(), fx.get(), w.get(), MPFR_RNDN);
        mpfr_add(acc.get(), acc.get(), fx.get(), MPFR_RNDN);
    };

    double h = 1.0;
    {
        Real acc(bits);
        mpfr_set_zero(acc.get(), 1);
        addNode(0.0, acc);
        for (double t = h; t <= tmax; t += h) {
            addNode(t, acc);
            addNode(-t, acc);
        }
        sum = acc;
    }
    for (int level = 1; level <= maxLevel; level++) {
        h /= 2;
        Real acc(bits);
        mpfr_set_zero(acc.get(), 1);
        for (double t = h; t <= tmax; t += 2 * h) {
            addNode(t, acc);
            addNode(-t, acc);
        }
        Real prevSum = sum;
        mpfr_add(sum.get(), sum.get(), acc.get(), MPFR_RNDN);
        Real curV(bits), prevV(bits), diff(bits);
        mpfr_mul_d(curV.get(), sum.get(), h, MPFR_RNDN);
        mpfr_mul_d(prevV.get(), prevSum.get(), 2 * h, MPFR_RNDN);
        mpfr_sub(diff.get(), curV.get(), prevV.get(), MPFR_RNDN);
        mpfr_abs(diff.get(), diff.get(), MPFR_RNDN);
        errEst = diff;
        if (level >= 3) {
            Real scaleV(bits);
            mpfr_abs(scaleV.get(), curV.get(), MPFR_RNDN);
            mpfr_add_d(scaleV.get(), scaleV.get(), 1e-30, MPFR_RNDN);
            Real ratio(bits);
            mpfr_div(ratio.get(), errEst.get(), scaleV.get(), MPFR_RNDN);
            if (mpfr_get_d(ratio.get(), MPFR_RNDN) < std::ldexp(1.0, -(bits - 10))) break;
        }
    }
    Real val(bits);
    mpfr_mul_d(val.get(), sum.get(), h, MPFR_RNDN);
    mpfr_mul(val.get(), val.get(), half.get(), MPFR_RNDN);
    Real err(bits);
    mpfr_mul(err.get(), errEst.get(), half.get(), MPFR_RNDN);
    mpfr_abs(err.get(), err.get(), MPFR_RNDN);
    mpfr_mul_ui(err.get(), err.get(), 16, MPFR_RNDN);
    res.value = std::move(val);
    res.err = std::move(err);
    return res;
}

Interval toEnclosure(const TSResult& r, int bits) {
    Interval out(bits);
    mpfr_sub(out.lo(), r.value.get(), r.err.get(), MPFR_RNDD);
    mpfr_add(out.hi(), r.value.get(), r.err.get(), MPFR_RNDU);
    return out;
}

// x in [lo, hi] with G(x) = target (any nearby point is an acceptable cut)
double invertPhase(const ExprPtr& G, double target, double lo, double hi) {
    double flo = evalDouble(G, lo) - target;
    for (int i = 0; i < 80; i++) {
        double m = (lo + hi) / 2;
        double fm = evalDouble(G, m) - target;
        if ((fm <= 0) == (flo <= 0)) {
            lo = m;
            flo = fm;
        } else {
            hi = m;
        }
        if (hi - lo < 1e-13 * (1 + std::abs(lo))) break;
    }
    return (lo + hi) / 2;
}

} // namespace

QuadReport quadSmooth(const ExprPtr& f, const Rat& a, const Rat& b, int bits) {
    Real ra(bits), rb(bits);
    mpfr_set_q(ra.get(), a.get_mpq_t(), MPFR_RNDN);
    mpfr_set_q(rb.get(), b.get_mpq_t(), MPFR_RNDN);
    TSResult r = tanhSinh(f, ra, rb, bits, 10);
    QuadReport rep;
    rep.value = toEnclosure(r, bits);
    rep.subdivisions = r.evals;
    rep.method = "tanh-sinh";
    return rep;
}

QuadReport quadOsc(const ExprPtr& hIn, const ExprPtr& GIn, TrigK kind, const Rat& a, const Rat& b,
                   int bits, Session& S) {
    if (cmp(a, b) >= 0) throw DomainError("empty integration range");
    (void)S;
    ExprPtr h = normalize(hIn);
    ExprPtr G = normalize(GIn);
    ExprPtr f = normalize(mul2(h, kind == TrigK::SinK ? sin_(G) : cos_(G)));
    double da = a.get_d(), db = b.get_d();
    double Ga = evalDouble(G, da), Gb = evalDouble(G, db);
    std::vector<double> cuts{da};
    if (std::isfinite(Ga) && std::isfinite(Gb) && Gb > Ga) {
        long kmin = static_cast<long>(std::ceil(Ga / M_PI)) + 1;
        long kmax = static_cast<long>(std::floor(Gb / M_PI));
        const long maxCells = 4000;
        if (kmax - kmin > maxCells)
            throw BudgetExhausted("too many oscillations in the quadrature range");
        for (long k = kmin; k <= kmax; k++) {
            double c = invertPhase(G, M_PI * static_cast<double>(k), da, db);
            if (c > cuts.back() + 1e-12) cuts.push_back(c);
        }
    }
    cuts.push_back(db);
    QuadReport rep;
    rep.method = "phase-cell tanh-sinh";
    Interval total = Interval::fromLong(0, bits);
    for (size_t i = 0; i + 1 < cuts.size(); i++) {
        Real ra(bits), rb2(bits);
        if (i == 0)
            mpfr_set_q(ra.get(), a.get_mpq_t(), MPFR_RNDN);
        else
            mpfr_set_d(ra.get(), cuts[i], MPFR_RNDN);
        if (i + 2 == cuts.size())
            mpfr_set_q(rb2.get(), b.get_mpq_t(), MPFR_RNDN);
        else
            mpfr_set_d(rb2.get(), cuts[i + 1], MPFR_RNDN);
        TSResult r = tanhSinh(f, ra, rb2, bits, 9);
        total = total.addI(toEnclosure(r, bits));
        rep.subdivisions += r.evals;
    }
    rep.value = total;
    return rep;
}

Interval oracleDiff(const ExprPtr& h, const ExprPtr& G, TrigK kind, const Rat& x1, const Rat& x2,
                    int bits, Session& S) {
    return quadOsc(h, G, kind, x1, x2, bits, S).value;
}

CheckReport checkExpansionTerms(const ExprPtr& h, const ExprPtr& G, TrigK kind,
                                const std::vector<OscTerm>& terms, int N,
                                const std::vector<Rat>& grid, double factor, int bits, Session& S) {
    CheckReport rep;
    auto termValue = [&](const OscTerm& t, const Rat& x) {
        Interval c = evalInterval(t.coeff, x, bits);
        if (t.trig == 2) return c;
        Interval ph = evalInterval(t.phase, x, bits);
        return c.mulI(t.trig == 0 ? ph.sinI() : ph.cosI());
    };
    for (size_t gi = 0; gi + 1 < grid.size(); gi++) {
        const Rat& x1 = grid[gi];
        const Rat& x2 = grid[gi + 1];
        Interval oracle = oracleDiff(h, G, kind, x1, x2, bits, S);
        Interval partial = Interval::fromLong(0, bits);
        for (int n = 0; n < N; n++) {
            if (static_cast<size_t>(n) < terms.size()) {
                Interval dv = termValue(terms[static_cast<size_t>(n)], x2)
                                  .subI(termValue(terms[static_cast<size_t>(n)], x1));
                partial = partial.addI(dv);
            }
            Interval rem = oracle.subI(partial);
            double remMag = std::max(std::abs(rem.midD()), rem.widthD() / 2);
            double bound;
            if (static_cast<size_t>(n + 1) < terms.size()) {
                Interval b1 = evalInterval(terms[static_cast<size_t>(n + 1)].coeff, x1, bits).absI();
                Interval b2 = evalInterval(terms[static_cast<size_t>(n + 1)].coeff, x2, bits).absI();
                bound = mpfr_get_d(b1.hi(), MPFR_RNDU) + mpfr_get_d(b2.hi(), MPFR_RNDU);
            } else {
                bound = 0; // expansion terminated: the remainder must vanish
            }
            CheckRow row;
            row.x = x2.get_d();
            row.n = n + 1;
            row.remainder = remMag;
            row.bound = bound;
            if (bound > 0) {
                row.ratio = remMag / bound;
                row.pass = row.ratio <= factor;
            } else {
                row.ratio = 0;
                row.pass = remMag <= std::max(1e-25, oracle.widthD() * 4);
            }
            rep.rows.push_back(row);
            rep.allPass = rep.allPass && row.pass;
        }
    }
    return rep;
}

CheckReport checkExpansion(const ExprPtr& h, const ExprPtr& G, TrigK kind, int N,
                           const std::vector<Rat>& grid, double factor, int bits, Session& S) {
    OscExpansion oe(h, G, kind, 1, S);
    std::vector<OscTerm> terms;
    for (int i = 0; i <= N + 1; i++) {
        auto t = oe.at(static_cast<size_t>(i), S);
        if (!t) break;
        terms.push_back(*t);
    }
    return checkExpansionTerms(h, G, kind, terms, N, grid, factor, bits, S);
}

MeasuredLimitSample measuredLimitEstimate(const ExprPtr& fIn, const ExprPtr& alphaIn, double l,
                                          double eps, double X, double horizon, Session& S) {
    ExprPtr f = normalize(fIn);
    ExprPtr alpha = normalize(alphaIn);
    if (funcSignAtInfinity(alpha, S).kind != VerdictKind::Positive)
        throw DomainError("alpha must be eventually positive");
    LimitVal lv = limitAtInfinity(alpha, S);
    if (lv.kind != LimitVal::Finite || !lv.value->isZero())
        throw DomainError("alpha must tend to zero");
    if (funcSignAtInfinity(normalize(differentiate(alpha)), S).kind != VerdictKind::Negative)
        throw DomainError("alpha must be eventually decreasing");
    if (!(horizon > X)) throw DomainError("horizon must exceed X");

    auto aVal = [&](double x) { return evalDouble(alpha, x); };
    auto indicator = [&](double x) {
        double v = evalDouble(f, x);
        if (std::isnan(v) || std::isinf(v)) return true; // poles count as far from l
        return std::fabs(v - l) > eps;
    };
    MeasuredLimitSample out;
    out.X = X;
    out.brackets = 0;
    double aX = aVal(X);
    out.tailMass = aVal(horizon) / aX;
    const double step = M_PI / 8;
    const long maxSteps = 8'000'000;
    double massOn = 0;
    double x = X;
    bool ind = indicator(x);
    long steps = 0;
    while (x < horizon) {
        if (++steps > maxSteps) throw BudgetExhausted("measured-limit scan");
        double x2 = std::min(x + step, horizon);
        bool ind2 = indicator(x2);
        if (ind == ind2) {
            if (ind) massOn += aVal(x) - aVal(x2);
        } else {
            out.brackets++;
            double lo = x, hi = x2;
            for (int it = 0; it < 40; it++) {
                double m = (lo + hi) / 2;
                if (indicator(m) == ind)
                    lo = m;
                else
                    hi = m;
            }
            double c = (lo + hi) / 2;
            if (ind)
                massOn += aVal(x) - aVal(c);
            else
                massOn += aVal(c) - aVal(x2);
        }
        x = x2;
        ind = ind2;
    }
    out.estimate = massOn / aX;
    return out;
}

} // namespace oscint
