#pragma once

#include "interval.hpp"
#include "oscexp.hpp"

namespace oscint {

/// Numerical enclosure of a definite integral, with diagnostics. The bound is
/// a convergence-based error estimate (tanh-sinh level differences) widened
/// by a safety factor, cross-checked in tests against independent rules; it
/// is not a formal proof.
struct QuadReport {
    Interval value;
    long subdivisions = 0;
    std::string method;
};

/// Integral of h * trig(G) over [a, b]: the range is cut at half-period
/// boundaries of the phase (located by monotone inversion) and each cell is
/// integrated by tanh-sinh quadrature at the working precision.
QuadReport quadOsc(const ExprPtr& h, const ExprPtr& G, TrigK kind, const Rat& a, const Rat& b,
                   int bits, Session& S);

/// Plain tanh-sinh integral of a smooth integrand over [a, b].
QuadReport quadSmooth(const ExprPtr& f, const Rat& a, const Rat& b, int bits);

/// F(x2) - F(x1) for any antiderivative F of h*trig(G); the arbitrary
/// constant cancels in the difference.
Interval oracleDiff(const ExprPtr& h, const ExprPtr& G, TrigK kind, const Rat& x1, const Rat& x2,
                    int bits, Session& S);

/// Remainder-vs-next-term check of an expansion prefix on a grid.
struct CheckRow {
    double x;      // right endpoint of the pair
    int n;         // terms kept
    double remainder;
    double bound;
    double ratio;
    bool pass;
};
struct CheckReport {
    std::vector<CheckRow> rows;
    bool allPass = true;
};

/// For each consecutive grid pair (x1,x2) and每 n <= N: compares the
/// oracle-reconstructed remainder difference |R_n(x2)-R_n(x1)| against the
/// size bound of term n+1; passes when ratio <= factor.
CheckReport checkExpansion(const ExprPtr& h, const ExprPtr& G, TrigK kind, int N,
                           const std::vector<Rat>& grid, double factor, int bits, Session& S);

/// Same check against an explicit term list (coeff, trig, phase).
CheckReport checkExpansionTerms(const ExprPtr& h, const ExprPtr& G, TrigK kind,
                                const std::vector<OscTerm>& terms, int N,
                                const std::vector<Rat>& grid, double factor, int bits, Session& S);

/// Finite estimator of the measured-limit functional
///   (1/alpha(X)) Int_X^H 1_{|f-l|>eps} (-d alpha),
/// with the indicator resolved by sign-change bracketing on a scan grid.
struct MeasuredLimitSample {
    double X;
    double estimate;   // in [0, 1+tol]
    double tailMass;   // alpha(H)/alpha(X), reported truncation
    long brackets;     // located indicator boundaries
};
MeasuredLimitSample measuredLimitEstimate(const ExprPtr& f, const ExprPtr& alpha, double l,
                                          double eps, double X, double horizon, Session& S);

} // namespace oscint
