#pragma once

#include "series.hpp"

namespace oscint {

/// Registry of trigonometric argument generators for one expansion session.
/// Generators tend to +infinity, are pairwise of distinct gamma0 (ordered
/// increasing), and rational multiples of input arguments resolve to integer
/// multiples of generators, so the generator set is Q-independent.
struct HGCtx {
    std::vector<ExprPtr> gens;
    std::vector<ExprPtr> genDerivs; // cached g = G' per generator
    ExprPtr deriv(int i) const { return genDerivs[static_cast<size_t>(i)]; }
};

/// Power product of sines/cosines of generators; cosine powers stay <= 1
/// (higher powers are rewritten through cos^2 = 1 - sin^2).
struct TrigMon {
    std::map<int, std::pair<int, int>> f; // gen -> (sin pow, cos pow)

    bool empty() const { return f.empty(); }
    int totalDegree() const;
    bool operator==(const TrigMon& o) const { return f == o.f; }
    bool operator<(const TrigMon& o) const { return f < o.f; }
};

struct HGTerm {
    ExprPtr p; // base-field coefficient, never the zero function
    TrigMon sig;
};

/// Normal form sum p_j * sigma_j with pairwise distinct sigma.
struct HGElem {
    std::vector<HGTerm> terms;
    bool zero() const { return terms.empty(); }
};

HGElem hgConst(const ExprPtr& p);
HGElem hgAdd(const HGElem& a, const HGElem& b, Session& S);
HGElem hgScale(const ExprPtr& f, const HGElem& a, Session& S);
HGElem hgNeg(const HGElem& a);
HGElem hgMul(const HGElem& a, const HGElem& b, Session& S);
HGElem hgDiff(const HGElem& a, const HGCtx& ctx, Session& S);

/// Splits a base-field argument into divergent part, constant and vanishing
/// tail: G = Ginf + Gc + G0. The public operation requires G -> +infinity.
struct ArgParts {
    ExprPtr Ginf, Gc, G0;
};
ArgParts normalizeArgument(const ExprPtr& G, Session& S);

/// Converts a trig-bearing expression into the normal form, growing `ctx`
/// with the generators it needs. Rejects trig inside exp and non-rational
/// generator multiples.
HGElem toNormalForm(const ExprPtr& e, HGCtx& ctx, Session& S);

/// Renders an HGElem back into an expression (for checks and output).
ExprPtr hgToExpr(const HGElem& a, const HGCtx& ctx);

/// gamma0 of a nonzero normal form: the maximum of the coefficient gamma0's
/// (no partial cancellation across distinct trig monomials).
Monomial gamma0HG(const HGElem& a, Session& S);

/// Maximal flutter gamma0(g) over the generators of sigma; nullopt for the
/// empty product (flutter undefined).
std::optional<Monomial> maxFlutter(const TrigMon& sig, const HGCtx& ctx, Session& S);

/// gamma0((P/Q)') by the closed formula over coefficient/flutter candidates.
/// Throws HypothesisViolation when the preconditions fail.
Monomial quotientDerivativeGamma0(const HGElem& P, const HGElem& Q, const HGCtx& ctx, Session& S);

/// One term of the gamma0-ordered expansion of an HGElem: constant leaf times
/// scale monomial times trig monomial.
struct HGSeriesTerm {
    ExprPtr coeff;
    Monomial mono;
    TrigMon sig;
};

/// Lazy gamma0-descending expansion of an HGElem.
class HGSeries {
  public:
    HGSeries() = default;
    HGSeries(const HGElem& a, Session& S);
    std::optional<HGSeriesTerm> at(size_t i, Session& S);

  private:
    struct Src;
    std::shared_ptr<std::vector<Src>> srcs_;
    std::shared_ptr<std::vector<HGSeriesTerm>> memo_;
};

/// Lazy gamma0-descending constant-coefficient flattening of a base-field
/// expression (used by HGSeries and the integral expander).
class FlatStream {
  public:
    FlatStream() = default;
    FlatStream(const ExprPtr& e, Session& S);
    struct FlatTerm {
        ExprPtr coeff;
        Monomial mono;
    };
    std::optional<FlatTerm> at(size_t i, Session& S);

  private:
    struct Frame {
        Stream s;
        size_t idx;
        Monomial pre;
        int elemId;
    };
    struct State {
        std::vector<Frame> frames;
        std::vector<FlatTerm> memo;
        bool done = false;
    };
    std::shared_ptr<State> st_;
};

std::string trigMonStr(const TrigMon& sig, const HGCtx& ctx);

} // namespace oscint
