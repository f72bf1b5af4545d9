#pragma once

#include "integrate.hpp"
#include "trig.hpp"

namespace oscint {

enum class CaseK : uint8_t { ClosedForm, DiffH, IntH, KCase };

struct CaseTag {
    CaseK k;
    ExprPtr alpha;  // (h/g)'/h, null for ClosedForm
    ExprPtr Kconst; // KCase: finite nonzero limit of alpha
    ExprPtr omega;  // KCase: alpha - K
};

const char* caseName(CaseK k);

struct CaseEvent {
    int step;
    std::string what;
    bool switched;
};

/// One emitted expansion term: coeff * trig(phase), gamma0-graded.
struct OscTerm {
    ExprPtr coeff;              // base-field, gamma0-homogeneous
    int trig;                   // 0 sin, 1 cos, 2 none
    ExprPtr phase;              // null when trig == 2
    Monomial g0;                // gamma0 of coeff
};

/// Classifies the integration-by-parts regime of Int h*trig(G).
/// Precondition: G -> +infinity, all multiseries terms divergent.
CaseTag classify(const ExprPtr& h, const ExprPtr& G, Session& S);

/// One step of the descending recurrence: (h/g)'.
ExprPtr hStep(const ExprPtr& h, const ExprPtr& g);

/// One step of the ascending recurrence: antiderivative of Hprev*g.
BaseIntegral HStep(const ExprPtr& Hprev, const ExprPtr& g, Session& S);

/// gamma0 monomial of Int h*trig(G) from the case analysis.
Monomial leadingT(const ExprPtr& h, const ExprPtr& G, Session& S);

/// Lazy expansion of a single oscillatory integral sign * Int h trig(G).
/// Emits strictly gamma0-descending terms (a sin/cos pair of equal gamma0
/// counts as one grade) and records the case/sense history.
class OscExpansion {
  public:
    OscExpansion() = default;
    OscExpansion(ExprPtr h, ExprPtr G, TrigK kind, int sign, Session& S);

    std::optional<OscTerm> at(size_t i, Session& S);
    const std::vector<CaseEvent>& history() const { return st_->history; }
    bool truncated() const { return st_->truncated; }

  private:
    struct Pending {
        ExprPtr h;
        TrigK trig;
        int sign;
        CaseK parent;
        CaseK lastSense = CaseK::ClosedForm; // most recent Diff-h/Int-h ancestor
        bool fromIntHChain = false;
        // prepared classification
        bool ready = false;
        CaseTag tag;
        Monomial emitMono;
        ExprPtr prepared; // IntH: leading antiderivative term
    };
    struct Staged {
        Monomial mono;
        ExprPtr sinCoeff, cosCoeff;
    };
    struct State {
        ExprPtr G, g;
        std::vector<Pending> pend;
        std::vector<Staged> staged;
        std::vector<OscTerm> memo;
        std::vector<CaseEvent> history;
        int steps = 0;
        int switches = 0;
        bool truncated = false;
        long cancellations = 0; // zero-oracle-cancelled merged grades
    };
    std::shared_ptr<State> st_;

    void prepare(Pending& p, Session& S);
    void processBest(Session& S);
    friend class MergedExpansion;
};

/// gamma0-ordered merge of several oscillatory / base-field / trig sources
/// ("these interlace"); equal-grade coefficients are combined and
/// zero-oracle-cancelled, feeding the indefinite-cancellation counter.
class MergedExpansion {
  public:
    MergedExpansion() = default;

    enum class Grade { Emitted, Cancelled, Done };
    /// Advances by one gamma0 grade across all sources; either at least one
    /// merged coefficient survives (Emitted), the whole grade cancels
    /// (Cancelled), or every source is exhausted (Done).
    Grade stepGrade(Session& S);

    std::optional<OscTerm> at(size_t i, Session& S);
    long cancellations() const { return st_->cancel; }
    long consecutiveCancellations() const { return st_->consecCancel; }

    struct Source {
        std::function<std::optional<OscTerm>(size_t, Session&)> fn;
        size_t idx = 0;
    };
    void addSource(Source s) { st_->srcs.push_back(std::move(s)); }

  private:
    struct State {
        std::vector<Source> srcs;
        std::vector<OscTerm> memo;
        long cancel = 0;
        long consecCancel = 0;
    };
    std::shared_ptr<State> st_ = std::make_shared<State>();
};

/// Breaks an expression with OscInt nodes and trig content into expandable
/// sources: single integrals Int p*trig(arg) with base-field p (after
/// product-to-sum linearization), plus the gamma0-stream of the trig-algebra
/// remainder. Integrals must enter linearly with rational multipliers.
struct GeneralSource {
    Rat mult;
    ExprPtr h;    // base-field integrand piece
    TrigK kind;
    ExprPtr G;    // divergent phase, or null for a plain base-field integral
    int tag;      // constant tag of the originating integral
};

struct GeneralExpansion {
    std::vector<GeneralSource> intSources;
    HGElem rest;             // non-integral part in normal form
    HGCtx ctx;
    std::vector<int> tags;   // all constant tags involved
    MergedExpansion merged;
};

GeneralExpansion expandGeneral(const ExprPtr& e, Session& S);

// -- shadows of integrals ----------------------------------------------------

struct ShadowResult {
    int caseNo;               // 1..4
    ExprPtr phi;              // expression, may contain a deferred OscInt (case 3)
    bool hasA;                // symbolic arbitrary constant present
    int Atag;                 // tag when hasA
    ExprPtr omega;            // case 4 only
    Monomial T;
    bool truncated = false;   // case 2 with a non-closed antiderivative
};

/// Generalized i-shadow T * eta_i(f / T) of a base-field element.
ExprPtr generalizedShadow(const ExprPtr& f, int elemId, Session& S);

ShadowResult shadowPhi(const ExprPtr& h, const ExprPtr& G, TrigK kind, int elemId, int tag, Session& S);

/// Splits G = G1 + G2 over a multiseries term boundary of g with
/// g2 = o(g1) and gamma(g2/g1) >= gamma(t_i); identity split when no
/// decomposition exists.
std::pair<ExprPtr, ExprPtr> splitG(const ExprPtr& G, int elemId, Session& S);

/// eta_i(G'): the derivation shortcut that discards the tail of g while
/// keeping G intact.
ExprPtr deltaShadow(const ExprPtr& G, int elemId, Session& S);

struct GhostNF {
    ExprPtr zeta1, zeta2; // ghost = T^-1 { Int zeta1 S + Int zeta2 C }
    Monomial T;
};
GhostNF ghostNormalForm(const ExprPtr& h, const ExprPtr& G, int elemId, Session& S);

// -- indefinite cancellation ---------------------------------------------------

struct ZeroShadowReport {
    enum Outcome { ZeroShadow, NonzeroAfter, Exhausted } outcome;
    long k = 0;               // terms inspected / cancellations seen
    ExprPtr bracket;          // shadow candidate used for the direct test
    ExprPtr bracketDeriv;     // its derivative (zero when ZeroShadow)
};
ZeroShadowReport detectZeroShadow(const ExprPtr& F, int elemId, int cancelBudget, Session& S);

/// Ghost continuation of a general expansion after a zero i-shadow: the same
/// sources with shadow content removed.
GeneralExpansion ghostExpansion(const ExprPtr& F, int elemId, Session& S);

// -- second-order equation -----------------------------------------------------

/// Expansion of the solution y = C*Int(hS) - S*Int(hC) + K1 S + K2 C of
/// g y'' - g' y' + g^3 y = f, with h = -f/g^2 and G the antiderivative of g.
struct OdeSolution {
    ExprPtr h, G;
    std::vector<OscTerm> terms;   // base-field particular terms, gamma0-descending
    ExprPtr K1, K2;               // homogeneous part coefficients
    bool truncated;
};
OdeSolution solveOde(const ExprPtr& g, const ExprPtr& f, const ExprPtr& K1, const ExprPtr& K2,
                     int termCount, Session& S);

} // namespace oscint
