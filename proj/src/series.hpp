#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>

#include "scale.hpp"

namespace oscint {

struct Session;

/// One multiseries term at a fixed scale rank: coeff * t^exponent, with coeff
/// an expression over strictly slower scale elements (never the zero function).
struct Term {
    Rat exponent;
    ExprPtr coeff;
};

/// Lazy memoized term stream with strictly increasing exponents.
class Stream {
  public:
    using Gen = std::function<std::optional<Term>(Session&)>;

    Stream() : st_(std::make_shared<State>()) { st_->done = true; }
    static Stream fromGen(Gen g);
    static Stream singleton(Rat r, ExprPtr c);
    static Stream emptyStream();

    /// Demands the i-th term. nullopt once the stream is exhausted.
    /// Throws BudgetExhausted when i exceeds the session term cap.
    std::optional<Term> at(size_t i, Session& S) const;

  private:
    struct State {
        std::vector<Term> memo;
        Gen gen;
        bool done = false;
    };
    std::shared_ptr<State> st_;
};

/// Shared expansion state: the scale, configuration, work counters and caches.
/// Single-owner; distinct sessions are fully independent.
struct Session {
    Config cfg;
    Scale scale;
    long work = 0;
    int oscTag = 0;

    std::unordered_map<const Expr*, int> domCache;    // dominant elem id (-1 const)
    std::unordered_map<const Expr*, ExprPtr> normCache;
    std::unordered_map<const Expr*, int> signCache;   // -2 unknown sentinel absent
    // divergent-exponential decompositions: arg -> (elem id/L-multiple list, bounded rest)
    std::unordered_map<const Expr*, std::pair<std::vector<std::pair<int, Rat>>, ExprPtr>> expDecomp;
    struct StreamKey {
        const Expr* e;
        int rank;
        bool operator==(const StreamKey& o) const { return e == o.e && o.rank == rank; }
    };
    struct StreamKeyHash {
        size_t operator()(const StreamKey& k) const {
            return std::hash<const void*>()(k.e) * 31 + static_cast<size_t>(k.rank);
        }
    };
    std::unordered_map<StreamKey, Stream, StreamKeyHash> streamCache;

    Session() { ensureIterLog(0); }
    explicit Session(const Config& c) : cfg(c) { ensureIterLog(0); }

    void tick(long amount = 1);
    /// Inserts iterated-log elements up to depth k (downward closed); returns id.
    int ensureIterLog(int k);
    /// Inserts a new exp element exp(-L), L -> +infinity; returns id.
    int insertExpElem(const ExprPtr& L);
    void invalidateRankCaches();
};

// -- core expansion ----------------------------------------------------------

/// Highest scale rank with content in e, or -1 for constants. Registers
/// iterated-log depth on first sight.
int levelRank(const ExprPtr& e, Session& S);

/// Rewrites divergent exponentials into scale-element power products,
/// growing the scale as needed (the ensure-scale pass). Expressions must go
/// through this before expansion.
ExprPtr scaleNormalize(const ExprPtr& e, Session& S);

/// Series of e in powers of scale element at `rank`; requires
/// levelRank(e) <= rank and e scale-normalized.
Stream expandIn(const ExprPtr& e, int rank, Session& S);

struct Leading {
    ExprPtr coeff;  // fully-unnested constant coefficient (Var-free)
    Monomial mono;
};
/// Leading monomial and constant; nullopt when the series proves empty.
std::optional<Leading> leadingOpt(const ExprPtr& e, Session& S);
Leading leading(const ExprPtr& e, Session& S); // throws on the zero function

// -- comparison machinery ------------------------------------------------------

enum class Cmp0 { Less, Equal, Greater };
struct Gamma0Cmp {
    Cmp0 c;
    ExprPtr ratio; // finite nonzero limit of f/g when Equal
};
Gamma0Cmp cmpGamma0(const ExprPtr& f, const ExprPtr& g, Session& S);
int cmpMonomial(const Monomial& a, const Monomial& b, Session& S); // sign of gamma0(a)-gamma0(b)

enum class CmpG { Less, Equal, Greater };
CmpG cmpGamma(const ExprPtr& f, const ExprPtr& g, Session& S);
bool isBowtie(const ExprPtr& f, const ExprPtr& g, Session& S);

struct LimitVal {
    enum Kind { NegInf, Finite, PosInf } kind;
    ExprPtr value; // set when Finite (constant expression)
};
LimitVal limitAtInfinity(const ExprPtr& e, Session& S);

// -- shadows and ghosts --------------------------------------------------------

/// eta_i: the t_i^0 coefficient of e (a function of slower elements only).
/// Requires e in R_{t_i}; throws DomainError otherwise.
ExprPtr shadowExpr(const ExprPtr& e, int elemId, Session& S);
ExprPtr ghostExpr(const ExprPtr& e, int elemId, Session& S);

enum class RiClass { InI, InRNotI, OutsideR };
RiClass classifyRi(const ExprPtr& e, int elemId, Session& S);

// -- helpers -------------------------------------------------------------------

ExprPtr elemLogExpr(const ScaleElem& el);          // L with t = exp(-L)
ExprPtr monomialExpr(const Monomial& m, Session& S);
ExprPtr monomialLogDeriv(const Monomial& m, Session& S); // (log T)' as expression
std::string monomialStr(const Monomial& m, Session& S);

/// Sign of a Var-free constant: -1, 0, +1; throws UnknownSign.
int constSignOrThrow(const ExprPtr& e, const Config& cfg);
/// Zero test / eventual sign for base-field functions; throws UnknownSign.
bool isZeroFunc(const ExprPtr& e, Session& S);
int funcSignOrThrow(const ExprPtr& e, Session& S);

/// External-interface JSON for the nested multiseries of e.
std::string seriesJson(const ExprPtr& e, Session& S, int maxTerms);

} // namespace oscint
