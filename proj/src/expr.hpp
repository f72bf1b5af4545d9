#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace oscint {

using Rat = mpq_class;

enum class K : uint8_t { Num, Named, Var, Sum, Prod, Pow, Exp, Log, Sin, Cos, OscInt };
enum class Named : uint8_t { Pi, E };
enum class TrigK : uint8_t { SinK, CosK };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression node. Instances are interned: structurally equal
/// expressions share one node, so pointer equality is structural equality.
struct Expr {
    K k;
    Rat num;                  // K::Num value; K::Pow exponent
    Named cname = Named::Pi;  // K::Named
    TrigK okind = TrigK::SinK; // K::OscInt
    int otag = 0;             // K::OscInt arbitrary-constant tag
    std::vector<ExprPtr> ch;  // operands (Sum/Prod: >=2; Pow/Exp/Log/Sin/Cos: 1; OscInt: {integrand, phase})
    size_t hash = 0;

    bool isNum() const { return k == K::Num; }
    bool isNum(long v) const { return k == K::Num && num == v; }
    bool isZero() const { return isNum(0); }
    bool isOne() const { return isNum(1); }
};

// -- construction (normalizing smart constructors) --------------------------
ExprPtr num(const Rat& r);
ExprPtr num(long n);
ExprPtr numq(long p, long q);
ExprPtr named(Named c);
ExprPtr var();
ExprPtr add(std::vector<ExprPtr> ops);
ExprPtr add2(const ExprPtr& a, const ExprPtr& b);
ExprPtr sub2(const ExprPtr& a, const ExprPtr& b);
ExprPtr mul(std::vector<ExprPtr> ops);
ExprPtr mul2(const ExprPtr& a, const ExprPtr& b);
ExprPtr mulr(const Rat& r, const ExprPtr& a);
ExprPtr neg(const ExprPtr& a);
ExprPtr pow(const ExprPtr& base, const Rat& e);
ExprPtr inverse(const ExprPtr& a);
ExprPtr div2(const ExprPtr& a, const ExprPtr& b);
ExprPtr exp_(const ExprPtr& a);
ExprPtr log_(const ExprPtr& a);
ExprPtr sin_(const ExprPtr& a);
ExprPtr cos_(const ExprPtr& a);
/// Raw oscillatory-integral node; integrand and phase must be trig-free.
ExprPtr oscint(const ExprPtr& integrand, const ExprPtr& phase, TrigK kind, int tag);

/// Total deterministic order used for canonical sorting. Returns <0, 0, >0.
int cmpExpr(const ExprPtr& a, const ExprPtr& b);

/// Rebuilds the expression bottom-up through the smart constructors.
/// Idempotent; this is the engine's normal form.
ExprPtr normalize(const ExprPtr& e);

/// d/dx. OscInt(h, G, sin) differentiates to h*sin(G) exactly.
ExprPtr differentiate(const ExprPtr& e);

/// Splits off the rational multiplier of a (normalized) term: 3*x*log(x)
/// gives (3, x*log(x)); plain numbers give (r, 1).
std::pair<Rat, ExprPtr> splitMultiplier(const ExprPtr& e);

bool containsVar(const ExprPtr& e);
bool containsTrig(const ExprPtr& e);   // Sin/Cos/OscInt anywhere
bool containsOscInt(const ExprPtr& e);
/// Structurally guaranteed eventually-positive (x, exp, even powers, ...).
bool evtlPositiveSyntactic(const ExprPtr& e);

/// Replaces every occurrence of the variable by `repl`.
ExprPtr substVar(const ExprPtr& e, const ExprPtr& repl);

/// Rewrites e as a quotient n/d of fraction-free expressions (no
/// negative-exponent powers of sums or atoms at the top level); function
/// arguments are treated as opaque. Both parts normalized.
std::pair<ExprPtr, ExprPtr> clearDenominators(const ExprPtr& e);

/// The k-times iterated logarithm of x as an expression (k = 0 gives x).
ExprPtr logChain(int k);
/// Matches an iterated-log chain; returns k if e == logChain(k).
std::optional<int> matchLogChain(const ExprPtr& e);

// -- text form ---------------------------------------------------------------
std::string print(const ExprPtr& e);
std::string printLatex(const ExprPtr& e);

/// Parses the expression grammar. Fresh OscInt tags are drawn from *tagCounter
/// (may be null for expressions without Int).
ExprPtr parse(const std::string& text, int* tagCounter = nullptr);

/// Parses a rational literal such as "10", "2.5" or "1/3" (used by grids).
Rat parseRational(const std::string& text);

} // namespace oscint
