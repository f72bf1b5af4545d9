#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "expr.hpp"

namespace oscint {

enum class ElemKind : uint8_t { IterLog, ExpElem };

/// One asymptotic-scale element t, a positive function tending to zero.
/// Always of the form t = exp(-L) with L -> +infinity:
///   IterLog(k): t = 1/log_k(x)  (k = 0 gives 1/x), so L = log_{k+1}(x);
///   ExpElem:    t = exp(-L) for a recorded L.
struct ScaleElem {
    int id;
    ElemKind kind;
    int k = 0;    // IterLog depth
    ExprPtr L;    // t = exp(-L)
    ExprPtr expr; // the element itself

    std::string name() const;
};

/// Ordered scale, slowest first: L_i / L_{i+1} -> 0 for adjacent pairs.
struct Scale {
    std::vector<ScaleElem> elems;
    int nextId = 1;

    int rankOf(int id) const;
    const ScaleElem& byId(int id) const;
    const ScaleElem& byRank(int r) const { return elems[static_cast<size_t>(r)]; }
    int size() const { return static_cast<int>(elems.size()); }
    std::optional<int> findIterLog(int k) const; // returns id
};

/// Power product of scale elements with rational exponents; id -> exponent,
/// zero exponents never stored. Multiplication adds exponent maps.
struct Monomial {
    std::map<int, Rat> e;

    bool trivial() const { return e.empty(); }
    Monomial mulM(const Monomial& o) const;
    Monomial divM(const Monomial& o) const;
    Monomial powM(const Rat& q) const;
    bool operator==(const Monomial& o) const { return e == o.e; }
};

struct Config {
    int eval_bits = 192;
    int zero_min_bits = 64;
    int zero_max_bits = 4096;
    int zero_max_x_pow = 40;   // sanity-ladder cap: x up to 2^pow
    int max_terms = 64;        // per-stream demand cap
    long work_budget = 40'000'000;
    int switch_budget = 24;    // sense switches / repeated K-case recursions
    int cancel_budget = 10;    // consecutive cancellations before shadow test
};

} // namespace oscint
