#include "expr.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <mutex>
#include <sstream>
#include <unordered_set>

namespace oscint {

// ---------------------------------------------------------------------------
// interning
// ---------------------------------------------------------------------------

namespace {

size_t hashCombine(size_t h, size_t v) {
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

size_t hashRat(const Rat& r) {
    return hashCombine(mpz_get_ui(r.get_num_mpz_t()), mpz_get_ui(r.get_den_mpz_t()) * 31 + (mpq_sgn(r.get_mpq_t()) < 0));
}

size_t computeHash(const Expr& e) {
    size_t h = static_cast<size_t>(e.k) * 1099511628211ULL;
    switch (e.k) {
        case K::Num: h = hashCombine(h, hashRat(e.num)); break;
        case K::Named: h = hashCombine(h, static_cast<size_t>(e.cname)); break;
        case K::Pow: h = hashCombine(h, hashRat(e.num)); break;
        case K::OscInt:
            h = hashCombine(h, static_cast<size_t>(e.okind));
            h = hashCombine(h, static_cast<size_t>(e.otag));
            break;
        default: break;
    }
    for (const auto& c : e.ch) h = hashCombine(h, c->hash);
    return h;
}

struct NodeHash {
    size_t operator()(const ExprPtr& p) const { return p->hash; }
};
struct NodeEq {
    // Children are already interned, so pointer comparison suffices below the
    // top node.
    bool operator()(const ExprPtr& a, const ExprPtr& b) const {
        if (a->k != b->k || a->hash != b->hash) return false;
        if (a->ch.size() != b->ch.size()) return false;
        for (size_t i = 0; i < a->ch.size(); i++)
            if (a->ch[i].get() != b->ch[i].get()) return false;
        switch (a->k) {
            case K::Num: return a->num == b->num;
            case K::Named: return a->cname == b->cname;
            case K::Pow: return a->num == b->num;
            case K::OscInt: return a->okind == b->okind && a->otag == b->otag;
            default: return true;
        }
    }
};

ExprPtr intern(Expr&& e) {
    static std::unordered_set<ExprPtr, NodeHash, NodeEq> table;
    static std::mutex mtx;
    e.hash = computeHash(e);
    auto p = std::make_shared<Expr>(std::move(e));
    std::lock_guard<std::mutex> lock(mtx);
    auto [it, inserted] = table.insert(p);
    return *it;
}

ExprPtr node(K k, std::vector<ExprPtr> ch = {}, Rat r = Rat(0)) {
    Expr e;
    e.k = k;
    e.num = std::move(r);
    e.ch = std::move(ch);
    return intern(std::move(e));
}

// exact rational power when representable (integer exponent, or perfect roots)
std::optional<Rat> ratPowExact(const Rat& base, const Rat& e) {
    long p;
    if (!e.get_num().fits_slong_p() || !e.get_den().fits_slong_p()) return std::nullopt;
    p = e.get_num().get_si();
    long d = e.get_den().get_si();
    Rat b = base;
    if (d != 1) {
        if (sgn(base) < 0 && d % 2 == 0) return std::nullopt;
        mpz_class rn, rd;
        if (!mpz_root(rn.get_mpz_t(), b.get_num_mpz_t(), static_cast<unsigned long>(d))) return std::nullopt;
        if (!mpz_root(rd.get_mpz_t(), b.get_den_mpz_t(), static_cast<unsigned long>(d))) return std::nullopt;
        b = Rat(rn, rd);
        b.canonicalize();
    }
    if (p == 0) return Rat(1);
    bool invert = p < 0;
    unsigned long ap = static_cast<unsigned long>(invert ? -p : p);
    if (ap > 512) return std::nullopt;
    mpz_class n, dd;
    mpz_pow_ui(n.get_mpz_t(), b.get_num_mpz_t(), ap);
    mpz_pow_ui(dd.get_mpz_t(), b.get_den_mpz_t(), ap);
    Rat out = invert ? Rat(dd, n) : Rat(n, dd);
    if (sgn(out) == 0 && invert) throw DomainError("division by zero in constant power");
    out.canonicalize();
    return out;
}

constexpr size_t kDistributeLimit = 64;

} // namespace

// ---------------------------------------------------------------------------
// ordering
// ---------------------------------------------------------------------------

int cmpExpr(const ExprPtr& a, const ExprPtr& b) {
    if (a.get() == b.get()) return 0;
    if (a->k != b->k) return a->k < b->k ? -1 : 1;
    switch (a->k) {
        case K::Num: return cmp(a->num, b->num);
        case K::Named: return a->cname == b->cname ? 0 : (a->cname < b->cname ? -1 : 1);
        case K::Var: return 0;
        case K::Pow: {
            if (int c = cmpExpr(a->ch[0], b->ch[0])) return c;
            return cmp(a->num, b->num);
        }
        case K::OscInt: {
            if (a->otag != b->otag) return a->otag < b->otag ? -1 : 1;
            if (a->okind != b->okind) return a->okind < b->okind ? -1 : 1;
            break;
        }
        default: break;
    }
    size_t n = std::min(a->ch.size(), b->ch.size());
    for (size_t i = 0; i < n; i++)
        if (int c = cmpExpr(a->ch[i], b->ch[i])) return c;
    if (a->ch.size() != b->ch.size()) return a->ch.size() < b->ch.size() ? -1 : 1;
    return 0;
}

namespace {
struct ExprLess {
    bool operator()(const ExprPtr& a, const ExprPtr& b) const { return cmpExpr(a, b) < 0; }
};
} // namespace

// ---------------------------------------------------------------------------
// smart constructors
// ---------------------------------------------------------------------------

ExprPtr num(const Rat& r) {
    Rat c = r;
    c.canonicalize();
    return node(K::Num, {}, c);
}
ExprPtr num(long n) { return num(Rat(n)); }
ExprPtr numq(long p, long q) { return num(Rat(p, q)); }

ExprPtr named(Named c) {
    if (c == Named::E) return exp_(num(1));
    Expr e;
    e.k = K::Named;
    e.cname = c;
    return intern(std::move(e));
}

ExprPtr var() { return node(K::Var); }

std::pair<Rat, ExprPtr> splitMultiplier(const ExprPtr& e) {
    if (e->k == K::Num) return {e->num, nullptr};
    if (e->k == K::Prod && e->ch[0]->k == K::Num) {
        Rat m = e->ch[0]->num;
        if (e->ch.size() == 2) return {m, e->ch[1]};
        std::vector<ExprPtr> rest(e->ch.begin() + 1, e->ch.end());
        return {m, node(K::Prod, std::move(rest))};
    }
    return {Rat(1), e};
}

namespace {
// rebuilds mult*core without re-running full product normalization
ExprPtr withMultiplier(const Rat& m, const ExprPtr& core) {
    if (core == nullptr) return num(m);
    if (m == 0) return num(0);
    if (m == 1) return core;
    if (core->k == K::Prod) {
        std::vector<ExprPtr> ch;
        ch.push_back(num(m));
        for (auto& c : core->ch) ch.push_back(c);
        return node(K::Prod, std::move(ch));
    }
    return node(K::Prod, {num(m), core});
}
} // namespace

namespace {
// splits a term core into (numerator factors, denominator factors), the
// denominator being the negative-exponent power factors
std::pair<ExprPtr, ExprPtr> splitDenominator(const ExprPtr& core) {
    if (core->k == K::Pow && sgn(core->num) < 0) return {num(1), core};
    if (core->k != K::Prod) return {core, nullptr};
    std::vector<ExprPtr> nums, dens;
    for (auto& f : core->ch) {
        if (f->k == K::Pow && sgn(f->num) < 0 && f->ch[0]->k == K::Sum)
            dens.push_back(f);
        else
            nums.push_back(f);
    }
    if (dens.empty()) return {core, nullptr};
    ExprPtr den = dens.size() == 1 ? dens[0] : node(K::Prod, std::move(dens));
    ExprPtr numPart = nums.empty() ? num(1)
                      : nums.size() == 1 ? nums[0]
                                         : node(K::Prod, std::move(nums));
    return {numPart, den};
}
} // namespace

ExprPtr add(std::vector<ExprPtr> ops) {
    Rat constant(0);
    std::map<ExprPtr, Rat, ExprLess> cores;
    std::vector<ExprPtr> work(std::move(ops));
    while (!work.empty()) {
        ExprPtr e = work.back();
        work.pop_back();
        if (e->k == K::Sum) {
            for (auto& c : e->ch) work.push_back(c);
            continue;
        }
        auto [m, core] = splitMultiplier(e);
        if (core == nullptr) {
            constant += m;
            continue;
        }
        cores[core] += m;
    }
    // combine terms sharing a sum-typed denominator part so quotient chains
    // collapse instead of nesting
    std::map<ExprPtr, std::vector<ExprPtr>, ExprLess> byDen;
    std::vector<ExprPtr> terms;
    for (auto& [core, m] : cores) {
        if (m == 0) continue;
        auto [numPart, den] = splitDenominator(core);
        if (den == nullptr) {
            terms.push_back(withMultiplier(m, core));
            continue;
        }
        byDen[den].push_back(withMultiplier(m, numPart));
    }
    for (auto& [den, numsList] : byDen) {
        if (numsList.size() == 1) {
            terms.push_back(mul2(numsList[0], den));
            continue;
        }
        ExprPtr numSum = add(std::vector<ExprPtr>(numsList));
        ExprPtr combined = mul2(numSum, den);
        if (combined->k == K::Sum) {
            for (auto& t : combined->ch) terms.push_back(t);
        } else if (!combined->isZero()) {
            terms.push_back(combined);
        }
    }
    if (constant != 0) terms.push_back(num(constant));
    if (terms.empty()) return num(0);
    if (terms.size() == 1) return terms[0];
    std::sort(terms.begin(), terms.end(), ExprLess{});
    return node(K::Sum, std::move(terms));
}

ExprPtr add2(const ExprPtr& a, const ExprPtr& b) { return add({a, b}); }
ExprPtr sub2(const ExprPtr& a, const ExprPtr& b) { return add({a, neg(b)}); }
ExprPtr neg(const ExprPtr& a) { return mulr(Rat(-1), a); }
ExprPtr mulr(const Rat& r, const ExprPtr& a) { return mul({num(r), a}); }
ExprPtr mul2(const ExprPtr& a, const ExprPtr& b) { return mul({a, b}); }
ExprPtr inverse(const ExprPtr& a) { return pow(a, Rat(-1)); }
ExprPtr div2(const ExprPtr& a, const ExprPtr& b) { return mul({a, pow(b, Rat(-1))}); }

ExprPtr mul(std::vector<ExprPtr> ops) {
    Rat coeff(1);
    std::map<ExprPtr, Rat, ExprLess> bases; // base -> exponent
    std::vector<ExprPtr> expArgs;           // collected Exp arguments
    std::vector<ExprPtr> work(std::move(ops));
    while (!work.empty()) {
        ExprPtr e = work.back();
        work.pop_back();
        switch (e->k) {
            case K::Prod:
                for (auto& c : e->ch) work.push_back(c);
                break;
            case K::Num:
                coeff *= e->num;
                break;
            case K::Exp:
                expArgs.push_back(e->ch[0]);
                break;
            case K::Pow:
                if (e->ch[0]->k == K::Exp) {
                    expArgs.push_back(mulr(e->num, e->ch[0]->ch[0]));
                } else {
                    bases[e->ch[0]] += e->num;
                }
                break;
            default:
                bases[e] += Rat(1);
                break;
        }
    }
    if (coeff == 0) return num(0);
    std::vector<ExprPtr> factors;
    if (!expArgs.empty()) {
        ExprPtr ea = expArgs.size() == 1 ? expArgs[0] : add(std::move(expArgs));
        ExprPtr f = exp_(ea);
        // exp_ may fold (e.g. exp(log u) -> u); feed non-factor shapes back in
        if (f->k == K::Prod || f->k == K::Num || f->k == K::Sum) {
            std::vector<ExprPtr> again;
            again.push_back(num(coeff));
            again.push_back(f);
            for (auto& [b, e2] : bases)
                if (e2 != 0) again.push_back(pow(b, e2));
            return mul(std::move(again));
        }
        factors.push_back(f);
    }
    for (auto& [b, e] : bases) {
        if (e == 0) continue;
        if (b->k == K::Sum && e.get_den() == 1 && sgn(e) > 0 && e <= 4) {
            // keep repeated sum factors for the distribution pass below
            long n = e.get_num().get_si();
            for (long i = 0; i < n; i++) factors.push_back(b);
            continue;
        }
        ExprPtr f = pow(b, e);
        if (f->k == K::Num) {
            coeff *= f->num;
            continue;
        }
        factors.push_back(f);
    }
    if (coeff == 0) return num(0);
    // distribute over sums while the result stays small; sum-typed
    // denominators never participate, so quotients keep the shape
    // (expanded numerator) * D^-1 instead of splitting term by term
    std::vector<ExprPtr> denFactors, rest;
    for (auto& f : factors) {
        if (f->k == K::Pow && sgn(f->num) < 0 && f->ch[0]->k == K::Sum)
            denFactors.push_back(f);
        else
            rest.push_back(f);
    }
    size_t total = 1;
    bool anySum = false;
    for (auto& f : rest) {
        if (f->k == K::Sum) {
            anySum = true;
            total *= f->ch.size();
            if (total > kDistributeLimit) break;
        }
    }
    if (anySum && total <= kDistributeLimit) {
        std::vector<ExprPtr> terms{num(coeff)};
        for (auto& f : rest) {
            if (f->k != K::Sum) continue;
            std::vector<ExprPtr> next;
            for (auto& t : terms)
                for (auto& s : f->ch) next.push_back(mul({t, s}));
            terms = std::move(next);
        }
        std::vector<ExprPtr> nonSum;
        for (auto& f : rest)
            if (f->k != K::Sum) nonSum.push_back(f);
        if (!nonSum.empty())
            for (auto& t : terms) t = mul([&] {
                std::vector<ExprPtr> v{t};
                for (auto& f : nonSum) v.push_back(f);
                return v;
            }());
        ExprPtr numerator = add(std::move(terms));
        if (denFactors.empty()) return numerator;
        if (numerator->k != K::Sum) {
            std::vector<ExprPtr> v{numerator};
            for (auto& f : denFactors) v.push_back(f);
            return mul(std::move(v));
        }
        // assemble the quotient without re-splitting the numerator
        std::vector<ExprPtr> ch;
        ch.push_back(numerator);
        for (auto& f : denFactors) ch.push_back(f);
        std::sort(ch.begin(), ch.end(), ExprLess{});
        return node(K::Prod, std::move(ch));
    }
    std::sort(factors.begin(), factors.end(), ExprLess{});
    if (factors.empty()) return num(coeff);
    if (coeff != 1) {
        std::vector<ExprPtr> ch{num(coeff)};
        for (auto& f : factors) ch.push_back(f);
        return node(K::Prod, std::move(ch));
    }
    if (factors.size() == 1) return factors[0];
    return node(K::Prod, std::move(factors));
}

ExprPtr pow(const ExprPtr& base, const Rat& eIn) {
    Rat e = eIn;
    e.canonicalize();
    if (e == 0) return num(1);
    if (e == 1) return base;
    switch (base->k) {
        case K::Num: {
            if (base->num == 0) {
                if (sgn(e) < 0) throw DomainError("division by zero");
                return num(0);
            }
            if (auto r = ratPowExact(base->num, e)) return num(*r);
            if (sgn(base->num) < 0) throw DomainError("fractional power of a negative constant");
            // irrational constant power: canonical form exp(e*log c)
            return node(K::Exp, {withMultiplier(e, node(K::Log, {base}))});
        }
        case K::Pow: {
            const Rat& a = base->num;
            bool innerEven = a.get_den() == 1 && mpz_even_p(a.get_num_mpz_t());
            if (!innerEven || evtlPositiveSyntactic(base->ch[0]))
                return pow(base->ch[0], a * e);
            break;
        }
        case K::Exp:
            return exp_(mulr(e, base->ch[0]));
        case K::Prod: {
            bool allPos = true;
            for (auto& f : base->ch)
                if (!evtlPositiveSyntactic(f)) { allPos = false; break; }
            if (e.get_den() == 1 || allPos) {
                std::vector<ExprPtr> parts;
                for (auto& f : base->ch) parts.push_back(pow(f, e));
                return mul(std::move(parts));
            }
            break;
        }
        case K::Sum: {
            if (e.get_den() == 1 && e.get_num().fits_slong_p()) {
                long n = e.get_num().get_si();
                long an = n < 0 ? -n : n;
                size_t cost = 1;
                bool ok = an <= 6;
                for (long i = 0; ok && i < an; i++) {
                    cost *= base->ch.size();
                    if (cost > kDistributeLimit) ok = false;
                }
                if (ok && an >= 2) {
                    // direct convolution over the term lists (the factors of a
                    // normalized sum are not sums, so this cannot re-enter here)
                    std::vector<ExprPtr> acc{num(1)};
                    for (long i = 0; i < an; i++) {
                        std::vector<ExprPtr> next;
                        next.reserve(acc.size() * base->ch.size());
                        for (auto& t : acc)
                            for (auto& s : base->ch) next.push_back(mul2(t, s));
                        acc = std::move(next);
                    }
                    ExprPtr p = add(std::move(acc));
                    if (n < 0) return pow(p, Rat(-1));
                    return p;
                }
            }
            break;
        }
        default: break;
    }
    return node(K::Pow, {base}, e);
}

ExprPtr exp_(const ExprPtr& a) {
    if (a->isZero()) return num(1);
    if (a->k == K::Log) {
        // germ convention: log arguments are eventually positive
        return a->ch[0];
    }
    // pull out rational multiples of logarithms: exp(q*log u + rest) = u^q * exp(rest)
    std::vector<ExprPtr> terms = a->k == K::Sum ? a->ch : std::vector<ExprPtr>{a};
    std::vector<ExprPtr> factors, rest;
    for (auto& t : terms) {
        auto [m, core] = splitMultiplier(t);
        if (core && core->k == K::Log) {
            const ExprPtr& u = core->ch[0];
            bool foldable = u->k != K::Num;
            if (u->k == K::Num && ratPowExact(u->num, m)) foldable = true;
            if (foldable) {
                factors.push_back(pow(u, m));
                continue;
            }
        }
        rest.push_back(t);
    }
    if (!factors.empty()) {
        if (!rest.empty()) factors.push_back(exp_(add(std::move(rest))));
        return mul(std::move(factors));
    }
    return node(K::Exp, {a});
}

ExprPtr log_(const ExprPtr& a) {
    switch (a->k) {
        case K::Num:
            if (sgn(a->num) <= 0) throw DomainError("log of a non-positive constant");
            if (a->num == 1) return num(0);
            if (a->num.get_den() != 1) // log(p/q) = log p - log q
                return sub2(log_(num(Rat(a->num.get_num()))), log_(num(Rat(a->num.get_den()))));
            return node(K::Log, {a});
        case K::Exp:
            return a->ch[0];
        case K::Prod: {
            bool allPos = true;
            for (auto& f : a->ch)
                if (!evtlPositiveSyntactic(f)) { allPos = false; break; }
            if (allPos) {
                std::vector<ExprPtr> parts;
                for (auto& f : a->ch) parts.push_back(log_(f));
                return add(std::move(parts));
            }
            break;
        }
        case K::Pow:
            if (a->num.get_den() != 1 || evtlPositiveSyntactic(a->ch[0]))
                return mulr(a->num, log_(a->ch[0]));
            break;
        default: break;
    }
    return node(K::Log, {a});
}

namespace {
// extracts sign so that sin(-u) = -sin(u), cos(-u) = cos(u)
std::pair<bool, ExprPtr> extractArgSign(const ExprPtr& a) {
    auto [m, core] = splitMultiplier(a);
    if (sgn(m) < 0) return {true, withMultiplier(-m, core)};
    if (a->k == K::Sum) {
        // negate when the canonical first term is negative
        auto [m0, c0] = splitMultiplier(a->ch[0]);
        (void)c0;
        if (sgn(m0) < 0) return {true, neg(a)};
    }
    return {false, a};
}
} // namespace

ExprPtr sin_(const ExprPtr& a) {
    if (a->isZero()) return num(0);
    auto [negated, arg] = extractArgSign(a);
    ExprPtr s = node(K::Sin, {arg});
    return negated ? neg(s) : s;
}

ExprPtr cos_(const ExprPtr& a) {
    if (a->isZero()) return num(1);
    auto [negated, arg] = extractArgSign(a);
    (void)negated;
    return node(K::Cos, {arg});
}

ExprPtr oscint(const ExprPtr& integrand, const ExprPtr& phase, TrigK kind, int tag) {
    if (containsTrig(phase)) throw Unsupported("oscillatory phase must be trig-free");
    if (containsOscInt(integrand)) throw Unsupported("nested integrals inside an integrand are not supported");
    Expr e;
    e.k = K::OscInt;
    e.ch = {integrand, phase};
    e.okind = kind;
    e.otag = tag;
    return intern(std::move(e));
}

// ---------------------------------------------------------------------------
// predicates and traversals
// ---------------------------------------------------------------------------

bool containsVar(const ExprPtr& e) {
    if (e->k == K::Var) return true;
    for (auto& c : e->ch)
        if (containsVar(c)) return true;
    return false;
}

bool containsTrig(const ExprPtr& e) {
    if (e->k == K::Sin || e->k == K::Cos || e->k == K::OscInt) return true;
    for (auto& c : e->ch)
        if (containsTrig(c)) return true;
    return false;
}

bool containsOscInt(const ExprPtr& e) {
    if (e->k == K::OscInt) return true;
    for (auto& c : e->ch)
        if (containsOscInt(c)) return true;
    return false;
}

bool evtlPositiveSyntactic(const ExprPtr& e) {
    switch (e->k) {
        case K::Num: return sgn(e->num) > 0;
        case K::Named: return true; // pi
        case K::Var: return true;   // germs at +infinity
        case K::Exp: return true;
        case K::Pow: {
            if (evtlPositiveSyntactic(e->ch[0])) return true;
            return e->num.get_den() == 1 && mpz_even_p(e->num.get_num_mpz_t());
        }
        case K::Prod: {
            int negs = 0;
            for (auto& f : e->ch) {
                if (evtlPositiveSyntactic(f)) continue;
                if (f->k == K::Num && sgn(f->num) < 0) { negs++; continue; }
                return false;
            }
            return negs % 2 == 0;
        }
        case K::Sum: {
            for (auto& t : e->ch)
                if (!evtlPositiveSyntactic(t)) return false;
            return true;
        }
        default: return false;
    }
}

ExprPtr normalize(const ExprPtr& e) {
    std::vector<ExprPtr> kids;
    kids.reserve(e->ch.size());
    for (auto& c : e->ch) kids.push_back(normalize(c));
    switch (e->k) {
        case K::Num:
        case K::Named:
        case K::Var: return e;
        case K::Sum: return add(std::move(kids));
        case K::Prod: return mul(std::move(kids));
        case K::Pow: return pow(kids[0], e->num);
        case K::Exp: return exp_(kids[0]);
        case K::Log: return log_(kids[0]);
        case K::Sin: return sin_(kids[0]);
        case K::Cos: return cos_(kids[0]);
        case K::OscInt: return oscint(kids[0], kids[1], e->okind, e->otag);
    }
    return e;
}

ExprPtr differentiate(const ExprPtr& e) {
    switch (e->k) {
        case K::Num:
        case K::Named: return num(0);
        case K::Var: return num(1);
        case K::Sum: {
            std::vector<ExprPtr> parts;
            for (auto& c : e->ch) parts.push_back(differentiate(c));
            return add(std::move(parts));
        }
        case K::Prod: {
            std::vector<ExprPtr> parts;
            for (size_t i = 0; i < e->ch.size(); i++) {
                std::vector<ExprPtr> fac = e->ch;
                fac[i] = differentiate(e->ch[i]);
                parts.push_back(mul(std::move(fac)));
            }
            return add(std::move(parts));
        }
        case K::Pow:
            return mul({num(e->num), pow(e->ch[0], e->num - 1), differentiate(e->ch[0])});
        case K::Exp: return mul2(differentiate(e->ch[0]), e);
        case K::Log: return div2(differentiate(e->ch[0]), e->ch[0]);
        case K::Sin: return mul2(differentiate(e->ch[0]), cos_(e->ch[0]));
        case K::Cos: return neg(mul2(differentiate(e->ch[0]), sin_(e->ch[0])));
        case K::OscInt:
            return mul2(e->ch[0], e->okind == TrigK::SinK ? sin_(e->ch[1]) : cos_(e->ch[1]));
    }
    return num(0);
}

ExprPtr substVar(const ExprPtr& e, const ExprPtr& repl) {
    if (e->k == K::Var) return repl;
    if (e->ch.empty()) return e;
    std::vector<ExprPtr> kids;
    kids.reserve(e->ch.size());
    for (auto& c : e->ch) kids.push_back(substVar(c, repl));
    switch (e->k) {
        case K::Sum: return add(std::move(kids));
        case K::Prod: return mul(std::move(kids));
        case K::Pow: return pow(kids[0], e->num);
        case K::Exp: return exp_(kids[0]);
        case K::Log: return log_(kids[0]);
        case K::Sin: return sin_(kids[0]);
        case K::Cos: return cos_(kids[0]);
        case K::OscInt: return oscint(kids[0], kids[1], e->okind, e->otag);
        default: return e;
    }
}

std::pair<ExprPtr, ExprPtr> clearDenominators(const ExprPtr& e) {
    switch (e->k) {
        case K::Pow: {
            auto [n, d] = clearDenominators(e->ch[0]);
            if (sgn(e->num) < 0) return {pow(d, -e->num), pow(n, -e->num)};
            return {pow(n, e->num), pow(d, e->num)};
        }
        case K::Prod: {
            std::vector<ExprPtr> ns, ds;
            for (auto& f : e->ch) {
                auto [n, d] = clearDenominators(f);
                ns.push_back(n);
                ds.push_back(d);
            }
            return {mul(std::move(ns)), mul(std::move(ds))};
        }
        case K::Sum: {
            std::vector<ExprPtr> ns, ds;
            for (auto& t : e->ch) {
                auto [n, d] = clearDenominators(t);
                ns.push_back(n);
                ds.push_back(d);
            }
            bool allOne = true;
            for (auto& d : ds)
                if (!d->isOne()) allOne = false;
            if (allOne) return {e, num(1)};
            std::vector<ExprPtr> terms;
            for (size_t i = 0; i < ns.size(); i++) {
                std::vector<ExprPtr> fac{ns[i]};
                for (size_t j = 0; j < ds.size(); j++)
                    if (j != i) fac.push_back(ds[j]);
                terms.push_back(mul(std::move(fac)));
            }
            return {add(std::move(terms)), mul(std::move(ds))};
        }
        default:
            return {e, num(1)};
    }
}

ExprPtr logChain(int k) {
    ExprPtr e = var();
    for (int i = 0; i < k; i++) e = log_(e);
    return e;
}

std::optional<int> matchLogChain(const ExprPtr& e) {
    int k = 0;
    ExprPtr cur = e;
    while (cur->k == K::Log) {
        k++;
        cur = cur->ch[0];
    }
    if (cur->k == K::Var) return k;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// printing
// ---------------------------------------------------------------------------

namespace {

std::string printRat(const Rat& r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

std::string printExponent(const Rat& e) {
    if (e.get_den() == 1) return "^" + printRat(e);
    return "^(" + printRat(e) + ")";
}

// precedence: 0 sum, 1 product, 2 power/atom
std::string printPrec(const ExprPtr& e, int parentPrec);

std::string printFactor(const ExprPtr& e) {
    // a factor in a product: base^exp with base at atom level
    if (e->k == K::Pow) {
        return printPrec(e->ch[0], 2) + printExponent(e->num);
    }
    return printPrec(e, 2);
}

std::string printProduct(const ExprPtr& e) {
    // split into numerator and denominator factors
    Rat coeff(1);
    std::vector<ExprPtr> nums, dens;
    std::vector<ExprPtr> fs = e->k == K::Prod ? e->ch : std::vector<ExprPtr>{e};
    for (auto& f : fs) {
        if (f->k == K::Num) {
            coeff *= f->num;
        } else if (f->k == K::Pow && sgn(f->num) < 0) {
            dens.push_back(pow(f->ch[0], -f->num));
        } else {
            nums.push_back(f);
        }
    }
    std::ostringstream os;
    bool needStar = false;
    if (coeff.get_num() == -1 && !nums.empty()) {
        os << "-";
    } else if (coeff.get_num() != 1 || nums.empty()) {
        os << printRat(Rat(coeff.get_num()));
        needStar = true;
    }
    for (auto& f : nums) {
        if (needStar) os << "*";
        os << printFactor(f);
        needStar = true;
    }
    if (coeff.get_den() != 1) os << "/" << printRat(Rat(coeff.get_den()));
    for (auto& f : dens) os << "/" << printFactor(f);
    return os.str();
}

std::string printPrec(const ExprPtr& e, int parentPrec) {
    switch (e->k) {
        case K::Num: {
            if (sgn(e->num) < 0 || e->num.get_den() != 1) {
                std::string s = printProduct(e);
                if (parentPrec >= 1 && (sgn(e->num) < 0 || e->num.get_den() != 1))
                    return parentPrec >= 2 || sgn(e->num) < 0 ? "(" + s + ")" : s;
                return s;
            }
            return printRat(e->num);
        }
        case K::Named: return "pi";
        case K::Var: return "x";
        case K::Sum: {
            std::ostringstream os;
            bool first = true;
            for (auto& t : e->ch) {
                auto [m, core] = splitMultiplier(t);
                (void)core;
                if (!first && sgn(m) < 0) {
                    os << "-" << printPrec(neg(t), 1);
                } else {
                    if (!first) os << "+";
                    os << printPrec(t, 1);
                }
                first = false;
            }
            std::string s = os.str();
            return parentPrec >= 1 ? "(" + s + ")" : s;
        }
        case K::Prod: {
            std::string s = printProduct(e);
            auto [m, core] = splitMultiplier(e);
            (void)core;
            bool needParen = parentPrec >= 2 || (parentPrec >= 1 && sgn(m) < 0);
            return needParen ? "(" + s + ")" : s;
        }
        case K::Pow: {
            std::string s = printFactor(e);
            return s;
        }
        case K::Exp:
            if (e->ch[0]->isOne()) return "e";
            return "exp(" + printPrec(e->ch[0], 0) + ")";
        case K::Log: return "log(" + printPrec(e->ch[0], 0) + ")";
        case K::Sin: return "sin(" + printPrec(e->ch[0], 0) + ")";
        case K::Cos: return "cos(" + printPrec(e->ch[0], 0) + ")";
        case K::OscInt:
            return std::string("Int(") + printPrec(e->ch[0], 0) + ", " +
                   (e->okind == TrigK::SinK ? "sin" : "cos") + ", " + printPrec(e->ch[1], 0) + ")";
    }
    return "?";
}

std::string latexPrec(const ExprPtr& e, int parentPrec) {
    switch (e->k) {
        case K::Num: {
            if (e->num.get_den() != 1) {
                std::string s = "\\tfrac{" + printRat(Rat(e->num.get_num())) + "}{" +
                                printRat(Rat(e->num.get_den())) + "}";
                return sgn(e->num) < 0 && parentPrec >= 1 ? "(" + s + ")" : s;
            }
            std::string s = printRat(e->num);
            return sgn(e->num) < 0 && parentPrec >= 1 ? "(" + s + ")" : s;
        }
        case K::Named: return "\\pi";
        case K::Var: return "x";
        case K::Sum: {
            std::string s;
            bool first = true;
            for (auto& t : e->ch) {
                auto [m, core] = splitMultiplier(t);
                (void)core;
                if (!first && sgn(m) < 0)
                    s += "-" + latexPrec(neg(t), 1);
                else {
                    if (!first) s += "+";
                    s += latexPrec(t, 1);
                }
                first = false;
            }
            return parentPrec >= 1 ? "\\left(" + s + "\\right)" : s;
        }
        case K::Prod: {
            Rat coeff(1);
            std::vector<ExprPtr> nums, dens;
            for (auto& f : e->ch) {
                if (f->k == K::Num) coeff *= f->num;
                else if (f->k == K::Pow && sgn(f->num) < 0) dens.push_back(pow(f->ch[0], -f->num));
                else nums.push_back(f);
            }
            std::string sn, sd;
            if (coeff.get_num() != 1 || nums.empty()) sn = printRat(Rat(abs(coeff.get_num())));
            for (auto& f : nums) sn += (sn.empty() ? "" : "\\,") + latexPrec(f, 2);
            if (coeff.get_den() != 1) sd = printRat(Rat(coeff.get_den()));
            for (auto& f : dens) sd += (sd.empty() ? "" : "\\,") + latexPrec(f, 2);
            std::string s = sd.empty() ? sn : "\\frac{" + sn + "}{" + sd + "}";
            if (sgn(coeff) < 0) s = "-" + s;
            return (parentPrec >= 2 || (parentPrec >= 1 && sgn(coeff) < 0)) ? "\\left(" + s + "\\right)" : s;
        }
        case K::Pow: {
            std::string b = latexPrec(e->ch[0], 2);
            if (e->num == Rat(1, 2)) return "\\sqrt{" + latexPrec(e->ch[0], 0) + "}";
            if (sgn(e->num) < 0) return "\\frac{1}{" + latexPrec(pow(e->ch[0], -e->num), 0) + "}";
            return b + "^{" + printRat(e->num) + "}";
        }
        case K::Exp:
            if (e->ch[0]->isOne()) return "e";
            return "e^{" + latexPrec(e->ch[0], 0) + "}";
        case K::Log: return "\\log\\left(" + latexPrec(e->ch[0], 0) + "\\right)";
        case K::Sin: return "\\sin\\left(" + latexPrec(e->ch[0], 0) + "\\right)";
        case K::Cos: return "\\cos\\left(" + latexPrec(e->ch[0], 0) + "\\right)";
        case K::OscInt:
            return "\\int " + latexPrec(e->ch[0], 1) +
                   (e->okind == TrigK::SinK ? "\\sin" : "\\cos") + "\\left(" +
                   latexPrec(e->ch[1], 0) + "\\right)\\,dx";
    }
    return "?";
}

} // namespace

std::string print(const ExprPtr& e) { return printPrec(e, 0); }
std::string printLatex(const ExprPtr& e) { return latexPrec(e, 0); }

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

namespace {

struct Parser {
    const std::string& s;
    size_t i = 0;
    int* tagCounter;

    explicit Parser(const std::string& text, int* tc) : s(text), tagCounter(tc) {}

    void skipWs() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) i++;
    }
    bool peek(char c) {
        skipWs();
        return i < s.size() && s[i] == c;
    }
    bool eat(char c) {
        if (peek(c)) { i++; return true; }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) throw ParseError(std::string("expected '") + c + "'", i);
    }

    mpz_class integer() {
        skipWs();
        size_t start = i;
        bool negSign = false;
        if (i < s.size() && (s[i] == '-' || s[i] == '+')) {
            negSign = s[i] == '-';
            i++;
        }
        size_t digits = i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) i++;
        if (i == digits) throw ParseError("expected integer", start);
        mpz_class v(s.substr(digits, i - digits));
        return negSign ? mpz_class(-v) : v;
    }

    Rat ratExponent() {
        skipWs();
        if (eat('(')) {
            mpz_class p = integer();
            skipWs();
            if (eat('/')) {
                mpz_class q = integer();
                expect(')');
                if (q == 0) throw ParseError("zero denominator", i);
                Rat r(p, q);
                r.canonicalize();
                return r;
            }
            expect(')');
            return Rat(p);
        }
        return Rat(integer());
    }

    std::string ident() {
        skipWs();
        size_t start = i;
        while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) i++;
        return s.substr(start, i - start);
    }

    ExprPtr atom() {
        skipWs();
        if (i >= s.size()) throw ParseError("unexpected end of input", i);
        char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            mpz_class v = integer();
            return num(Rat(v));
        }
        if (c == '(') {
            i++;
            ExprPtr e = expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = i;
            std::string id = ident();
            if (id == "x") return var();
            if (id == "pi") return named(Named::Pi);
            if (id == "e") return named(Named::E);
            if (id == "Int") {
                expect('(');
                ExprPtr h = expr();
                expect(',');
                skipWs();
                std::string kind = ident();
                TrigK tk;
                if (kind == "sin") tk = TrigK::SinK;
                else if (kind == "cos") tk = TrigK::CosK;
                else throw ParseError("expected sin or cos", i);
                expect(',');
                ExprPtr G = expr();
                expect(')');
                int tag = tagCounter ? ++(*tagCounter) : 1;
                return oscint(h, G, tk, tag);
            }
            expect('(');
            ExprPtr a = expr();
            expect(')');
            if (id == "exp") return exp_(a);
            if (id == "log") return log_(a);
            if (id == "sin") return sin_(a);
            if (id == "cos") return cos_(a);
            if (id == "sqrt") return pow(a, Rat(1, 2));
            throw ParseError("unknown identifier '" + id + "'", start);
        }
        throw ParseError("unexpected character", i);
    }

    ExprPtr factor() {
        ExprPtr a = atom();
        skipWs();
        if (eat('^')) {
            Rat e = ratExponent();
            if (e == 0) throw ParseError("zero exponent is not allowed", i);
            return pow(a, e);
        }
        return a;
    }

    ExprPtr term() {
        ExprPtr e = factor();
        for (;;) {
            skipWs();
            if (eat('*')) e = mul2(e, factor());
            else if (eat('/')) e = div2(e, factor());
            else return e;
        }
    }

    ExprPtr expr() {
        skipWs();
        bool negHead = false;
        if (eat('-')) negHead = true;
        else eat('+');
        ExprPtr e = term();
        if (negHead) e = neg(e);
        for (;;) {
            skipWs();
            if (eat('+')) e = add2(e, term());
            else if (eat('-')) e = sub2(e, term());
            else return e;
        }
    }
};

} // namespace

ExprPtr parse(const std::string& text, int* tagCounter) {
    Parser p(text, tagCounter);
    ExprPtr e = p.expr();
    p.skipWs();
    if (p.i != text.size()) throw ParseError("trailing input", p.i);
    return e;
}

Rat parseRational(const std::string& text) {
    std::string t;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    if (t.empty()) throw ParseError("empty number", 0);
    auto slash = t.find('/');
    if (slash != std::string::npos) {
        Rat r(mpz_class(t.substr(0, slash)), mpz_class(t.substr(slash + 1)));
        r.canonicalize();
        return r;
    }
    auto dot = t.find('.');
    if (dot != std::string::npos) {
        std::string ip = t.substr(0, dot), fp = t.substr(dot + 1);
        if (ip.empty() || ip == "-" || ip == "+") ip += "0";
        mpz_class den(1);
        for (size_t k = 0; k < fp.size(); k++) den *= 10;
        mpz_class whole(ip);
        mpz_class frac = fp.empty() ? mpz_class(0) : mpz_class(fp);
        bool negSign = !t.empty() && t[0] == '-';
        Rat r = Rat(whole) + (negSign ? -Rat(frac, den) : Rat(frac, den));
        r.canonicalize();
        return r;
    }
    return Rat(mpz_class(t));
}

} // namespace oscint
