#include "series.hpp"

#include <algorithm>
#include <queue>
#include <set>

#include "oracle.hpp"

namespace oscint {

// ---------------------------------------------------------------------------
// Stream
// ---------------------------------------------------------------------------

Stream Stream::fromGen(Gen g) {
    Stream s;
    s.st_->done = false;
    s.st_->gen = std::move(g);
    return s;
}

Stream Stream::singleton(Rat r, ExprPtr c) {
    Stream s;
    s.st_->memo.push_back(Term{std::move(r), std::move(c)});
    s.st_->done = true;
    return s;
}

Stream Stream::emptyStream() { return Stream(); }

std::optional<Term> Stream::at(size_t i, Session& S) const {
    if (i >= static_cast<size_t>(S.cfg.max_terms))
        throw BudgetExhausted("term demand beyond per-stream cap");
    while (st_->memo.size() <= i && !st_->done) {
        S.tick();
        auto t = st_->gen(S);
        if (!t) {
            st_->done = true;
            st_->gen = nullptr;
            break;
        }
        if (!st_->memo.empty() && t->exponent <= st_->memo.back().exponent)
            throw Error("internal: stream exponents not strictly increasing");
        st_->memo.push_back(std::move(*t));
    }
    if (i < st_->memo.size()) return st_->memo[i];
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

void Session::tick(long amount) {
    work += amount;
    if (work > cfg.work_budget) throw BudgetExhausted("work counter");
}

ExprPtr elemLogExpr(const ScaleElem& el) {
    if (el.kind == ElemKind::IterLog) return logChain(el.k + 1);
    return el.L;
}

namespace {

// gamma0 comparison of two iterated-log chains: deeper is smaller
Cmp0 cmpChainChain(int a, int b) {
    if (a == b) return Cmp0::Equal;
    return a < b ? Cmp0::Greater : Cmp0::Less;
}

// gamma0(logChain(d)) vs gamma0(L) for an exp-element log L, decided in a
// scratch session so chain bookkeeping here cannot recurse into this scale.
Cmp0 cmpChainVsExpL(int d, const ExprPtr& L, const Config& cfg);

} // namespace

int Session::ensureIterLog(int k) {
    for (int j = 0; j <= k; j++) {
        if (scale.findIterLog(j)) continue;
        ScaleElem el;
        el.id = scale.nextId++;
        el.kind = ElemKind::IterLog;
        el.k = j;
        el.L = logChain(j + 1);
        el.expr = pow(logChain(j), Rat(-1));
        // position: gamma0 of L increasing along the scale
        size_t pos = 0;
        for (; pos < scale.elems.size(); pos++) {
            const ScaleElem& ex = scale.elems[pos];
            Cmp0 c;
            if (ex.kind == ElemKind::IterLog) {
                c = cmpChainChain(j + 1, ex.k + 1);
            } else {
                c = cmpChainVsExpL(j + 1, ex.L, cfg);
            }
            if (c == Cmp0::Equal) throw Error("internal: duplicate scale element");
            if (c == Cmp0::Less) break; // new element slower: insert here
        }
        scale.elems.insert(scale.elems.begin() + static_cast<long>(pos), el);
    }
    return *scale.findIterLog(k);
}

int Session::insertExpElem(const ExprPtr& L) {
    ScaleElem el;
    el.id = scale.nextId++;
    el.kind = ElemKind::ExpElem;
    el.L = L;
    el.expr = exp_(neg(L));
    size_t pos = 0;
    for (; pos < scale.elems.size(); pos++) {
        const ScaleElem& ex = scale.elems[pos];
        Cmp0 c;
        if (ex.kind == ElemKind::IterLog) {
            Cmp0 rev = cmpChainVsExpL(ex.k + 1, L, cfg);
            c = rev == Cmp0::Less ? Cmp0::Greater : (rev == Cmp0::Greater ? Cmp0::Less : Cmp0::Equal);
        } else {
            // scratch comparison: scale bookkeeping for the ratio must not
            // leak into this scale
            Session T(cfg);
            T.scale = scale;
            Gamma0Cmp g = cmpGamma0(L, ex.L, T);
            c = g.c;
        }
        if (c == Cmp0::Equal) throw Unsupported("scale element log comparable with unit ratio: " + print(L));
        if (c == Cmp0::Less) break;
    }
    scale.elems.insert(scale.elems.begin() + static_cast<long>(pos), el);
    return el.id;
}

// ---------------------------------------------------------------------------
// level ranks (dominant scale content)
// ---------------------------------------------------------------------------

namespace {

struct Decomp {
    std::vector<std::pair<int, Rat>> mono; // elem id -> exponent of L (exp(arg) = prod t^-q)
    ExprPtr rest;                          // bounded remainder of the exp argument
};

Decomp decomposeExp(const ExprPtr& w, Session& S, bool allowInsert);

int dominantElem(const ExprPtr& e, Session& S); // elem id or -1

int dominantUncached(const ExprPtr& e, Session& S) {
    switch (e->k) {
        case K::Num:
        case K::Named: return -1;
        case K::Var: return S.ensureIterLog(0);
        case K::Log: {
            if (auto k = matchLogChain(e)) return S.ensureIterLog(*k);
            return dominantElem(e->ch[0], S);
        }
        case K::Exp: {
            Decomp d = decomposeExp(e->ch[0], S, false);
            int best = dominantElem(d.rest, S);
            int bestRank = best < 0 ? -1 : S.scale.rankOf(best);
            for (auto& [id, q] : d.mono) {
                (void)q;
                int r = S.scale.rankOf(id);
                if (r > bestRank) {
                    bestRank = r;
                    best = id;
                }
            }
            return best;
        }
        default: {
            int best = -1, bestRank = -1;
            for (auto& c : e->ch) {
                int id = dominantElem(c, S);
                if (id < 0) continue;
                int r = S.scale.rankOf(id);
                if (r > bestRank) {
                    bestRank = r;
                    best = id;
                }
            }
            return best;
        }
    }
}

int dominantElem(const ExprPtr& e, Session& S) {
    auto it = S.domCache.find(e.get());
    if (it != S.domCache.end()) return it->second;
    int id = dominantUncached(e, S);
    S.domCache.emplace(e.get(), id);
    return id;
}

} // namespace

int levelRank(const ExprPtr& e, Session& S) {
    int id = dominantElem(e, S);
    return id < 0 ? -1 : S.scale.rankOf(id);
}

// ---------------------------------------------------------------------------
// stream combinators
// ---------------------------------------------------------------------------

namespace {

bool coeffIsZero(const ExprPtr& c, Session& S) { return isZeroFunc(c, S); }

Stream sAdd(std::vector<Stream> parts) {
    if (parts.empty()) return Stream::emptyStream();
    if (parts.size() == 1) return parts[0];
    auto idx = std::make_shared<std::vector<size_t>>(parts.size(), 0);
    auto ps = std::make_shared<std::vector<Stream>>(std::move(parts));
    return Stream::fromGen([idx, ps](Session& S) -> std::optional<Term> {
        for (;;) {
            bool any = false;
            Rat best;
            for (size_t j = 0; j < ps->size(); j++) {
                auto t = (*ps)[j].at((*idx)[j], S);
                if (!t) continue;
                if (!any || t->exponent < best) {
                    best = t->exponent;
                    any = true;
                }
            }
            if (!any) return std::nullopt;
            std::vector<ExprPtr> coeffs;
            for (size_t j = 0; j < ps->size(); j++) {
                auto t = (*ps)[j].at((*idx)[j], S);
                if (t && t->exponent == best) {
                    coeffs.push_back(t->coeff);
                    (*idx)[j]++;
                }
            }
            ExprPtr c = coeffs.size() == 1 ? coeffs[0] : add(std::move(coeffs));
            if (!coeffIsZero(c, S)) return Term{best, c};
        }
    });
}

Stream sMulExpr(const ExprPtr& f, Stream s) {
    return Stream::fromGen([f, s, i = std::make_shared<size_t>(0)](Session& S) -> std::optional<Term> {
        auto t = s.at((*i)++, S);
        if (!t) return std::nullopt;
        return Term{t->exponent, mul2(f, t->coeff)};
    });
}

Stream sShift(const Rat& dr, Stream s) {
    if (dr == 0) return s;
    return Stream::fromGen([dr, s, i = std::make_shared<size_t>(0)](Session& S) -> std::optional<Term> {
        auto t = s.at((*i)++, S);
        if (!t) return std::nullopt;
        return Term{t->exponent + dr, t->coeff};
    });
}

struct RatCmpGr {
    bool operator()(const std::tuple<Rat, size_t, size_t>& a, const std::tuple<Rat, size_t, size_t>& b) const {
        return std::get<0>(a) > std::get<0>(b); // min-heap
    }
};

Stream sMul(Stream a, Stream b) {
    struct St {
        std::priority_queue<std::tuple<Rat, size_t, size_t>, std::vector<std::tuple<Rat, size_t, size_t>>, RatCmpGr> heap;
        std::set<std::pair<size_t, size_t>> seen;
        std::vector<std::pair<size_t, size_t>> deferred;
        bool init = false;
    };
    auto st = std::make_shared<St>();
    return Stream::fromGen([a, b, st](Session& S) -> std::optional<Term> {
        // successor demands are deferred to the next call, so producing term
        // n never forces operand terms beyond what term n+1 could need
        auto push = [&](size_t i, size_t j) {
            if (!st->seen.insert({i, j}).second) return;
            auto ta = a.at(i, S);
            auto tb = b.at(j, S);
            if (!ta || !tb) return;
            st->heap.push({ta->exponent + tb->exponent, i, j});
        };
        if (!st->init) {
            st->init = true;
            push(0, 0);
        }
        for (;;) {
            for (auto& [i, j] : st->deferred) push(i, j);
            st->deferred.clear();
            if (st->heap.empty()) return std::nullopt;
            Rat e = std::get<0>(st->heap.top());
            std::vector<ExprPtr> coeffs;
            while (!st->heap.empty() && std::get<0>(st->heap.top()) == e) {
                auto [ex, i, j] = st->heap.top();
                st->heap.pop();
                coeffs.push_back(mul2(a.at(i, S)->coeff, b.at(j, S)->coeff));
                st->deferred.push_back({i + 1, j});
                st->deferred.push_back({i, j + 1});
            }
            ExprPtr c = coeffs.size() == 1 ? coeffs[0] : add(std::move(coeffs));
            if (!coeffIsZero(c, S)) return Term{e, c};
        }
    });
}

Stream sMulMany(std::vector<Stream> parts) {
    if (parts.empty()) return Stream::singleton(Rat(0), num(1));
    Stream r = parts[0];
    for (size_t i = 1; i < parts.size(); i++) r = sMul(r, parts[i]);
    return r;
}

/// Sum_k a_k * u^k for a strictly-positive-exponent stream u. a(k) rational;
/// kMax < 0 means unbounded.
Stream sGraded(Stream u, std::function<Rat(long)> a, long kMax) {
    struct St {
        std::vector<Stream> upow; // upow[k] = u^k, upow[0] unused
        std::priority_queue<std::tuple<Rat, size_t, size_t>, std::vector<std::tuple<Rat, size_t, size_t>>, RatCmpGr> heap;
        std::vector<std::pair<size_t, size_t>> deferred;
        long kNext = 1;
        bool init = false;
        Rat eps0;
        bool uEmpty = false;
        bool constEmitted = false;
    };
    auto st = std::make_shared<St>();
    return Stream::fromGen([u, a, kMax, st](Session& S) -> std::optional<Term> {
        if (!st->init) {
            st->init = true;
            auto t0 = u.at(0, S);
            if (!t0) {
                st->uEmpty = true;
            } else {
                if (t0->exponent <= 0) throw Error("internal: graded stream needs positive exponents");
                st->eps0 = t0->exponent;
                st->upow.push_back(u); // placeholder index 0
                st->upow.push_back(u);
            }
        }
        if (!st->constEmitted) {
            st->constEmitted = true;
            Rat a0 = a(0);
            if (a0 != 0) return Term{Rat(0), num(a0)};
        }
        if (st->uEmpty) return std::nullopt;
        auto activate = [&](const Rat* bound) {
            while ((kMax < 0 || st->kNext <= kMax)) {
                Rat lead = st->eps0 * st->kNext;
                if (bound && lead > *bound) break;
                long k = st->kNext++;
                if (a(k) == 0) continue;
                while (static_cast<long>(st->upow.size()) <= k)
                    st->upow.push_back(sMul(st->upow.back(), u));
                auto t = st->upow[static_cast<size_t>(k)].at(0, S);
                if (t) st->heap.push({t->exponent, static_cast<size_t>(k), 0});
                break; // activate one at a time; loop re-enters as needed
            }
        };
        for (;;) {
            for (auto& [k, idx] : st->deferred) {
                auto nxt = st->upow[k].at(idx, S);
                if (nxt) st->heap.push({nxt->exponent, k, idx});
            }
            st->deferred.clear();
            // make sure every k whose series could start at or before the
            // current frontier is active
            for (;;) {
                if (st->heap.empty()) {
                    if (kMax >= 0 && st->kNext > kMax) return std::nullopt;
                    activate(nullptr);
                    if (st->heap.empty() && (kMax >= 0 && st->kNext > kMax)) return std::nullopt;
                    if (st->heap.empty()) continue;
                }
                Rat top = std::get<0>(st->heap.top());
                if ((kMax < 0 || st->kNext <= kMax) && st->eps0 * st->kNext <= top) {
                    activate(&top);
                } else {
                    break;
                }
            }
            Rat e = std::get<0>(st->heap.top());
            std::vector<ExprPtr> coeffs;
            while (!st->heap.empty() && std::get<0>(st->heap.top()) == e) {
                auto [ex, k, idx] = st->heap.top();
                st->heap.pop();
                coeffs.push_back(mulr(a(static_cast<long>(k)), st->upow[k].at(idx, S)->coeff));
                st->deferred.push_back({k, idx + 1});
            }
            ExprPtr c = coeffs.size() == 1 ? coeffs[0] : add(std::move(coeffs));
            if (!coeffIsZero(c, S)) return Term{e, c};
        }
    });
}

Rat binomialCoeff(const Rat& q, long k) {
    Rat r(1);
    for (long j = 0; j < k; j++) r *= (q - j) / Rat(j + 1);
    return r;
}

Stream sPowQ(Stream u, const Rat& q, Session& S0) {
    auto t0 = u.at(0, S0);
    if (!t0) {
        if (sgn(q) > 0) return Stream::emptyStream();
        throw DomainError("inverse of the zero function");
    }
    Rat r0 = t0->exponent;
    ExprPtr c0 = t0->coeff;
    if (q.get_den() != 1 && mpz_even_p(q.get_den().get_mpz_t())) {
        int s = containsVar(c0) ? funcSignOrThrow(c0, S0) : constSignOrThrow(c0, S0.cfg);
        if (s < 0) throw DomainError("even root of an eventually negative function");
    }
    ExprPtr head = pow(c0, q);
    ExprPtr c0inv = pow(c0, Rat(-1));
    Stream rel = Stream::fromGen([u, r0, c0inv, i = std::make_shared<size_t>(1)](Session& S) -> std::optional<Term> {
        auto t = u.at((*i)++, S);
        if (!t) return std::nullopt;
        return Term{t->exponent - r0, mul2(t->coeff, c0inv)};
    });
    long kMax = (q.get_den() == 1 && sgn(q) > 0 && q.get_num().fits_slong_p()) ? q.get_num().get_si() : -1;
    Stream bin = sGraded(rel, [q](long k) { return binomialCoeff(q, k); }, kMax);
    return sShift(q * r0, sMulExpr(head, bin));
}

Stream sTaylorExp(Stream u) {
    auto fact = std::make_shared<std::vector<Rat>>(std::vector<Rat>{Rat(1)});
    return sGraded(std::move(u), [fact](long k) {
        while (static_cast<long>(fact->size()) <= k) fact->push_back(fact->back() * Rat(static_cast<long>(fact->size())));
        return Rat(1) / (*fact)[static_cast<size_t>(k)];
    }, -1);
}

Stream sTaylorLog1p(Stream u) {
    return sGraded(std::move(u), [](long k) {
        if (k == 0) return Rat(0);
        Rat r = Rat(1) / Rat(k);
        return k % 2 == 0 ? -r : r;
    }, -1);
}

Rat taylorTrig(long k, bool isSin) {
    if (isSin ? (k % 2 == 0) : (k % 2 == 1)) return Rat(0);
    static std::vector<Rat> fact{Rat(1)};
    while (static_cast<long>(fact.size()) <= k) fact.push_back(fact.back() * Rat(static_cast<long>(fact.size())));
    Rat r = Rat(1) / fact[static_cast<size_t>(k)];
    return (k / 2) % 2 == 0 ? r : -r;
}

} // namespace

// ---------------------------------------------------------------------------
// divergent-exponential decomposition
// ---------------------------------------------------------------------------

namespace {

void collectDivergentPieces(const ExprPtr& e, Session& S, std::vector<ExprPtr>& out) {
    int lr = levelRank(e, S);
    if (lr < 0) return;
    Stream s = expandIn(e, lr, S);
    const ScaleElem& el = S.scale.byRank(lr);
    for (size_t i = 0;; i++) {
        auto t = s.at(i, S);
        if (!t) return;
        if (t->exponent < 0) {
            ExprPtr tpow = el.kind == ElemKind::IterLog ? pow(logChain(el.k), -t->exponent)
                                                        : exp_(mulr(-t->exponent, el.L));
            out.push_back(mul2(t->coeff, tpow));
        } else if (t->exponent == 0) {
            collectDivergentPieces(t->coeff, S, out);
            return; // exponents increase; nothing divergent beyond 0
        } else {
            return;
        }
    }
}

Decomp decomposeExpUncached(const ExprPtr& w, Session& S, bool allowInsert) {
    Decomp out;
    std::vector<ExprPtr> pieces;
    collectDivergentPieces(w, S, pieces);
    if (pieces.empty()) {
        out.rest = w;
        return out;
    }
    ExprPtr D = add(std::vector<ExprPtr>(pieces));
    for (int attempt = 0; attempt < 64; attempt++) {
        out.mono.clear();
        ExprPtr Dr = D;
        bool restart = false;
        for (int r = S.scale.size() - 1; r >= 0 && !restart; r--) {
            if (isZeroFunc(Dr, S)) break;
            const ScaleElem el = S.scale.byRank(r);
            ExprPtr L = elemLogExpr(el);
            Session T(S.cfg);
            T.scale = S.scale;
            auto lead = leadingOpt(scaleNormalize(normalize(div2(Dr, L)), T), T);
            if (!lead) break;
            if (lead->mono.trivial()) {
                if (lead->coeff->k != K::Num)
                    throw Unsupported("non-rational ratio between exponential scales: " + print(Dr));
                Rat q = lead->coeff->num;
                out.mono.push_back({el.id, q});
                Dr = normalize(sub2(Dr, mulr(q, L)));
            } else {
                // fastest sign of the ratio monomial: >0 means ratio -> 0
                int fastRank = -1;
                Rat fastExp;
                for (auto& [id, qq] : lead->mono.e) {
                    int rr = T.scale.rankOf(id);
                    if (rr > fastRank) { fastRank = rr; fastExp = qq; }
                }
                if (sgn(fastExp) > 0) continue; // Dr slower than this L; try next
                // Dr grows faster than L: need a new scale element
                if (!allowInsert) throw Error("internal: expression not scale-normalized: " + print(w));
                int sg = funcSignOrThrow(Dr, S);
                ExprPtr Lnew = sg > 0 ? Dr : neg(Dr);
                S.insertExpElem(Lnew);
                restart = true;
            }
        }
        if (restart) continue;
        if (!isZeroFunc(Dr, S)) {
            if (!allowInsert) throw Error("internal: expression not scale-normalized: " + print(w));
            int sg = funcSignOrThrow(Dr, S);
            S.insertExpElem(sg > 0 ? Dr : neg(Dr));
            continue;
        }
        std::vector<ExprPtr> strip;
        for (auto& [id, q] : out.mono) strip.push_back(mulr(-q, elemLogExpr(S.scale.byId(id))));
        strip.push_back(w);
        out.rest = normalize(add(std::move(strip)));
        return out;
    }
    throw Error("internal: exponential decomposition did not settle");
}

Decomp decomposeExp(const ExprPtr& w, Session& S, bool allowInsert) {
    auto it = S.expDecomp.find(w.get());
    if (it != S.expDecomp.end()) return Decomp{it->second.first, it->second.second};
    Decomp d = decomposeExpUncached(w, S, allowInsert);
    S.expDecomp.emplace(w.get(), std::make_pair(d.mono, d.rest));
    return d;
}

Cmp0 cmpChainVsExpL(int d, const ExprPtr& L, const Config& cfg) {
    Session scratch(cfg);
    ExprPtr a = logChain(d);
    ExprPtr Ln = scaleNormalize(normalize(L), scratch);
    Gamma0Cmp g = cmpGamma0(a, Ln, scratch);
    return g.c;
}

} // namespace

// ---------------------------------------------------------------------------
// expandIn
// ---------------------------------------------------------------------------

namespace {

Stream expandInUncached(const ExprPtr& e, int rank, Session& S) {
    if (e->isZero()) return Stream::emptyStream();
    int lr = levelRank(e, S);
    if (lr < rank) return Stream::singleton(Rat(0), e);
    if (lr > rank) throw Error("internal: expandIn below the expression level");
    const ScaleElem el = S.scale.byRank(rank);
    switch (e->k) {
        case K::Var:
            return Stream::singleton(Rat(-1), num(1)); // x = t^-1 for t = 1/x
        case K::Log: {
            if (matchLogChain(e)) return Stream::singleton(Rat(-1), num(1));
            ExprPtr u = e->ch[0];
            Stream us = expandIn(u, rank, S);
            return Stream::fromGen([us, el, inner = std::make_shared<Stream>(), i = std::make_shared<size_t>(0),
                                    started = std::make_shared<bool>(false)](Session& S2) -> std::optional<Term> {
                if (!*started) {
                    *started = true;
                    auto t0 = us.at(0, S2);
                    if (!t0) throw DomainError("log of the zero function");
                    Rat r0 = t0->exponent;
                    ExprPtr c0 = t0->coeff;
                    int sg = containsVar(c0) ? funcSignOrThrow(c0, S2) : constSignOrThrow(c0, S2.cfg);
                    if (sg < 0) throw DomainError("log of an eventually negative function: " + print(c0));
                    ExprPtr headParts = num(0);
                    if (r0 != 0) headParts = mulr(-r0, elemLogExpr(el));
                    if (!c0->isOne()) headParts = add2(headParts, log_(c0));
                    ExprPtr c0inv = pow(c0, Rat(-1));
                    Stream rel = Stream::fromGen([us, r0, c0inv, j = std::make_shared<size_t>(1)](Session& S3) -> std::optional<Term> {
                        auto t = us.at((*j)++, S3);
                        if (!t) return std::nullopt;
                        return Term{t->exponent - r0, mul2(t->coeff, c0inv)};
                    });
                    std::vector<Stream> parts;
                    if (!headParts->isZero()) parts.push_back(Stream::singleton(Rat(0), headParts));
                    parts.push_back(sTaylorLog1p(rel));
                    *inner = sAdd(std::move(parts));
                }
                return inner->at((*i)++, S2);
            });
        }
        case K::Exp: {
            Decomp d = decomposeExp(e->ch[0], S, false);
            Rat qThis(0);
            Monomial slower;
            for (auto& [id, q] : d.mono) {
                int r = S.scale.rankOf(id);
                if (r == rank) qThis += q;
                else if (r < rank) slower.e[id] += -q; // exp(qL) = t^-q
                else throw Error("internal: exp content above expansion level");
            }
            for (auto it2 = slower.e.begin(); it2 != slower.e.end();)
                it2 = it2->second == 0 ? slower.e.erase(it2) : std::next(it2);
            ExprPtr slowFactor = monomialExpr(slower, S);
            int lrRest = levelRank(d.rest, S);
            Stream core;
            if (lrRest < rank) {
                core = Stream::singleton(Rat(0), normalize(mul2(slowFactor, exp_(d.rest))));
            } else {
                Stream rs = expandIn(d.rest, rank, S);
                auto pre = std::make_shared<Stream>();
                auto started = std::make_shared<bool>(false);
                auto i = std::make_shared<size_t>(0);
                core = Stream::fromGen([rs, slowFactor, pre, started, i](Session& S2) -> std::optional<Term> {
                    if (!*started) {
                        *started = true;
                        auto t0 = rs.at(0, S2);
                        if (t0 && t0->exponent < 0)
                            throw Error("internal: divergent exponential escaped normalization");
                        ExprPtr headF = slowFactor;
                        size_t tailFrom = 0;
                        if (t0 && t0->exponent == 0) {
                            headF = normalize(mul2(slowFactor, exp_(t0->coeff)));
                            tailFrom = 1;
                        }
                        Stream tail = Stream::fromGen([rs, tailFrom, j = std::make_shared<size_t>(tailFrom)](Session& S3) -> std::optional<Term> {
                            auto t = rs.at((*j)++, S3);
                            if (!t) return std::nullopt;
                            return Term{t->exponent, t->coeff};
                        });
                        *pre = sMulExpr(headF, sTaylorExp(tail));
                    }
                    return pre->at((*i)++, S2);
                });
            }
            return sShift(-qThis, core);
        }
        case K::Sum: {
            std::vector<Stream> parts;
            for (auto& c : e->ch) parts.push_back(expandIn(c, rank, S));
            return sAdd(std::move(parts));
        }
        case K::Prod: {
            std::vector<Stream> parts;
            for (auto& c : e->ch) parts.push_back(expandIn(c, rank, S));
            return sMulMany(std::move(parts));
        }
        case K::Pow: {
            const ExprPtr& u = e->ch[0];
            if (u->k == K::Var || matchLogChain(u))
                return Stream::singleton(-e->num, num(1));
            return sPowQ(expandIn(u, rank, S), e->num, S);
        }
        case K::Sin:
        case K::Cos: {
            bool isSin = e->k == K::Sin;
            Stream us = expandIn(e->ch[0], rank, S);
            auto inner = std::make_shared<Stream>();
            auto started = std::make_shared<bool>(false);
            auto i = std::make_shared<size_t>(0);
            return Stream::fromGen([us, isSin, inner, started, i](Session& S2) -> std::optional<Term> {
                if (!*started) {
                    *started = true;
                    auto t0 = us.at(0, S2);
                    if (t0 && t0->exponent < 0)
                        throw Unsupported("trig of an unbounded argument in base-field expansion");
                    ExprPtr c0 = num(0);
                    size_t tailFrom = 0;
                    if (t0 && t0->exponent == 0) {
                        c0 = t0->coeff;
                        tailFrom = 1;
                    }
                    Stream tail = Stream::fromGen([us, j = std::make_shared<size_t>(tailFrom)](Session& S3) -> std::optional<Term> {
                        auto t = us.at((*j)++, S3);
                        if (!t) return std::nullopt;
                        return Term{t->exponent, t->coeff};
                    });
                    Stream tsin = sGraded(tail, [](long k) { return taylorTrig(k, true); }, -1);
                    Stream tcos = sGraded(tail, [](long k) { return taylorTrig(k, false); }, -1);
                    std::vector<Stream> parts;
                    ExprPtr sc = sin_(c0), cc = cos_(c0);
                    if (isSin) {
                        if (!sc->isZero()) parts.push_back(sMulExpr(sc, tcos));
                        if (!cc->isZero()) parts.push_back(sMulExpr(cc, tsin));
                    } else {
                        if (!cc->isZero()) parts.push_back(sMulExpr(cc, tcos));
                        if (!sc->isZero()) parts.push_back(sMulExpr(neg(sc), tsin));
                    }
                    *inner = sAdd(std::move(parts));
                }
                return inner->at((*i)++, S2);
            });
        }
        case K::OscInt:
            throw DomainError("unexpanded integral inside a base-field series");
        default:
            throw Error("internal: unexpected node in expandIn");
    }
}

} // namespace

Stream expandIn(const ExprPtr& e, int rank, Session& S) {
    Session::StreamKey key{e.get(), S.scale.byRank(rank).id};
    auto it = S.streamCache.find(key);
    if (it != S.streamCache.end()) return it->second;
    Stream s = expandInUncached(e, rank, S);
    S.streamCache.emplace(key, s);
    return s;
}

// ---------------------------------------------------------------------------
// scale normalization (the ensure-scale pass)
// ---------------------------------------------------------------------------

ExprPtr scaleNormalize(const ExprPtr& e, Session& S) {
    auto it = S.normCache.find(e.get());
    if (it != S.normCache.end()) return it->second;
    ExprPtr out;
    switch (e->k) {
        case K::Num:
        case K::Named:
        case K::Var: out = e; break;
        case K::Log: {
            if (auto k = matchLogChain(e)) {
                S.ensureIterLog(*k);
                out = e;
                break;
            }
            ExprPtr u = scaleNormalize(e->ch[0], S);
            out = log_(u);
            if (out->k == K::Log && !matchLogChain(out)) {
                // register any divergent content inside so expansion can run
                (void)levelRank(out->ch[0], S);
            } else if (out.get() != e.get()) {
                out = scaleNormalize(out, S);
            }
            break;
        }
        case K::Exp: {
            ExprPtr u = scaleNormalize(e->ch[0], S);
            ExprPtr rebuilt = exp_(u);
            if (rebuilt->k != K::Exp) {
                out = scaleNormalize(rebuilt, S);
                break;
            }
            (void)decomposeExp(rebuilt->ch[0], S, true); // grow the scale as needed
            out = rebuilt;
            break;
        }
        default: {
            if (e->ch.empty()) {
                out = e;
                break;
            }
            std::vector<ExprPtr> kids;
            kids.reserve(e->ch.size());
            bool changed = false;
            for (auto& c : e->ch) {
                kids.push_back(scaleNormalize(c, S));
                if (kids.back().get() != c.get()) changed = true;
            }
            ExprPtr rebuilt = e;
            if (changed) {
                switch (e->k) {
                    case K::Sum: rebuilt = add(std::move(kids)); break;
                    case K::Prod: rebuilt = mul(std::move(kids)); break;
                    case K::Pow: rebuilt = pow(kids[0], e->num); break;
                    case K::Sin: rebuilt = sin_(kids[0]); break;
                    case K::Cos: rebuilt = cos_(kids[0]); break;
                    case K::OscInt: rebuilt = oscint(kids[0], kids[1], e->okind, e->otag); break;
                    default: break;
                }
                if (rebuilt.get() != e.get()) {
                    out = scaleNormalize(rebuilt, S);
                    break;
                }
            }
            out = rebuilt;
            break;
        }
    }
    S.normCache.emplace(e.get(), out);
    return out;
}

// ---------------------------------------------------------------------------
// leading terms, comparisons, limits
// ---------------------------------------------------------------------------

std::optional<Leading> leadingOpt(const ExprPtr& eIn, Session& S) {
    if (eIn->isZero()) return std::nullopt;
    // quotients: lead(n/d) = lead(n)/lead(d), no inverse series needed
    auto [n, d] = clearDenominators(eIn);
    if (!d->isOne()) {
        auto ln = leadingOpt(scaleNormalize(n, S), S);
        if (!ln) return std::nullopt;
        auto ld = leadingOpt(scaleNormalize(d, S), S);
        if (!ld) throw DomainError("division by the zero function");
        return Leading{normalize(div2(ln->coeff, ld->coeff)), ln->mono.divM(ld->mono)};
    }
    int lr = levelRank(eIn, S);
    if (lr < 0) return Leading{eIn, Monomial{}};
    Stream s = expandIn(eIn, lr, S);
    auto t = s.at(0, S);
    if (!t) return std::nullopt;
    auto sub = leadingOpt(t->coeff, S);
    if (!sub) return std::nullopt;
    Monomial M = sub->mono;
    if (t->exponent != 0) M.e[S.scale.byRank(lr).id] = t->exponent;
    return Leading{sub->coeff, M};
}

Leading leading(const ExprPtr& e, Session& S) {
    auto l = leadingOpt(e, S);
    if (!l) throw DomainError("leading term of the zero function");
    return *l;
}

int cmpMonomial(const Monomial& a, const Monomial& b, Session& S) {
    Monomial d = a.divM(b);
    int fastRank = -1;
    Rat fastExp;
    for (auto& [id, q] : d.e) {
        int r = S.scale.rankOf(id);
        if (r > fastRank) {
            fastRank = r;
            fastExp = q;
        }
    }
    if (fastRank < 0) return 0;
    return sgn(fastExp) < 0 ? 1 : -1; // negative power of a fast element grows
}

Gamma0Cmp cmpGamma0(const ExprPtr& f, const ExprPtr& g, Session& S) {
    Leading lf = leading(scaleNormalize(normalize(f), S), S);
    Leading lg = leading(scaleNormalize(normalize(g), S), S);
    int c = cmpMonomial(lf.mono, lg.mono, S);
    if (c > 0) return {Cmp0::Greater, nullptr};
    if (c < 0) return {Cmp0::Less, nullptr};
    return {Cmp0::Equal, normalize(div2(lf.coeff, lg.coeff))};
}

namespace {
ExprPtr logMonomialExpr(const Monomial& m, Session& S) {
    std::vector<ExprPtr> parts;
    for (auto& [id, q] : m.e)
        parts.push_back(mulr(-q, elemLogExpr(S.scale.byId(id))));
    return add(std::move(parts));
}
} // namespace

CmpG cmpGamma(const ExprPtr& f, const ExprPtr& g, Session& S) {
    Leading lf = leading(scaleNormalize(normalize(f), S), S);
    Leading lg = leading(scaleNormalize(normalize(g), S), S);
    bool bf = lf.mono.trivial(), bg = lg.mono.trivial();
    if (bf && bg) return CmpG::Equal;
    if (bf) return CmpG::Less;
    if (bg) return CmpG::Greater;
    // compare the log monomials in a scratch session: the deeper logs this
    // needs are comparison bookkeeping, not scale content of f or g
    Session T(S.cfg);
    T.scale = S.scale;
    Gamma0Cmp c = cmpGamma0(logMonomialExpr(lf.mono, T), logMonomialExpr(lg.mono, T), T);
    switch (c.c) {
        case Cmp0::Greater: return CmpG::Greater;
        case Cmp0::Less: return CmpG::Less;
        default: return CmpG::Equal;
    }
}

bool isBowtie(const ExprPtr& f, const ExprPtr& g, Session& S) {
    Leading lf = leading(scaleNormalize(normalize(f), S), S);
    Leading lg = leading(scaleNormalize(normalize(g), S), S);
    bool bf = lf.mono.trivial(), bg = lg.mono.trivial();
    if (bf && bg) return true;
    if (bf || bg) return false;
    if (cmpGamma(f, g, S) != CmpG::Equal) return false;
    ExprPtr ratio = normalize(div2(f, g));
    Leading lr = leading(scaleNormalize(ratio, S), S);
    if (lr.mono.trivial()) return true;
    return cmpGamma(ratio, f, S) == CmpG::Less;
}

LimitVal limitAtInfinity(const ExprPtr& eIn, Session& S) {
    ExprPtr e = scaleNormalize(normalize(eIn), S);
    auto l = leadingOpt(e, S);
    if (!l) return {LimitVal::Finite, num(0)};
    if (l->mono.trivial()) return {LimitVal::Finite, l->coeff};
    int fastRank = -1;
    Rat fastExp;
    for (auto& [id, q] : l->mono.e) {
        int r = S.scale.rankOf(id);
        if (r > fastRank) {
            fastRank = r;
            fastExp = q;
        }
    }
    if (sgn(fastExp) > 0) return {LimitVal::Finite, num(0)};
    int sg = constSignOrThrow(l->coeff, S.cfg);
    return {sg > 0 ? LimitVal::PosInf : LimitVal::NegInf, nullptr};
}

// ---------------------------------------------------------------------------
// shadows / ghosts
// ---------------------------------------------------------------------------

ExprPtr shadowExpr(const ExprPtr& eIn, int elemId, Session& S) {
    ExprPtr cur = scaleNormalize(normalize(eIn), S);
    int target = S.scale.rankOf(elemId);
    for (;;) {
        if (cur->isZero()) return num(0);
        int lr = levelRank(cur, S);
        if (lr < target) return cur;
        Stream s = expandIn(cur, lr, S);
        auto t0 = s.at(0, S);
        if (!t0) return num(0);
        if (t0->exponent < 0)
            throw DomainError("shadow undefined: function grows at scale element " +
                              S.scale.byRank(lr).name());
        if (t0->exponent > 0) return num(0); // everything lies in the ideal
        if (lr == target) return t0->coeff;
        cur = t0->coeff;
    }
}

ExprPtr ghostExpr(const ExprPtr& e, int elemId, Session& S) {
    return normalize(sub2(e, shadowExpr(e, elemId, S)));
}

RiClass classifyRi(const ExprPtr& eIn, int elemId, Session& S) {
    ExprPtr e = scaleNormalize(normalize(eIn), S);
    auto l = leadingOpt(e, S);
    if (!l) return RiClass::InI; // zero function
    int target = S.scale.rankOf(elemId);
    int fastRank = -1;
    Rat fastExp;
    for (auto& [id, q] : l->mono.e) {
        int r = S.scale.rankOf(id);
        if (r >= target && r > fastRank) {
            fastRank = r;
            fastExp = q;
        }
    }
    if (fastRank < 0) return RiClass::InRNotI;
    return sgn(fastExp) > 0 ? RiClass::InI : RiClass::OutsideR;
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

ExprPtr monomialExpr(const Monomial& m, Session& S) {
    std::vector<ExprPtr> parts;
    for (auto& [id, q] : m.e) {
        const ScaleElem& el = S.scale.byId(id);
        if (el.kind == ElemKind::IterLog)
            parts.push_back(pow(logChain(el.k), -q));
        else
            parts.push_back(exp_(mulr(-q, el.L)));
    }
    return mul(std::move(parts));
}

ExprPtr monomialLogDeriv(const Monomial& m, Session& S) {
    std::vector<ExprPtr> parts;
    for (auto& [id, q] : m.e) {
        const ScaleElem& el = S.scale.byId(id);
        // d/dx log(t^q) = -q * L'
        parts.push_back(mulr(-q, differentiate(elemLogExpr(el))));
    }
    return add(std::move(parts));
}

std::string monomialStr(const Monomial& m, Session& S) {
    if (m.trivial()) return "1";
    // slowest first for readability
    std::vector<std::pair<int, Rat>> items;
    for (auto& [id, q] : m.e) items.push_back({S.scale.rankOf(id), q});
    std::sort(items.begin(), items.end());
    std::string out;
    for (auto& [rank, q] : items) {
        const ScaleElem& el = S.scale.byRank(rank);
        ExprPtr base = el.kind == ElemKind::IterLog ? logChain(el.k) : el.expr;
        Rat ex = el.kind == ElemKind::IterLog ? -q : q;
        if (!out.empty()) out += "*";
        out += print(ex == 1 ? base : pow(base, ex));
    }
    return out;
}

} // namespace oscint
