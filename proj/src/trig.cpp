#include "trig.hpp"

#include <algorithm>

#include "oracle.hpp"

namespace oscint {

int TrigMon::totalDegree() const {
    int d = 0;
    for (auto& [g, sc] : f) {
        (void)g;
        d += sc.first + sc.second;
    }
    return d;
}

// ---------------------------------------------------------------------------
// normal-form arithmetic
// ---------------------------------------------------------------------------

namespace {

void addTermInto(std::map<TrigMon, std::vector<ExprPtr>>& acc, const TrigMon& sig, const ExprPtr& p) {
    acc[sig].push_back(p);
}

HGElem collect(std::map<TrigMon, std::vector<ExprPtr>>& acc, Session& S) {
    HGElem out;
    for (auto& [sig, ps] : acc) {
        ExprPtr p = ps.size() == 1 ? ps[0] : add(std::vector<ExprPtr>(ps));
        p = normalize(p);
        if (isZeroFunc(p, S)) continue;
        out.terms.push_back(HGTerm{p, sig});
    }
    return out;
}

// rewrites cosine powers >= 2 via cos^2 = 1 - sin^2
void reduceMon(const Rat& coeff, TrigMon m, std::vector<std::pair<Rat, TrigMon>>& out) {
    for (auto& [g, sc] : m.f) {
        if (sc.second >= 2) {
            int k = sc.second / 2;
            int rem = sc.second % 2;
            sc.second = rem;
            Rat binom(1);
            for (int j = 0; j <= k; j++) {
                TrigMon mj = m;
                auto& e = mj.f[g];
                e.first += 2 * j;
                Rat c = binom * (j % 2 == 0 ? Rat(1) : Rat(-1));
                reduceMon(coeff * c, mj, out);
                binom = binom * Rat(k - j) / Rat(j + 1);
            }
            return;
        }
    }
    for (auto it = m.f.begin(); it != m.f.end();)
        it = (it->second.first == 0 && it->second.second == 0) ? m.f.erase(it) : std::next(it);
    out.push_back({coeff, m});
}

std::vector<std::pair<Rat, TrigMon>> mulMon(const TrigMon& a, const TrigMon& b) {
    TrigMon m = a;
    for (auto& [g, sc] : b.f) {
        auto& e = m.f[g];
        e.first += sc.first;
        e.second += sc.second;
    }
    std::vector<std::pair<Rat, TrigMon>> out;
    reduceMon(Rat(1), m, out);
    return out;
}

} // namespace

HGElem hgConst(const ExprPtr& p) {
    HGElem out;
    if (!p->isZero()) out.terms.push_back(HGTerm{p, TrigMon{}});
    return out;
}

HGElem hgAdd(const HGElem& a, const HGElem& b, Session& S) {
    std::map<TrigMon, std::vector<ExprPtr>> acc;
    for (auto& t : a.terms) addTermInto(acc, t.sig, t.p);
    for (auto& t : b.terms) addTermInto(acc, t.sig, t.p);
    return collect(acc, S);
}

HGElem hgScale(const ExprPtr& f, const HGElem& a, Session& S) {
    if (f->isZero()) return HGElem{};
    HGElem out;
    for (auto& t : a.terms) {
        ExprPtr p = normalize(mul2(f, t.p));
        if (isZeroFunc(p, S)) continue;
        out.terms.push_back(HGTerm{p, t.sig});
    }
    return out;
}

HGElem hgNeg(const HGElem& a) {
    HGElem out;
    for (auto& t : a.terms) out.terms.push_back(HGTerm{neg(t.p), t.sig});
    return out;
}

HGElem hgMul(const HGElem& a, const HGElem& b, Session& S) {
    std::map<TrigMon, std::vector<ExprPtr>> acc;
    for (auto& ta : a.terms)
        for (auto& tb : b.terms) {
            ExprPtr p = mul2(ta.p, tb.p);
            for (auto& [c, m] : mulMon(ta.sig, tb.sig)) addTermInto(acc, m, mulr(c, p));
        }
    return collect(acc, S);
}

HGElem hgDiff(const HGElem& a, const HGCtx& ctx, Session& S) {
    std::map<TrigMon, std::vector<ExprPtr>> acc;
    for (auto& t : a.terms) {
        ExprPtr dp = differentiate(t.p);
        if (!dp->isZero()) addTermInto(acc, t.sig, dp);
        // each factor sin^a cos^b of generator i contributes
        // (a s^{a-1} c^{b+1} - b s^{a+1} c^{b-1}) g_i' times the other factors
        for (auto& [g, sc] : t.sig.f) {
            ExprPtr gp = ctx.deriv(g);
            if (sc.first > 0) {
                TrigMon m = t.sig;
                auto& e = m.f[g];
                e.first -= 1;
                e.second += 1;
                std::vector<std::pair<Rat, TrigMon>> red;
                reduceMon(Rat(sc.first), m, red);
                for (auto& [c, mm] : red) addTermInto(acc, mm, mulr(c, mul2(t.p, gp)));
            }
            if (sc.second > 0) {
                TrigMon m = t.sig;
                auto& e = m.f[g];
                e.second -= 1;
                e.first += 1;
                std::vector<std::pair<Rat, TrigMon>> red;
                reduceMon(Rat(-sc.second), m, red);
                for (auto& [c, mm] : red) addTermInto(acc, mm, mulr(c, mul2(t.p, gp)));
            }
        }
    }
    return collect(acc, S);
}

// ---------------------------------------------------------------------------
// argument decomposition
// ---------------------------------------------------------------------------

namespace {

void divergentPieces(const ExprPtr& e, Session& S, std::vector<ExprPtr>& out) {
    int lr = levelRank(e, S);
    if (lr < 0) return;
    Stream s = expandIn(e, lr, S);
    const ScaleElem el = S.scale.byRank(lr);
    for (size_t i = 0;; i++) {
        auto t = s.at(i, S);
        if (!t) return;
        if (t->exponent < 0) {
            ExprPtr tpow = el.kind == ElemKind::IterLog ? pow(logChain(el.k), -t->exponent)
                                                        : exp_(mulr(-t->exponent, el.L));
            out.push_back(normalize(mul2(t->coeff, tpow)));
        } else if (t->exponent == 0) {
            divergentPieces(t->coeff, S, out);
            return;
        } else {
            return;
        }
    }
}

} // namespace

ArgParts normalizeArgument(const ExprPtr& Gin, Session& S) {
    ExprPtr G = scaleNormalize(normalize(Gin), S);
    if (containsTrig(G)) throw Unsupported("trig argument must be a base-field element");
    std::vector<ExprPtr> pieces;
    divergentPieces(G, S, pieces);
    ExprPtr Ginf = add(std::vector<ExprPtr>(pieces));
    ExprPtr rest = normalize(sub2(G, Ginf));
    LimitVal lim = limitAtInfinity(rest, S);
    if (lim.kind != LimitVal::Finite)
        throw Error("internal: bounded remainder with infinite limit in " + print(Gin));
    ExprPtr Gc = lim.value;
    ExprPtr G0 = normalize(sub2(rest, Gc));
    return ArgParts{Ginf, Gc, G0};
}

// ---------------------------------------------------------------------------
// generator resolution and normal-form construction
// ---------------------------------------------------------------------------

namespace {

// divides out the leading rational so generators are canonically scaled
ExprPtr canonicalGen(const ExprPtr& A, Session& S, Rat& scaleOut) {
    Leading l = leading(scaleNormalize(normalize(A), S), S);
    if (l.coeff->k != K::Num)
        throw Unsupported("trig argument with non-rational leading coefficient: " + print(A));
    scaleOut = l.coeff->num;
    return normalize(mulr(Rat(1) / scaleOut, A));
}

struct GenCollector {
    std::vector<ExprPtr> raws;     // canonical provisional generators (-> +inf)
    std::vector<mpz_class> denoms; // lcm of encountered multiple denominators

    std::vector<std::pair<int, Rat>> resolve(ExprPtr A, Session& S, bool frozen) {
        std::vector<std::pair<int, Rat>> out;
        for (int guard = 0; guard < 64; guard++) {
            A = normalize(A);
            if (isZeroFunc(A, S)) return out;
            bool matched = false;
            for (size_t i = 0; i < raws.size(); i++) {
                Gamma0Cmp c = cmpGamma0(A, raws[i], S);
                if (c.c != Cmp0::Equal) continue;
                if (c.ratio->k != K::Num)
                    throw Unsupported("non-rational multiple between trig arguments: " + print(A) +
                                      " vs " + print(raws[i]));
                Rat q = c.ratio->num;
                out.push_back({static_cast<int>(i), q});
                A = normalize(sub2(A, mulr(q, raws[i])));
                matched = true;
                break;
            }
            if (matched) continue;
            if (frozen) throw Error("internal: unresolved trig argument after collection");
            Rat sc;
            ExprPtr canon = canonicalGen(A, S, sc);
            raws.push_back(canon);
            denoms.push_back(1);
            out.push_back({static_cast<int>(raws.size()) - 1, sc});
            return out;
        }
        throw BudgetExhausted("trig argument resolution");
    }

    void noteDenominators(const std::vector<std::pair<int, Rat>>& parts) {
        for (auto& [i, q] : parts) {
            mpz_class d = q.get_den();
            mpz_class l;
            mpz_lcm(l.get_mpz_t(), denoms[static_cast<size_t>(i)].get_mpz_t(), d.get_mpz_t());
            denoms[static_cast<size_t>(i)] = l;
        }
    }
};

void collectArgs(const ExprPtr& e, GenCollector& col, Session& S) {
    if (e->k == K::Sin || e->k == K::Cos) {
        const ExprPtr& u = e->ch[0];
        if (containsTrig(u)) throw Unsupported("nested trigonometric arguments");
        ArgParts parts = normalizeArgument(u, S);
        if (!parts.Ginf->isZero()) {
            ExprPtr A = parts.Ginf;
            if (funcSignOrThrow(A, S) < 0) A = neg(A);
            auto r = col.resolve(A, S, false);
            col.noteDenominators(r);
        }
        return;
    }
    if (e->k == K::Exp && containsTrig(e->ch[0]))
        throw Unsupported("trigonometric functions inside exponentials");
    for (auto& c : e->ch) collectArgs(c, col, S);
}

// sin(n g), cos(n g) as polynomials in sin g, cos g
std::pair<HGElem, HGElem> chebyshev(int gen, long n, Session& S) {
    bool negArg = n < 0;
    long m = negArg ? -n : n;
    TrigMon sm, cm;
    sm.f[gen] = {1, 0};
    cm.f[gen] = {0, 1};
    HGElem s1, c1;
    s1.terms.push_back(HGTerm{num(1), sm});
    c1.terms.push_back(HGTerm{num(1), cm});
    HGElem s;
    HGElem c = hgConst(num(1));
    for (long k = 0; k < m; k++) {
        HGElem s2 = hgAdd(hgMul(s, c1, S), hgMul(c, s1, S), S);
        HGElem c2 = hgAdd(hgMul(c, c1, S), hgNeg(hgMul(s, s1, S)), S);
        s = s2;
        c = c2;
    }
    if (negArg) s = hgNeg(s);
    return {s, c};
}

struct Builder {
    GenCollector& col;
    HGCtx& ctx;
    Session& S;
    std::map<int, int> rawToGen;

    int genIndexOf(int rawIdx) {
        auto it = rawToGen.find(rawIdx);
        if (it != rawToGen.end()) return it->second;
        ExprPtr gen = normalize(
            mulr(Rat(1, col.denoms[static_cast<size_t>(rawIdx)]), col.raws[static_cast<size_t>(rawIdx)]));
        ctx.gens.push_back(gen);
        ctx.genDerivs.push_back(normalize(differentiate(gen)));
        int idx = static_cast<int>(ctx.gens.size()) - 1;
        rawToGen.emplace(rawIdx, idx);
        return idx;
    }

    std::pair<HGElem, HGElem> sinCosOf(const ExprPtr& u) {
        ArgParts parts = normalizeArgument(u, S);
        HGElem s;
        HGElem c = hgConst(num(1));
        bool haveAngle = false;
        if (!parts.Ginf->isZero()) {
            ExprPtr A = parts.Ginf;
            bool flip = funcSignOrThrow(A, S) < 0;
            if (flip) A = neg(A);
            auto partsList = col.resolve(A, S, true);
            for (auto& [rawIdx, q] : partsList) {
                Rat n = q * Rat(col.denoms[static_cast<size_t>(rawIdx)]);
                if (n.get_den() != 1) throw Error("internal: non-integer generator multiple");
                long nn = n.get_num().get_si();
                auto [sg, cg] = chebyshev(genIndexOf(rawIdx), nn, S);
                if (!haveAngle) {
                    s = sg;
                    c = cg;
                    haveAngle = true;
                } else {
                    HGElem s2 = hgAdd(hgMul(s, cg, S), hgMul(c, sg, S), S);
                    HGElem c2 = hgAdd(hgMul(c, cg, S), hgNeg(hgMul(s, sg, S)), S);
                    s = s2;
                    c = c2;
                }
            }
            if (flip) s = hgNeg(s);
        }
        ExprPtr B = normalize(add2(parts.Gc, parts.G0));
        if (!B->isZero()) {
            ExprPtr sB = sin_(B), cB = cos_(B);
            HGElem s2 = hgAdd(hgScale(cB, s, S), hgScale(sB, c, S), S);
            HGElem c2 = hgAdd(hgScale(cB, c, S), hgNeg(hgScale(sB, s, S)), S);
            s = s2;
            c = c2;
        }
        return {s, c};
    }

    HGElem build(const ExprPtr& e) {
        if (!containsTrig(e)) return hgConst(e);
        switch (e->k) {
            case K::Sin: return sinCosOf(e->ch[0]).first;
            case K::Cos: return sinCosOf(e->ch[0]).second;
            case K::Sum: {
                HGElem out;
                for (auto& c : e->ch) out = hgAdd(out, build(c), S);
                return out;
            }
            case K::Prod: {
                HGElem out = hgConst(num(1));
                for (auto& c : e->ch) out = hgMul(out, build(c), S);
                return out;
            }
            case K::Pow: {
                if (e->num.get_den() != 1 || sgn(e->num) < 0)
                    throw Unsupported("only nonnegative integer powers of trig expressions");
                long n = e->num.get_num().get_si();
                HGElem base = build(e->ch[0]);
                HGElem out = hgConst(num(1));
                for (long i = 0; i < n; i++) out = hgMul(out, base, S);
                return out;
            }
            case K::Exp: throw Unsupported("trigonometric functions inside exponentials");
            case K::Log: throw Unsupported("trigonometric functions inside logarithms");
            case K::OscInt: throw Unsupported("unexpanded integral inside trig normal form");
            default: throw Error("internal: unexpected node in trig normal form");
        }
    }
};

} // namespace

HGElem toNormalForm(const ExprPtr& eIn, HGCtx& ctx, Session& S) {
    ExprPtr e = scaleNormalize(normalize(eIn), S);
    GenCollector col;
    for (auto& g : ctx.gens) {
        col.raws.push_back(g);
        col.denoms.push_back(1);
    }
    collectArgs(e, col, S);
    Builder b{col, ctx, S, {}};
    for (size_t i = 0; i < ctx.gens.size(); i++)
        b.rawToGen.emplace(static_cast<int>(i), static_cast<int>(i));
    return b.build(e);
}

ExprPtr hgToExpr(const HGElem& a, const HGCtx& ctx) {
    std::vector<ExprPtr> parts;
    for (auto& t : a.terms) {
        std::vector<ExprPtr> fac{t.p};
        for (auto& [g, sc] : t.sig.f) {
            const ExprPtr& arg = ctx.gens[static_cast<size_t>(g)];
            if (sc.first > 0) fac.push_back(pow(sin_(arg), Rat(sc.first)));
            if (sc.second > 0) fac.push_back(pow(cos_(arg), Rat(sc.second)));
        }
        parts.push_back(mul(std::move(fac)));
    }
    return add(std::move(parts));
}

Monomial gamma0HG(const HGElem& a, Session& S) {
    if (a.zero()) throw DomainError("gamma0 of the zero element");
    bool first = true;
    Monomial best;
    for (auto& t : a.terms) {
        Monomial m = leading(scaleNormalize(normalize(t.p), S), S).mono;
        if (first || cmpMonomial(m, best, S) > 0) {
            best = m;
            first = false;
        }
    }
    return best;
}

std::optional<Monomial> maxFlutter(const TrigMon& sig, const HGCtx& ctx, Session& S) {
    if (sig.empty()) return std::nullopt;
    bool first = true;
    Monomial best;
    for (auto& [g, sc] : sig.f) {
        (void)sc;
        Monomial m = leading(scaleNormalize(normalize(ctx.deriv(g)), S), S).mono;
        if (first || cmpMonomial(m, best, S) > 0) {
            best = m;
            first = false;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// quotient derivative gamma0
// ---------------------------------------------------------------------------

namespace {

// representative of the maximal comparability class among coefficients;
// nullptr when every coefficient is of class gamma(1)
ExprPtr maxGammaClass(const HGElem& a, Session& S) {
    ExprPtr best = nullptr;
    for (auto& t : a.terms) {
        Leading l = leading(scaleNormalize(normalize(t.p), S), S);
        if (l.mono.trivial()) continue;
        if (!best) {
            best = t.p;
            continue;
        }
        if (cmpGamma(t.p, best, S) == CmpG::Greater) best = t.p;
    }
    return best;
}

bool commonTrigFactor(const HGElem& a, const HGElem& b) {
    auto minPows = [](const HGElem& e) {
        std::map<int, std::pair<int, int>> mins;
        bool first = true;
        for (auto& t : e.terms) {
            if (first) {
                mins = t.sig.f;
                first = false;
                continue;
            }
            for (auto it = mins.begin(); it != mins.end();) {
                auto jt = t.sig.f.find(it->first);
                if (jt == t.sig.f.end()) {
                    it = mins.erase(it);
                    continue;
                }
                it->second.first = std::min(it->second.first, jt->second.first);
                it->second.second = std::min(it->second.second, jt->second.second);
                if (it->second.first == 0 && it->second.second == 0)
                    it = mins.erase(it);
                else
                    ++it;
            }
        }
        return mins;
    };
    auto ma = minPows(a), mb = minPows(b);
    for (auto& [g, sc] : ma) {
        auto it = mb.find(g);
        if (it == mb.end()) continue;
        if ((sc.first > 0 && it->second.first > 0) || (sc.second > 0 && it->second.second > 0)) return true;
    }
    return false;
}

} // namespace

Monomial quotientDerivativeGamma0(const HGElem& P, const HGElem& Q, const HGCtx& ctx, Session& S) {
    if (P.zero() || Q.zero()) throw DomainError("quotient with a zero side");
    ExprPtr mp = maxGammaClass(P, S);
    ExprPtr mq = maxGammaClass(Q, S);
    if (mp && mq && cmpGamma(mp, mq, S) == CmpG::Equal)
        throw HypothesisViolation("equal maximal comparability classes of coefficients");
    if (commonTrigFactor(P, Q)) throw HypothesisViolation("common trigonometric factor");

    Monomial g0P = gamma0HG(P, S), g0Q = gamma0HG(Q, S);
    if (cmpMonomial(g0P, g0Q, S) == 0) {
        for (auto& tp : P.terms) {
            if (cmpMonomial(leading(scaleNormalize(normalize(tp.p), S), S).mono, g0P, S) != 0) continue;
            for (auto& tq : Q.terms) {
                if (!(tq.sig == tp.sig)) continue;
                if (cmpMonomial(leading(scaleNormalize(normalize(tq.p), S), S).mono, g0Q, S) != 0) continue;
                Gamma0Cmp c = cmpGamma0(tp.p, tq.p, S);
                if (c.c != Cmp0::Equal || c.ratio->k != K::Num) continue;
                HGElem diff = hgAdd(P, hgScale(neg(c.ratio), Q, S), S);
                if (diff.zero() || cmpMonomial(gamma0HG(diff, S), g0Q, S) < 0)
                    throw HypothesisViolation("quotient of the form K + o(1)");
            }
        }
    }

    bool first = true;
    Monomial best;
    auto consider = [&](const Monomial& m) {
        if (first || cmpMonomial(m, best, S) > 0) {
            best = m;
            first = false;
        }
    };
    auto monoOf = [&](const ExprPtr& p) { return leading(scaleNormalize(normalize(p), S), S).mono; };
    for (auto& tp : P.terms) {
        Monomial mp1 = monoOf(tp.p);
        ExprPtr dp = normalize(differentiate(tp.p));
        std::optional<Monomial> dpm;
        if (!isZeroFunc(dp, S)) dpm = monoOf(dp);
        auto fp = maxFlutter(tp.sig, ctx, S);
        for (auto& tq : Q.terms) {
            Monomial mq1 = monoOf(tq.p);
            ExprPtr dq = normalize(differentiate(tq.p));
            if (dpm) consider(dpm->mulM(mq1));
            if (!isZeroFunc(dq, S)) consider(mp1.mulM(monoOf(dq)));
            if (fp) consider(mp1.mulM(mq1).mulM(*fp));
            auto fq = maxFlutter(tq.sig, ctx, S);
            if (fq) consider(mp1.mulM(mq1).mulM(*fq));
        }
    }
    if (first) throw DomainError("constant quotient has zero derivative");
    return best.divM(g0Q.mulM(g0Q));
}

// ---------------------------------------------------------------------------
// flattened expansions
// ---------------------------------------------------------------------------

FlatStream::FlatStream(const ExprPtr& e, Session& S) : st_(std::make_shared<State>()) {
    ExprPtr en = scaleNormalize(normalize(e), S);
    if (en->isZero()) {
        st_->done = true;
        return;
    }
    int lr = levelRank(en, S);
    if (lr < 0) {
        st_->memo.push_back(FlatTerm{en, Monomial{}});
        st_->done = true;
        return;
    }
    st_->frames.push_back(Frame{expandIn(en, lr, S), 0, Monomial{}, S.scale.byRank(lr).id});
}

std::optional<FlatStream::FlatTerm> FlatStream::at(size_t i, Session& S) {
    if (!st_) return std::nullopt;
    while (st_->memo.size() <= i && !st_->done) {
        S.tick();
        if (st_->frames.empty()) {
            st_->done = true;
            break;
        }
        size_t fi = st_->frames.size() - 1;
        auto t = st_->frames[fi].s.at(st_->frames[fi].idx, S);
        if (!t) {
            st_->frames.pop_back();
            continue;
        }
        st_->frames[fi].idx++;
        Monomial mono = st_->frames[fi].pre;
        if (t->exponent != 0) mono.e[st_->frames[fi].elemId] = t->exponent;
        int lr = levelRank(t->coeff, S);
        if (lr < 0) {
            st_->memo.push_back(FlatTerm{t->coeff, mono});
        } else {
            st_->frames.push_back(Frame{expandIn(t->coeff, lr, S), 0, mono, S.scale.byRank(lr).id});
        }
    }
    if (i < st_->memo.size()) return st_->memo[i];
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// HGSeries: merged gamma0-descending expansion
// ---------------------------------------------------------------------------

struct HGSeries::Src {
    FlatStream fs;
    size_t idx = 0;
    TrigMon sig;
};

HGSeries::HGSeries(const HGElem& a, Session& S)
    : srcs_(std::make_shared<std::vector<Src>>()), memo_(std::make_shared<std::vector<HGSeriesTerm>>()) {
    for (auto& t : a.terms) srcs_->push_back(Src{FlatStream(t.p, S), 0, t.sig});
}

std::optional<HGSeriesTerm> HGSeries::at(size_t i, Session& S) {
    if (!srcs_) return std::nullopt;
    while (memo_->size() <= i) {
        bool any = false;
        Monomial best;
        for (auto& s : *srcs_) {
            auto t = s.fs.at(s.idx, S);
            if (!t) continue;
            if (!any || cmpMonomial(t->mono, best, S) > 0) {
                best = t->mono;
                any = true;
            }
        }
        if (!any) return std::nullopt;
        std::map<TrigMon, std::vector<ExprPtr>> groups;
        for (auto& s : *srcs_) {
            auto t = s.fs.at(s.idx, S);
            if (!t || cmpMonomial(t->mono, best, S) != 0) continue;
            groups[s.sig].push_back(t->coeff);
            s.idx++;
        }
        for (auto& [sig, coeffs] : groups) {
            ExprPtr c = normalize(coeffs.size() == 1 ? coeffs[0] : add(std::vector<ExprPtr>(coeffs)));
            if (c->isZero()) continue;
            if (constSign(c, S.cfg).kind == VerdictKind::Zero) continue;
            memo_->push_back(HGSeriesTerm{c, best, sig});
        }
    }
    return (*memo_)[i];
}

// ---------------------------------------------------------------------------

std::string trigMonStr(const TrigMon& sig, const HGCtx& ctx) {
    if (sig.empty()) return "1";
    std::string out;
    for (auto& [g, sc] : sig.f) {
        std::string arg = print(ctx.gens[static_cast<size_t>(g)]);
        if (sc.first > 0) {
            if (!out.empty()) out += "*";
            out += "sin(" + arg + ")";
            if (sc.first > 1) out += "^" + std::to_string(sc.first);
        }
        if (sc.second > 0) {
            if (!out.empty()) out += "*";
            out += "cos(" + arg + ")";
            if (sc.second > 1) out += "^" + std::to_string(sc.second);
        }
    }
    return out;
}

} // namespace oscint
