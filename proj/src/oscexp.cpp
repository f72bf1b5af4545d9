#include "oscexp.hpp"

#include <algorithm>

#include "oracle.hpp"

namespace oscint {

const char* caseName(CaseK k) {
    switch (k) {
        case CaseK::ClosedForm: return "closed-form";
        case CaseK::DiffH: return "Diff-h";
        case CaseK::IntH: return "Int-h";
        case CaseK::KCase: return "K-case";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// classification
// ---------------------------------------------------------------------------

CaseTag classify(const ExprPtr& hIn, const ExprPtr& GIn, Session& S) {
    ExprPtr h = scaleNormalize(normalize(hIn), S);
    ExprPtr G = scaleNormalize(normalize(GIn), S);
    ExprPtr g = normalize(differentiate(G));
    Gamma0Cmp peel = cmpGamma0(h, g, S);
    if (peel.c == Cmp0::Equal) return CaseTag{CaseK::ClosedForm, nullptr, peel.ratio, nullptr};
    ExprPtr alpha = normalize(div2(differentiate(div2(h, g)), h));
    LimitVal lim = limitAtInfinity(alpha, S);
    if (lim.kind != LimitVal::Finite) return CaseTag{CaseK::IntH, alpha, nullptr, nullptr};
    if (constSign(lim.value, S.cfg).kind == VerdictKind::Zero)
        return CaseTag{CaseK::DiffH, alpha, nullptr, nullptr};
    return CaseTag{CaseK::KCase, alpha, lim.value, normalize(sub2(alpha, lim.value))};
}

ExprPtr hStep(const ExprPtr& h, const ExprPtr& g) { return normalize(differentiate(div2(h, g))); }

BaseIntegral HStep(const ExprPtr& Hprev, const ExprPtr& g, Session& S) {
    return BaseIntegral(normalize(mul2(Hprev, g)), S);
}

Monomial leadingT(const ExprPtr& hIn, const ExprPtr& GIn, Session& S) {
    ExprPtr h = scaleNormalize(normalize(hIn), S);
    ExprPtr G = scaleNormalize(normalize(GIn), S);
    ExprPtr g = normalize(differentiate(G));
    CaseTag tag = classify(h, G, S);
    switch (tag.k) {
        case CaseK::ClosedForm: return Monomial{};
        case CaseK::DiffH:
        case CaseK::KCase: {
            Monomial mh = leading(h, S).mono;
            Monomial mg = leading(g, S).mono;
            return mh.divM(mg);
        }
        case CaseK::IntH: {
            ExprPtr u0 = integrateLeadingTerm(h, S);
            return leading(scaleNormalize(normalize(u0), S), S).mono;
        }
    }
    return Monomial{};
}

// ---------------------------------------------------------------------------
// single-integral expansion
// ---------------------------------------------------------------------------

OscExpansion::OscExpansion(ExprPtr hIn, ExprPtr GIn, TrigK kind, int sign, Session& S)
    : st_(std::make_shared<State>()) {
    ExprPtr h = scaleNormalize(normalize(std::move(hIn)), S);
    ArgParts parts = normalizeArgument(GIn, S);
    if (parts.Ginf->isZero()) throw DomainError("oscillatory phase must tend to +infinity");
    if (funcSignOrThrow(parts.Ginf, S) < 0) throw DomainError("oscillatory phase must tend to +infinity");
    st_->G = parts.Ginf;
    st_->g = normalize(differentiate(parts.Ginf));
    ExprPtr B = normalize(add2(parts.Gc, parts.G0));
    if (B->isZero()) {
        if (!isZeroFunc(h, S)) st_->pend.push_back(Pending{h, kind, sign, CaseK::ClosedForm});
    } else {
        // trig(Ginf + B): fold the bounded part into the integrands
        ExprPtr hc = normalize(mul2(h, cos_(B)));
        ExprPtr hs = normalize(mul2(h, sin_(B)));
        if (kind == TrigK::SinK) {
            if (!isZeroFunc(hc, S)) st_->pend.push_back(Pending{hc, TrigK::SinK, sign, CaseK::ClosedForm});
            if (!isZeroFunc(hs, S)) st_->pend.push_back(Pending{hs, TrigK::CosK, sign, CaseK::ClosedForm});
        } else {
            if (!isZeroFunc(hc, S)) st_->pend.push_back(Pending{hc, TrigK::CosK, sign, CaseK::ClosedForm});
            if (!isZeroFunc(hs, S)) st_->pend.push_back(Pending{hs, TrigK::SinK, -sign, CaseK::ClosedForm});
        }
    }
    for (auto& p : st_->pend) p.parent = CaseK::ClosedForm;
}

void OscExpansion::prepare(Pending& p, Session& S) {
    if (p.ready) return;
    Gamma0Cmp peel = cmpGamma0(p.h, st_->g, S);
    if (peel.c == Cmp0::Equal) {
        p.tag = CaseTag{CaseK::ClosedForm, nullptr, peel.ratio, nullptr};
        p.emitMono = Monomial{};
        p.ready = true;
        return;
    }
    ExprPtr alpha = normalize(div2(differentiate(div2(p.h, st_->g)), p.h));
    LimitVal lim = limitAtInfinity(alpha, S);
    if (lim.kind != LimitVal::Finite) {
        p.tag = CaseTag{CaseK::IntH, alpha, nullptr, nullptr};
        p.prepared = integrateLeadingTerm(p.h, S);
        p.emitMono = leading(scaleNormalize(normalize(p.prepared), S), S).mono;
    } else if (constSign(lim.value, S.cfg).kind == VerdictKind::Zero) {
        p.tag = CaseTag{CaseK::DiffH, alpha, nullptr, nullptr};
        p.emitMono = leading(p.h, S).mono.divM(leading(st_->g, S).mono);
    } else {
        p.tag = CaseTag{CaseK::KCase, alpha, lim.value, normalize(sub2(alpha, lim.value))};
        p.emitMono = leading(p.h, S).mono.divM(leading(st_->g, S).mono);
    }
    if (p.fromIntHChain && p.tag.k != CaseK::IntH)
        throw Error("internal: Int-h chain left the Int-h regime");
    bool senseSwitch = (p.lastSense == CaseK::DiffH && p.tag.k == CaseK::IntH) ||
                       (p.lastSense == CaseK::IntH && p.tag.k == CaseK::DiffH) ||
                       (p.parent == CaseK::KCase && p.tag.k == CaseK::KCase);
    if (senseSwitch) {
        st_->history.push_back(CaseEvent{st_->steps, std::string(caseName(p.parent)) + " -> " + caseName(p.tag.k), true});
        st_->switches++;
        if (st_->switches > S.cfg.switch_budget) throw BudgetExhausted("sense-switch budget");
    } else if (p.parent != p.tag.k) {
        st_->history.push_back(CaseEvent{st_->steps, caseName(p.tag.k), false});
    }
    p.ready = true;
}

void OscExpansion::processBest(Session& S) {
    for (auto& p : st_->pend) prepare(p, S);
    size_t bi = 0;
    for (size_t i = 1; i < st_->pend.size(); i++)
        if (cmpMonomial(st_->pend[i].emitMono, st_->pend[bi].emitMono, S) > 0) bi = i;
    Pending p = st_->pend[bi];
    st_->pend.erase(st_->pend.begin() + static_cast<long>(bi));
    st_->steps++;

    auto stage = [&](const Monomial& m, bool isCos, const ExprPtr& c) {
        for (auto& sEnt : st_->staged) {
            if (cmpMonomial(sEnt.mono, m, S) == 0) {
                ExprPtr& slot = isCos ? sEnt.cosCoeff : sEnt.sinCoeff;
                slot = slot ? normalize(add2(slot, c)) : c;
                return;
            }
        }
        Staged ent{m, nullptr, nullptr};
        (isCos ? ent.cosCoeff : ent.sinCoeff) = c;
        st_->staged.push_back(ent);
    };
    auto pushPend = [&](ExprPtr h2, TrigK tk, int sg, CaseK parent, bool chain = false) {
        h2 = scaleNormalize(normalize(std::move(h2)), S);
        if (isZeroFunc(h2, S)) return;
        Pending np{h2, tk, sg, parent};
        np.fromIntHChain = chain;
        np.lastSense = (parent == CaseK::DiffH || parent == CaseK::IntH) ? parent : p.lastSense;
        st_->pend.push_back(np);
    };

    const ExprPtr& g = st_->g;
    switch (p.tag.k) {
        case CaseK::ClosedForm: {
            ExprPtr Kc = p.tag.Kconst;
            ExprPtr rest = normalize(sub2(p.h, mul2(Kc, g)));
            if (p.trig == TrigK::SinK) {
                stage(Monomial{}, true, mulr(Rat(-p.sign), Kc));
                pushPend(rest, TrigK::SinK, p.sign, CaseK::ClosedForm);
            } else {
                stage(Monomial{}, false, mulr(Rat(p.sign), Kc));
                pushPend(rest, TrigK::CosK, p.sign, CaseK::ClosedForm);
            }
            break;
        }
        case CaseK::DiffH: {
            ExprPtr hg = normalize(div2(p.h, g));
            ExprPtr h1 = normalize(differentiate(hg));
            if (p.trig == TrigK::SinK) {
                stage(p.emitMono, true, mulr(Rat(-p.sign), hg));
                pushPend(h1, TrigK::CosK, p.sign, CaseK::DiffH);
            } else {
                stage(p.emitMono, false, mulr(Rat(p.sign), hg));
                pushPend(h1, TrigK::SinK, -p.sign, CaseK::DiffH);
            }
            break;
        }
        case CaseK::IntH: {
            ExprPtr P = p.prepared;
            ExprPtr rho = normalize(sub2(p.h, differentiate(P)));
            ExprPtr Pg = normalize(mul2(P, g));
            if (p.trig == TrigK::SinK) {
                stage(p.emitMono, false, mulr(Rat(p.sign), P));
                pushPend(Pg, TrigK::CosK, -p.sign, CaseK::IntH, true);
                pushPend(rho, TrigK::SinK, p.sign, CaseK::IntH);
            } else {
                stage(p.emitMono, true, mulr(Rat(p.sign), P));
                pushPend(Pg, TrigK::SinK, p.sign, CaseK::IntH, true);
                pushPend(rho, TrigK::CosK, p.sign, CaseK::IntH);
            }
            break;
        }
        case CaseK::KCase: {
            ExprPtr Kc = p.tag.Kconst;
            ExprPtr w = p.tag.omega;
            ExprPtr den = normalize(add2(num(1), mul2(Kc, Kc)));
            ExprPtr c1 = normalize(div2(p.h, mul2(den, g)));
            ExprPtr c2 = normalize(div2(differentiate(div2(p.h, g)), mul2(den, g)));
            ExprPtr pend1 = normalize(div2(mul({w, add2(mulr(Rat(2), Kc), w), p.h}), den));
            ExprPtr pend2 = normalize(div2(mul2(differentiate(w), p.h), g));
            if (p.trig == TrigK::SinK) {
                stage(p.emitMono, true, mulr(Rat(-p.sign), c1));
                stage(p.emitMono, false, mulr(Rat(p.sign), c2));
                pushPend(pend1, TrigK::SinK, p.sign, CaseK::KCase);
                pushPend(pend2, TrigK::SinK, p.sign, CaseK::KCase);
            } else {
                stage(p.emitMono, false, mulr(Rat(p.sign), c1));
                stage(p.emitMono, true, mulr(Rat(p.sign), c2));
                pushPend(pend1, TrigK::CosK, p.sign, CaseK::KCase);
                pushPend(pend2, TrigK::CosK, p.sign, CaseK::KCase);
            }
            break;
        }
    }
}

std::optional<OscTerm> OscExpansion::at(size_t i, Session& S) {
    if (!st_) return std::nullopt;
    try {
        while (st_->memo.size() <= i && !st_->truncated) {
            S.tick();
            // flush any staged grade strictly above every pending emission
            for (auto& p : st_->pend) prepare(p, S);
            int flushIdx = -1;
            for (size_t k = 0; k < st_->staged.size(); k++) {
                bool dominates = true;
                for (auto& p : st_->pend)
                    if (cmpMonomial(st_->staged[k].mono, p.emitMono, S) <= 0) {
                        dominates = false;
                        break;
                    }
                if (!dominates) continue;
                if (flushIdx < 0 || cmpMonomial(st_->staged[k].mono, st_->staged[static_cast<size_t>(flushIdx)].mono, S) > 0)
                    flushIdx = static_cast<int>(k);
            }
            if (flushIdx >= 0) {
                Staged ent = st_->staged[static_cast<size_t>(flushIdx)];
                st_->staged.erase(st_->staged.begin() + flushIdx);
                bool emitted = false;
                for (int t = 0; t < 2; t++) {
                    ExprPtr c = t == 0 ? ent.sinCoeff : ent.cosCoeff;
                    if (!c) continue;
                    c = normalize(c);
                    if (isZeroFunc(c, S)) continue;
                    st_->memo.push_back(OscTerm{c, t, st_->G, ent.mono});
                    emitted = true;
                }
                if (!emitted) st_->cancellations++;
                continue;
            }
            if (st_->pend.empty()) break; // exact: everything emitted
            processBest(S);
        }
    } catch (const BudgetExhausted&) {
        st_->truncated = true;
    }
    if (i < st_->memo.size()) return st_->memo[i];
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// merged expansions
// ---------------------------------------------------------------------------

MergedExpansion::Grade MergedExpansion::stepGrade(Session& S) {
    S.tick();
    bool any = false;
    Monomial best;
    for (auto& s : st_->srcs) {
        auto t = s.fn(s.idx, S);
        if (!t) continue;
        if (!any || cmpMonomial(t->g0, best, S) > 0) {
            best = t->g0;
            any = true;
        }
    }
    if (!any) return Grade::Done;
    // group equal-grade heads by (trig, phase)
    struct Key {
        int trig;
        const Expr* phase;
        bool operator<(const Key& o) const { return trig != o.trig ? trig < o.trig : phase < o.phase; }
    };
    std::map<Key, std::pair<std::vector<ExprPtr>, ExprPtr>> groups;
    for (auto& s : st_->srcs) {
        auto t = s.fn(s.idx, S);
        if (!t || cmpMonomial(t->g0, best, S) != 0) continue;
        auto& gEnt = groups[Key{t->trig, t->phase.get()}];
        gEnt.first.push_back(t->coeff);
        gEnt.second = t->phase;
        s.idx++;
    }
    bool emitted = false;
    for (auto& [key, ent] : groups) {
        ExprPtr c = normalize(ent.first.size() == 1 ? ent.first[0] : add(std::vector<ExprPtr>(ent.first)));
        if (isZeroFunc(c, S)) {
            st_->cancel++;
            continue;
        }
        st_->memo.push_back(OscTerm{c, key.trig, ent.second, best});
        emitted = true;
    }
    if (emitted) {
        st_->consecCancel = 0;
        return Grade::Emitted;
    }
    st_->consecCancel++;
    return Grade::Cancelled;
}

std::optional<OscTerm> MergedExpansion::at(size_t i, Session& S) {
    while (st_->memo.size() <= i)
        if (stepGrade(S) == Grade::Done) return std::nullopt;
    return st_->memo[i];
}

// ---------------------------------------------------------------------------
// general expansion
// ---------------------------------------------------------------------------

namespace {

struct LinPiece {
    Rat c;
    int trig; // 0 sin, 1 cos, 2 one
    ExprPtr arg;
};

// product-to-sum linearization of a trig power product into single angles
std::vector<LinPiece> linearizeSigma(const TrigMon& sig, const HGCtx& ctx, Session& S) {
    struct Ent {
        Rat c;
        std::map<int, long> v;
        bool isSin;
    };
    std::vector<Ent> ents{Ent{Rat(1), {}, false}}; // cos(0) = 1
    auto mulIn = [&](int gen, bool factorSin) {
        std::vector<Ent> next;
        for (auto& e : ents) {
            auto plus = e.v, minus = e.v;
            plus[gen] += 1;
            minus[gen] -= 1;
            Rat half = e.c / 2;
            if (factorSin) {
                if (e.isSin) { // sin X sin g
                    next.push_back(Ent{half, minus, false});
                    next.push_back(Ent{-half, plus, false});
                } else { // cos X sin g
                    next.push_back(Ent{half, plus, true});
                    next.push_back(Ent{-half, minus, true});
                }
            } else {
                if (e.isSin) { // sin X cos g
                    next.push_back(Ent{half, plus, true});
                    next.push_back(Ent{half, minus, true});
                } else { // cos X cos g
                    next.push_back(Ent{half, plus, false});
                    next.push_back(Ent{half, minus, false});
                }
            }
        }
        ents = std::move(next);
    };
    for (auto& [g, sc] : sig.f) {
        for (int j = 0; j < sc.first; j++) mulIn(g, true);
        for (int j = 0; j < sc.second; j++) mulIn(g, false);
    }
    // canonicalize angles and combine
    std::map<std::pair<std::map<int, long>, bool>, Rat> acc;
    for (auto& e : ents) {
        std::map<int, long> v;
        for (auto& [g, n] : e.v)
            if (n != 0) v[g] = n;
        if (v.empty()) {
            if (e.isSin) continue; // sin(0) = 0
            acc[{v, false}] += e.c;
            continue;
        }
        // orient by the fastest generator present (generators indexed in
        // the order registered; compare by gamma0 of the arguments)
        int dom = v.begin()->first;
        for (auto& [g, n] : v) {
            (void)n;
            if (g == dom) continue;
            if (cmpGamma0(ctx.gens[static_cast<size_t>(g)], ctx.gens[static_cast<size_t>(dom)], S).c == Cmp0::Greater)
                dom = g;
        }
        Rat c = e.c;
        if (v[dom] < 0) {
            for (auto& [g, n] : v) n = -n;
            if (e.isSin) c = -c;
        }
        acc[{v, e.isSin}] += c;
    }
    std::vector<LinPiece> out;
    for (auto& [key, c] : acc) {
        if (c == 0) continue;
        auto& [v, isSin] = key;
        if (v.empty()) {
            out.push_back(LinPiece{c, 2, nullptr});
            continue;
        }
        std::vector<ExprPtr> parts;
        for (auto& [g, n] : v) parts.push_back(mulr(Rat(n), ctx.gens[static_cast<size_t>(g)]));
        out.push_back(LinPiece{c, isSin ? 0 : 1, normalize(add(std::move(parts)))});
    }
    return out;
}

MergedExpansion::Source oscSource(const std::shared_ptr<OscExpansion>& oe) {
    return MergedExpansion::Source{[oe](size_t i, Session& S) { return oe->at(i, S); }, 0};
}

MergedExpansion::Source baseIntegralSource(const ExprPtr& h, Session& S) {
    auto bi = std::make_shared<BaseIntegral>(h, S);
    return MergedExpansion::Source{
        [bi](size_t i, Session& S2) -> std::optional<OscTerm> {
            while (bi->terms().size() <= i && !bi->exact()) bi->step(S2);
            if (i >= bi->terms().size()) return std::nullopt;
            ExprPtr u = bi->terms()[i];
            Monomial m = leading(scaleNormalize(normalize(u), S2), S2).mono;
            return OscTerm{u, 2, nullptr, m};
        },
        0};
}

MergedExpansion::Source hgSource(const HGElem& rest, const HGCtx& ctx, Session& S) {
    auto hs = std::make_shared<HGSeries>(rest, S);
    auto buf = std::make_shared<std::vector<OscTerm>>();
    auto hsIdx = std::make_shared<size_t>(0);
    auto ctxCopy = std::make_shared<HGCtx>(ctx);
    return MergedExpansion::Source{
        [hs, buf, hsIdx, ctxCopy](size_t i, Session& S2) -> std::optional<OscTerm> {
            while (buf->size() <= i) {
                auto t = hs->at((*hsIdx)++, S2);
                if (!t) return std::nullopt;
                for (auto& piece : linearizeSigma(t->sig, *ctxCopy, S2)) {
                    ExprPtr c = mulr(piece.c, t->coeff);
                    buf->push_back(OscTerm{c, piece.trig, piece.arg, t->mono});
                }
            }
            return (*buf)[i];
        },
        0};
}

} // namespace

GeneralExpansion expandGeneral(const ExprPtr& eIn, Session& S) {
    GeneralExpansion out;
    ExprPtr e = scaleNormalize(normalize(eIn), S);
    std::vector<ExprPtr> restTerms;
    std::vector<std::pair<Rat, ExprPtr>> ints; // multiplier, OscInt node
    std::vector<ExprPtr> terms = e->k == K::Sum ? e->ch : std::vector<ExprPtr>{e};
    for (auto& t : terms) {
        auto [m, core] = splitMultiplier(t);
        if (core && core->k == K::OscInt) {
            ints.push_back({m, core});
            continue;
        }
        if (containsOscInt(t)) throw Unsupported("integrals must enter linearly with rational multipliers");
        restTerms.push_back(t);
    }
    ExprPtr rest = add(std::move(restTerms));
    // one shared generator context: phases and the rest interlace coherently
    out.rest = toNormalForm(rest, out.ctx, S);
    for (auto& [m, node] : ints) {
        out.tags.push_back(node->otag);
        const ExprPtr& integrand = node->ch[0];
        const ExprPtr& phase = node->ch[1];
        if (!containsTrig(integrand)) {
            out.intSources.push_back(GeneralSource{m, integrand, node->okind, phase, node->otag});
            continue;
        }
        // trig content in the integrand: linearize integrand * trig(phase)
        ExprPtr combined = mul2(integrand, node->okind == TrigK::SinK ? sin_(phase) : cos_(phase));
        HGElem F = toNormalForm(combined, out.ctx, S);
        for (auto& ht : F.terms) {
            for (auto& piece : linearizeSigma(ht.sig, out.ctx, S)) {
                ExprPtr hpiece = normalize(mulr(piece.c, ht.p));
                if (piece.trig == 2) {
                    out.intSources.push_back(GeneralSource{m, hpiece, TrigK::SinK, nullptr, node->otag});
                } else {
                    out.intSources.push_back(GeneralSource{
                        m, hpiece, piece.trig == 0 ? TrigK::SinK : TrigK::CosK, piece.arg, node->otag});
                }
            }
        }
    }
    for (auto& src : out.intSources) {
        ExprPtr h = normalize(mulr(src.mult, src.h));
        if (src.G == nullptr) {
            out.merged.addSource(baseIntegralSource(h, S));
        } else {
            auto oe = std::make_shared<OscExpansion>(h, src.G, src.kind, 1, S);
            out.merged.addSource(oscSource(oe));
        }
    }
    if (!out.rest.zero()) out.merged.addSource(hgSource(out.rest, out.ctx, S));
    return out;
}

// ---------------------------------------------------------------------------
// shadows of integrals
// ---------------------------------------------------------------------------

ExprPtr generalizedShadow(const ExprPtr& fIn, int elemId, Session& S) {
    ExprPtr f = scaleNormalize(normalize(fIn), S);
    if (isZeroFunc(f, S)) return num(0);
    Leading l = leading(f, S);
    ExprPtr T = monomialExpr(l.mono, S);
    ExprPtr frac = normalize(div2(f, T));
    ExprPtr sh = shadowExpr(frac, elemId, S);
    return normalize(mul2(T, sh));
}

ShadowResult shadowPhi(const ExprPtr& hIn, const ExprPtr& GIn, TrigK kind, int elemId, int tag, Session& S) {
    ExprPtr h = scaleNormalize(normalize(hIn), S);
    ArgParts parts = normalizeArgument(GIn, S);
    if (parts.Ginf->isZero() || funcSignOrThrow(parts.Ginf, S) < 0)
        throw DomainError("phase must tend to +infinity");
    if (!normalize(add2(parts.Gc, parts.G0))->isZero())
        throw Unsupported("shadow of an integral with a non-divergent phase part (split it first)");
    ExprPtr G = parts.Ginf;
    ExprPtr g = normalize(differentiate(G));
    // assume g equals its i-shadow (the split lemma / delta shortcut)
    ExprPtr gEff = generalizedShadow(g, elemId, S);

    Gamma0Cmp peel = cmpGamma0(h, gEff, S);
    if (peel.c == Cmp0::Equal) {
        // closed form Int K g trig = -K cos / +K sin, plus the peeled remainder
        ExprPtr Kc = peel.ratio;
        ExprPtr closed = kind == TrigK::SinK ? mul2(neg(Kc), cos_(G)) : mul2(Kc, sin_(G));
        ExprPtr rest = normalize(sub2(h, mul2(Kc, gEff)));
        if (isZeroFunc(rest, S)) {
            ShadowResult r;
            r.caseNo = 1;
            r.phi = closed;
            r.T = Monomial{};
            ExprPtr tExpr = S.scale.byId(elemId).expr;
            r.hasA = cmpGamma(num(1), tExpr, S) == CmpG::Less; // gamma(1) < gamma(t_i) always
            r.Atag = tag;
            return r;
        }
        ShadowResult inner = shadowPhi(rest, G, kind, elemId, tag, S);
        inner.phi = normalize(add2(closed, mul2(monomialExpr(inner.T, S), inner.phi)));
        inner.T = Monomial{};
        return inner;
    }

    ExprPtr alpha = normalize(div2(differentiate(div2(h, gEff)), h));
    LimitVal lim = limitAtInfinity(alpha, S);
    Monomial T;
    ExprPtr H;
    bool truncated = false;
    std::vector<ExprPtr> Hterms;
    if (lim.kind != LimitVal::Finite) {
        BaseIntegral bi(h, S);
        bi.ensure(static_cast<size_t>(std::max(1, S.cfg.max_terms / 8)), S);
        Hterms = bi.terms();
        if (bi.exact()) H = bi.partialSum();
        else truncated = true;
        T = leading(scaleNormalize(normalize(Hterms.at(0)), S), S).mono;
    } else {
        T = leading(h, S).mono.divM(leading(gEff, S).mono);
    }
    ExprPtr Texpr = monomialExpr(T, S);
    ExprPtr tExpr = S.scale.byId(elemId).expr;
    CmpG gT = cmpGamma(Texpr, tExpr, S);
    ShadowResult r;
    r.T = T;
    r.Atag = tag;
    r.hasA = gT == CmpG::Less; // A = 0 exactly when gamma(T) >= gamma(t_i)
    CmpG gAlpha = isZeroFunc(alpha, S) ? CmpG::Less : cmpGamma(alpha, tExpr, S);
    if (gAlpha != CmpG::Less) {
        if (lim.kind == LimitVal::Finite) {
            // alpha -> 0 with gamma(alpha) >= gamma(t_i)
            r.caseNo = 1;
            ExprPtr sh = shadowExpr(normalize(div2(h, mul2(Texpr, gEff))), elemId, S);
            r.phi = kind == TrigK::SinK ? mul2(neg(sh), cos_(G)) : mul2(sh, sin_(G));
        } else {
            r.caseNo = 2;
            ExprPtr HoverT;
            if (H) {
                HoverT = shadowExpr(normalize(div2(H, Texpr)), elemId, S);
            } else {
                std::vector<ExprPtr> shs;
                for (auto& t : Hterms) shs.push_back(shadowExpr(normalize(div2(t, Texpr)), elemId, S));
                HoverT = normalize(add(std::move(shs)));
                r.truncated = truncated;
            }
            r.phi = kind == TrigK::SinK ? mul2(HoverT, sin_(G)) : mul2(HoverT, cos_(G));
        }
    } else {
        CmpG gG = cmpGamma(G, tExpr, S);
        ExprPtr hi = generalizedShadow(h, elemId, S);
        if (gG == CmpG::Less) {
            r.caseNo = 3;
            ExprPtr defInt = oscint(hi, G, kind, tag);
            r.phi = normalize(div2(defInt, Texpr));
        } else {
            r.caseNo = 4;
            ExprPtr chi = normalize(div2(monomialLogDeriv(T, S), gEff));
            ExprPtr om = shadowExpr(chi, elemId, S);
            r.omega = om;
            ExprPtr den = normalize(mul({gEff, Texpr, add2(num(1), mul2(om, om))}));
            if (kind == TrigK::SinK) {
                r.phi = normalize(div2(mul2(hi, sub2(mul2(om, sin_(G)), cos_(G))), den));
            } else {
                r.phi = normalize(div2(mul2(hi, add2(mul2(om, cos_(G)), sin_(G))), den));
            }
        }
    }
    return r;
}

std::pair<ExprPtr, ExprPtr> splitG(const ExprPtr& GIn, int elemId, Session& S) {
    ExprPtr G = scaleNormalize(normalize(GIn), S);
    std::vector<ExprPtr> pieces;
    {
        ArgParts parts = normalizeArgument(G, S);
        ExprPtr rest = normalize(add2(parts.Gc, parts.G0));
        std::vector<ExprPtr> terms = parts.Ginf->k == K::Sum ? parts.Ginf->ch : std::vector<ExprPtr>{parts.Ginf};
        for (auto& t : terms)
            if (!t->isZero()) pieces.push_back(t);
        if (!rest->isZero()) pieces.push_back(rest);
    }
    if (pieces.size() < 2) return {G, num(0)};
    // order pieces by descending gamma0 of their derivatives
    std::sort(pieces.begin(), pieces.end(), [&](const ExprPtr& a, const ExprPtr& b) {
        ExprPtr da = normalize(differentiate(a)), db = normalize(differentiate(b));
        if (isZeroFunc(db, S)) return true;
        if (isZeroFunc(da, S)) return false;
        return cmpGamma0(da, db, S).c == Cmp0::Greater;
    });
    ExprPtr tExpr = S.scale.byId(elemId).expr;
    for (size_t k = 1; k < pieces.size(); k++) {
        std::vector<ExprPtr> head(pieces.begin(), pieces.begin() + static_cast<long>(k));
        std::vector<ExprPtr> tail(pieces.begin() + static_cast<long>(k), pieces.end());
        ExprPtr G1 = add(std::move(head));
        ExprPtr G2 = add(std::move(tail));
        ExprPtr g1 = normalize(differentiate(G1));
        ExprPtr g2 = normalize(differentiate(G2));
        if (isZeroFunc(g2, S)) continue;
        Gamma0Cmp c = cmpGamma0(g2, g1, S);
        if (c.c != Cmp0::Less) continue; // need g2 = o(g1)
        ExprPtr ratio = normalize(div2(g2, g1));
        if (cmpGamma(ratio, tExpr, S) == CmpG::Less) continue; // need gamma(g2/g1) >= gamma(t_i)
        return {G1, G2};
    }
    return {G, num(0)};
}

ExprPtr deltaShadow(const ExprPtr& G, int elemId, Session& S) {
    return generalizedShadow(normalize(differentiate(normalize(G))), elemId, S);
}

GhostNF ghostNormalForm(const ExprPtr& hIn, const ExprPtr& GIn, int elemId, Session& S) {
    ExprPtr h = scaleNormalize(normalize(hIn), S);
    ShadowResult sp = shadowPhi(h, GIn, TrigK::SinK, elemId, 0, S);
    if (sp.caseNo == 3)
        throw DomainError("ghost normal form applies to shadow cases (i), (ii) and (iv)");
    ExprPtr G = normalizeArgument(GIn, S).Ginf;
    ExprPtr g = normalize(differentiate(G));
    ExprPtr gEff = generalizedShadow(g, elemId, S);
    ExprPtr Texpr = monomialExpr(sp.T, S);
    ExprPtr F1 = num(0), F2 = num(0);
    switch (sp.caseNo) {
        case 1:
            F2 = neg(shadowExpr(normalize(div2(h, mul2(Texpr, gEff))), elemId, S));
            break;
        case 2: {
            ExprPtr H = integrateExact(h, S, 12);
            if (!H) throw Unsupported("ghost normal form needs a closed antiderivative here");
            F1 = shadowExpr(normalize(div2(H, Texpr)), elemId, S);
            break;
        }
        case 4: {
            ExprPtr hi = generalizedShadow(h, elemId, S);
            ExprPtr den = normalize(mul({gEff, Texpr, add2(num(1), mul2(sp.omega, sp.omega))}));
            F1 = normalize(div2(mul2(hi, sp.omega), den));
            F2 = normalize(neg(div2(hi, den)));
            break;
        }
        default: break;
    }
    GhostNF out;
    out.T = sp.T;
    out.zeta1 = normalize(add({h, neg(differentiate(mul2(Texpr, F1))), mul({Texpr, F2, gEff})}));
    out.zeta2 = normalize(add({neg(differentiate(mul2(Texpr, F2))), neg(mul({Texpr, F1, gEff}))}));
    return out;
}

// ---------------------------------------------------------------------------
// indefinite cancellation
// ---------------------------------------------------------------------------

namespace {

// i-shadow of the whole expansion as a closed bracket expression
ExprPtr shadowBracket(GeneralExpansion& gen, int elemId, Session& S, bool& anyFreeA) {
    std::vector<ExprPtr> parts;
    anyFreeA = false;
    for (auto& src : gen.intSources) {
        if (src.G == nullptr) {
            ExprPtr H = integrateExact(normalize(mulr(src.mult, src.h)), S, 12);
            if (!H) throw Unsupported("shadow test needs closed antiderivatives of base parts");
            parts.push_back(generalizedShadow(H, elemId, S));
            continue;
        }
        ShadowResult sp = shadowPhi(normalize(mulr(src.mult, src.h)), src.G, src.kind, elemId, src.tag, S);
        parts.push_back(normalize(mul2(monomialExpr(sp.T, S), sp.phi)));
        if (sp.hasA) anyFreeA = true;
    }
    for (auto& t : gen.rest.terms) {
        ExprPtr sh = generalizedShadow(t.p, elemId, S);
        if (sh->isZero()) continue;
        std::vector<ExprPtr> fac{sh};
        for (auto& [g, sc] : t.sig.f) {
            const ExprPtr& arg = gen.ctx.gens[static_cast<size_t>(g)];
            if (sc.first > 0) fac.push_back(pow(sin_(arg), Rat(sc.first)));
            if (sc.second > 0) fac.push_back(pow(cos_(arg), Rat(sc.second)));
        }
        parts.push_back(mul(std::move(fac)));
    }
    return normalize(add(std::move(parts)));
}

} // namespace

ZeroShadowReport detectZeroShadow(const ExprPtr& F, int elemId, int cancelBudget, Session& S) {
    ZeroShadowReport rep;
    GeneralExpansion gen = expandGeneral(F, S);
    long inspected = 0;
    for (;;) {
        MergedExpansion::Grade r;
        try {
            r = gen.merged.stepGrade(S);
        } catch (const BudgetExhausted&) {
            r = MergedExpansion::Grade::Done;
        }
        inspected++;
        if (r == MergedExpansion::Grade::Emitted) {
            rep.outcome = ZeroShadowReport::NonzeroAfter;
            rep.k = inspected;
            return rep;
        }
        if (r == MergedExpansion::Grade::Done) break;
        if (gen.merged.consecutiveCancellations() >= cancelBudget) break;
    }
    // direct test: differentiate the shadow candidate and zero-test
    bool anyFreeA = false;
    ExprPtr bracket = shadowBracket(gen, elemId, S, anyFreeA);
    rep.bracket = bracket;
    if (bracket->isZero()) {
        rep.outcome = ZeroShadowReport::ZeroShadow;
        rep.k = inspected;
        rep.bracketDeriv = num(0);
        return rep;
    }
    ExprPtr d = normalize(differentiate(bracket));
    rep.bracketDeriv = d;
    bool derivZero;
    if (!containsTrig(d)) {
        derivZero = isZeroFunc(d, S);
    } else {
        HGCtx ctx2 = gen.ctx;
        HGElem D = toNormalForm(d, ctx2, S);
        derivZero = D.zero();
    }
    if (derivZero && anyFreeA) {
        rep.outcome = ZeroShadowReport::ZeroShadow;
        rep.k = inspected;
        return rep;
    }
    rep.outcome = ZeroShadowReport::Exhausted;
    rep.k = inspected;
    return rep;
}

GeneralExpansion ghostExpansion(const ExprPtr& F, int elemId, Session& S) {
    GeneralExpansion gen = expandGeneral(F, S);
    GeneralExpansion out;
    out.ctx = gen.ctx;
    out.tags = gen.tags;
    for (auto& src : gen.intSources) {
        if (src.G == nullptr) throw Unsupported("ghost continuation of base-field integrals");
        ShadowResult sp = shadowPhi(normalize(mulr(src.mult, src.h)), src.G, src.kind, elemId, src.tag, S);
        if (sp.caseNo != 3)
            throw Unsupported("ghost continuation implemented for deferred-shadow integrals");
        ExprPtr hi = generalizedShadow(normalize(mulr(src.mult, src.h)), elemId, S);
        ExprPtr hGhost = normalize(sub2(mulr(src.mult, src.h), hi));
        if (isZeroFunc(hGhost, S)) continue;
        GeneralSource g2{Rat(1), hGhost, src.kind, src.G, src.tag};
        out.intSources.push_back(g2);
        auto oe = std::make_shared<OscExpansion>(hGhost, src.G, src.kind, 1, S);
        out.merged.addSource(MergedExpansion::Source{[oe](size_t i, Session& S2) { return oe->at(i, S2); }, 0});
    }
    // rest terms: ghost of each coefficient
    HGElem ghostRest;
    for (auto& t : gen.rest.terms) {
        ExprPtr sh = generalizedShadow(t.p, elemId, S);
        ExprPtr gp = normalize(sub2(t.p, sh));
        if (isZeroFunc(gp, S)) continue;
        ghostRest.terms.push_back(HGTerm{gp, t.sig});
    }
    out.rest = ghostRest;
    if (!out.rest.zero()) {
        HGElem restCopy = out.rest;
        HGCtx ctxCopy = out.ctx;
        auto hs = std::make_shared<HGSeries>(restCopy, S);
        auto buf = std::make_shared<std::vector<OscTerm>>();
        auto hsIdx = std::make_shared<size_t>(0);
        out.merged.addSource(MergedExpansion::Source{
            [hs, buf, hsIdx, ctxCopy](size_t i, Session& S2) -> std::optional<OscTerm> {
                while (buf->size() <= i) {
                    auto t = hs->at((*hsIdx)++, S2);
                    if (!t) return std::nullopt;
                    for (auto& piece : linearizeSigma(t->sig, ctxCopy, S2))
                        buf->push_back(OscTerm{mulr(piece.c, t->coeff), piece.trig, piece.arg, t->mono});
                }
                return (*buf)[i];
            },
            0});
    }
    return out;
}

// ---------------------------------------------------------------------------
// second-order equation
// ---------------------------------------------------------------------------

OdeSolution solveOde(const ExprPtr& gIn, const ExprPtr& f, const ExprPtr& K1, const ExprPtr& K2,
                     int termCount, Session& S) {
    ExprPtr g = scaleNormalize(normalize(gIn), S);
    ExprPtr G = integrateExact(g, S, 12);
    if (!G) throw Unsupported("no closed antiderivative for the phase derivative");
    LimitVal lv = limitAtInfinity(G, S);
    if (lv.kind != LimitVal::PosInf) throw DomainError("phase antiderivative must tend to +infinity");
    OdeSolution sol;
    sol.G = G;
    sol.h = normalize(neg(div2(f, mul2(g, g))));
    sol.K1 = K1;
    sol.K2 = K2;
    sol.truncated = false;
    if (!sol.h->isZero()) {
        // y = C*Int(hS) - S*Int(hC) (+ homogeneous): with Int(hS) = f1 S + f2 C
        // this collapses to f2, the stream of cosine coefficients of Int(hS).
        OscExpansion oe(sol.h, G, TrigK::SinK, 1, S);
        for (size_t i = 0; static_cast<int>(sol.terms.size()) < termCount; i++) {
            auto t = oe.at(i, S);
            if (!t) {
                sol.truncated = oe.truncated();
                break;
            }
            if (t->trig != 1) continue; // keep cosine coefficients
            sol.terms.push_back(OscTerm{t->coeff, 2, nullptr, t->g0});
        }
    }
    return sol;
}

} // namespace oscint
