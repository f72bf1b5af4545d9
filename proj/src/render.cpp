#include "render.hpp"

#include <json.hpp>

#include "oracle.hpp"

namespace oscint {

using nlohmann::json;

namespace {

std::string ratStr(const Rat& r) {
    return r.get_str();
}

json seriesJsonRec(const ExprPtr& e, Session& S, int maxTerms) {
    int lr = levelRank(e, S);
    if (lr < 0) {
        if (e->isNum()) return json{{"rat", ratStr(e->num)}};
        return json{{"const", print(e)}};
    }
    json out;
    out["level"] = lr + 1; // 1-based scale position, slowest first
    out["element"] = S.scale.byRank(lr).name();
    json terms = json::array();
    Stream s = expandIn(e, lr, S);
    bool truncated = false;
    for (int i = 0; i < maxTerms; i++) {
        std::optional<Term> t;
        try {
            t = s.at(static_cast<size_t>(i), S);
        } catch (const BudgetExhausted&) {
            truncated = true;
            break;
        }
        if (!t) break;
        if (i + 1 == maxTerms) {
            // can't tell whether more terms follow without another demand
            try {
                truncated = s.at(static_cast<size_t>(i) + 1, S).has_value();
            } catch (const BudgetExhausted&) {
                truncated = true;
            }
        }
        json term;
        term["exponent"] = ratStr(t->exponent);
        term["coeff"] = seriesJsonRec(t->coeff, S, maxTerms);
        terms.push_back(term);
    }
    out["terms"] = terms;
    out["truncated"] = truncated;
    return out;
}

json termRow(const OscTerm& t, const std::vector<int>& tags, Session& S) {
    json row;
    row["gamma0"] = monomialStr(t.g0, S);
    row["coeff"] = print(t.coeff);
    json trig;
    if (t.trig == 2) {
        trig["fn"] = "1";
    } else {
        trig["fn"] = t.trig == 0 ? "sin" : "cos";
        trig["arg"] = print(t.phase);
    }
    row["trig"] = trig;
    json cs = json::array();
    for (int tg : tags) cs.push_back("A" + std::to_string(tg));
    row["constants"] = cs;
    return row;
}

std::vector<OscTerm> collectTerms(GeneralExpansion& gen, int terms, Session& S, bool* truncated) {
    std::vector<OscTerm> out;
    bool trunc = false;
    for (int i = 0; i < terms; i++) {
        std::optional<OscTerm> t;
        try {
            t = gen.merged.at(static_cast<size_t>(i), S);
        } catch (const BudgetExhausted&) {
            trunc = true;
            break;
        }
        if (!t) break;
        out.push_back(*t);
    }
    if (truncated) *truncated = trunc;
    return out;
}

std::string termText(const OscTerm& t) {
    std::string s = print(t.coeff);
    bool needParen = t.coeff->k == K::Sum;
    if (needParen) s = "(" + s + ")";
    if (t.trig != 2) s += std::string("*") + (t.trig == 0 ? "sin(" : "cos(") + print(t.phase) + ")";
    return s;
}

} // namespace

std::string seriesJson(const ExprPtr& e, Session& S, int maxTerms) {
    ExprPtr en = scaleNormalize(normalize(e), S);
    return seriesJsonRec(en, S, maxTerms).dump();
}

std::string expansionJson(GeneralExpansion& gen, int terms, Session& S, bool* truncated) {
    bool trunc = false;
    auto ts = collectTerms(gen, terms, S, &trunc);
    json out;
    json rows = json::array();
    for (auto& t : ts) rows.push_back(termRow(t, gen.tags, S));
    out["terms"] = rows;
    out["truncated"] = trunc;
    json scale = json::array();
    for (auto& el : S.scale.elems) scale.push_back(el.name());
    out["scale"] = scale;
    if (truncated) *truncated = trunc;
    return out.dump();
}

std::string expansionText(GeneralExpansion& gen, int terms, Session& S, bool* truncated) {
    bool trunc = false;
    auto ts = collectTerms(gen, terms, S, &trunc);
    std::string out;
    for (size_t i = 0; i < ts.size(); i++) {
        std::string s = termText(ts[i]);
        if (i == 0) {
            out = s;
        } else if (!s.empty() && s[0] == '-') {
            out += " - " + s.substr(1);
        } else {
            out += " + " + s;
        }
    }
    if (ts.empty()) out = "0";
    if (trunc) out += " + ... (truncated)";
    else out += " + ...";
    if (truncated) *truncated = trunc;
    return out;
}

std::string expansionLatex(GeneralExpansion& gen, int terms, Session& S, bool* truncated) {
    bool trunc = false;
    auto ts = collectTerms(gen, terms, S, &trunc);
    std::string out;
    for (size_t i = 0; i < ts.size(); i++) {
        ExprPtr t = ts[i].coeff;
        std::string s = printLatex(t);
        if (ts[i].coeff->k == K::Sum) s = "\\left(" + s + "\\right)";
        if (ts[i].trig != 2)
            s += std::string(ts[i].trig == 0 ? "\\sin" : "\\cos") + "\\left(" + printLatex(ts[i].phase) + "\\right)";
        if (i == 0) {
            out = s;
        } else if (!s.empty() && s[0] == '-') {
            out += " - " + s.substr(1);
        } else {
            out += " + " + s;
        }
    }
    if (ts.empty()) out = "0";
    out += " + \\cdots";
    if (truncated) *truncated = trunc;
    return out;
}

std::string hgElemJson(const HGElem& a, const HGCtx& ctx) {
    json rows = json::array();
    for (auto& t : a.terms) {
        json row;
        row["coeff"] = print(t.p);
        json trig = json::array();
        for (auto& [g, sc] : t.sig.f) {
            if (sc.first > 0)
                trig.push_back(json{{"arg", print(ctx.gens[static_cast<size_t>(g)])},
                                    {"fn", "sin"},
                                    {"pow", sc.first}});
            if (sc.second > 0)
                trig.push_back(json{{"arg", print(ctx.gens[static_cast<size_t>(g)])},
                                    {"fn", "cos"},
                                    {"pow", sc.second}});
        }
        row["trig"] = trig;
        rows.push_back(row);
    }
    return rows.dump();
}

std::string checkReportJson(const CheckReport& rep) {
    json rows = json::array();
    for (auto& r : rep.rows) {
        rows.push_back(json{{"x", r.x},
                            {"n", r.n},
                            {"remainder", r.remainder},
                            {"bound", r.bound},
                            {"ratio", r.ratio},
                            {"pass", r.pass}});
    }
    json out;
    out["rows"] = rows;
    out["pass"] = rep.allPass;
    return out.dump();
}

std::string caseHistoryJson(const std::vector<CaseEvent>& hist) {
    json rows = json::array();
    for (auto& ev : hist)
        rows.push_back(json{{"step", ev.step}, {"case", ev.what}, {"switched", ev.switched}});
    return rows.dump();
}

} // namespace oscint
