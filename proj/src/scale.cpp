#include "scale.hpp"

namespace oscint {

std::string ScaleElem::name() const {
    if (kind == ElemKind::IterLog) {
        if (k == 0) return "x^-1";
        std::string s = "log";
        if (k > 1) s += std::to_string(k);
        return s + "(x)^-1";
    }
    return "exp(-(" + print(L) + "))";
}

int Scale::rankOf(int id) const {
    for (size_t i = 0; i < elems.size(); i++)
        if (elems[i].id == id) return static_cast<int>(i);
    throw Error("unknown scale element id");
}

const ScaleElem& Scale::byId(int id) const {
    for (auto& e : elems)
        if (e.id == id) return e;
    throw Error("unknown scale element id");
}

std::optional<int> Scale::findIterLog(int k) const {
    for (auto& e : elems)
        if (e.kind == ElemKind::IterLog && e.k == k) return e.id;
    return std::nullopt;
}

Monomial Monomial::mulM(const Monomial& o) const {
    Monomial r = *this;
    for (auto& [id, q] : o.e) {
        r.e[id] += q;
        if (r.e[id] == 0) r.e.erase(id);
    }
    return r;
}

Monomial Monomial::divM(const Monomial& o) const { return mulM(o.powM(Rat(-1))); }

Monomial Monomial::powM(const Rat& q) const {
    Monomial r;
    if (q == 0) return r;
    for (auto& [id, p] : e) r.e[id] = p * q;
    return r;
}

} // namespace oscint
