#pragma once

#include <string>

#include "oscexp.hpp"
#include "verify.hpp"

namespace oscint {

/// JSON rows for the terms of a merged expansion, following the external
/// term schema {gamma0, coeff, trig:{fn,arg}, constants:[...]}.
std::string expansionJson(GeneralExpansion& gen, int terms, Session& S, bool* truncated = nullptr);
std::string expansionText(GeneralExpansion& gen, int terms, Session& S, bool* truncated = nullptr);
std::string expansionLatex(GeneralExpansion& gen, int terms, Session& S, bool* truncated = nullptr);

/// HGElem external JSON: [{coeff, trig:[{arg, fn, pow}]}].
std::string hgElemJson(const HGElem& a, const HGCtx& ctx);

/// Verification report rows {x, n, remainder, bound, ratio, pass}.
std::string checkReportJson(const CheckReport& rep);

std::string caseHistoryJson(const std::vector<CaseEvent>& hist);

} // namespace oscint
