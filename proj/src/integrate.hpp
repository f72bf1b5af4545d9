#pragma once

#include "series.hpp"

namespace oscint {

/// Antiderivative of a base-field element with H' = h maintained exactly:
/// terms are produced by repeated leading-monomial integration, and
/// residual() always equals h - (sum of terms)'. The fixed choice of
/// integration constants makes H -> 0 whenever h is integrable and
/// H -> +-inf (with the eventual sign of h) otherwise.
class BaseIntegral {
  public:
    BaseIntegral(ExprPtr h, Session& S);

    /// Produces one more term; no-op once the residual vanished.
    void step(Session& S);
    /// Ensures n terms (or exactness first); returns the number available.
    size_t ensure(size_t n, Session& S);

    bool exact() const { return exact_; }
    const std::vector<ExprPtr>& terms() const { return terms_; }
    ExprPtr residual() const { return residual_; }
    ExprPtr partialSum() const;
    /// Full closed form when the construction terminated, else nullptr.
    ExprPtr closedForm() const { return exact_ ? partialSum() : nullptr; }

  private:
    std::vector<ExprPtr> terms_;
    ExprPtr residual_;
    bool exact_ = false;
};

/// Closed-form antiderivative within maxSteps leading-term peels, or nullptr.
ExprPtr integrateExact(const ExprPtr& h, Session& S, int maxSteps = 8);

/// One leading-term antiderivative candidate u with h - u' strictly smaller
/// in gamma0 than h. Grows the scale when a new iterated logarithm appears.
ExprPtr integrateLeadingTerm(const ExprPtr& h, Session& S);

} // namespace oscint
