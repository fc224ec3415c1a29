#pragma once

#include <cmath>
#include <vector>

#include "mdins/distributions.hpp"
#include "mdins/errors.hpp"
#include "mdins/indemnity.hpp"
#include "mdins/measures.hpp"
#include "mdins/premiums.hpp"

namespace mdins {

/// D_h(X - I(X)) = int h(S_X)(1 - q) by comonotonic additivity.
inline double retained_deviation(const DistortionFunction& h, const LossDistribution& loss, const Indemnity& ind) {
  if (h.endpoint_class() != DistortionClass::Deviation) {
    throw DomainError("retained deviation needs a deviation-class distortion");
  }
  if (h.kind() == DistortionKind::Range && loss.kind() != DistributionKind::Empirical) {
    // Range of the retained loss: total length of the uncovered region in (ess-inf, M).
    double total = 0.0;
    const double lo = loss.ess_inf();
    const double hi = loss.ess_sup();
    for (const auto& s : ind.segments()) {
      const double a = std::max(s.lo, lo);
      const double b = std::min(s.hi, hi);
      if (b > a) total += (1.0 - s.slope) * (b - a);
    }
    if (!std::isfinite(total)) throw NumericError("non-convergent integral: retained range is infinite");
    return total;
  }
  const auto kinks = kink_locations(h, loss);
  return weighted_transform(loss, ind, [&h](double s) { return h(s); }, false, kinks);
}

/// The ceded counterpart int h(S_X) q.
inline double ceded_deviation(const DistortionFunction& h, const LossDistribution& loss, const Indemnity& ind) {
  const auto kinks = kink_locations(h, loss);
  return weighted_transform(loss, ind, [&h](double s) { return h(s); }, true, kinks);
}

/// SD(X ^ d) = sqrt(w2(d) - w1(d)^2).
inline double retained_sd(const LossDistribution& loss, double deductible) {
  return std::sqrt(loss.truncated_moments(deductible).variance());
}

/// D(X - I(X)) for either deviation family. Standard deviation is only
/// available in closed form for stop-loss contracts.
inline double retained_deviation(const DeviationMeasure& d, const LossDistribution& loss, const Indemnity& ind) {
  if (d.is_choquet()) return retained_deviation(d.distortion(), loss, ind);
  if (ind.form() != IndemnityForm::StopLoss) {
    throw UnsupportedError("standard deviation of the retained loss is only evaluated for stop-loss contracts");
  }
  return retained_sd(loss, ind.thresholds()[0]);
}

/// MD_g(X - I(X) + Pi(I(X))) = g(D(X - I(X))) + E[X] - E[I(X)] + Pi(I(X)).
inline double objective(const PenaltyFunction& g, const DeviationMeasure& d, const LossDistribution& loss,
                        const Indemnity& ind, const PremiumPrinciple& principle) {
  return g(retained_deviation(d, loss, ind)) + loss.mean() - expected_indemnity(loss, ind) +
         premium(principle, loss, ind);
}

}  // namespace mdins
