#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>

#include "mdins/distributions.hpp"
#include "mdins/errors.hpp"
#include "mdins/indemnity.hpp"
#include "mdins/measures.hpp"

namespace mdins {

enum class PremiumKind { ExpectedValue, VaR, ES, Distortion };

/// Premium principle Pi(I(X)).
class PremiumPrinciple {
 public:
  /// (1 + theta) E[I(X)].
  static PremiumPrinciple expected_value(double theta) {
    if (!(theta > 0.0)) throw DomainError("safety loading must be positive");
    return PremiumPrinciple(PremiumKind::ExpectedValue, theta, std::nullopt);
  }
  static PremiumPrinciple value_at_risk(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("VaR premium level must lie in (0, 1)");
    return PremiumPrinciple(PremiumKind::VaR, p, std::nullopt);
  }
  static PremiumPrinciple expected_shortfall(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("ES premium level must lie in (0, 1)");
    return PremiumPrinciple(PremiumKind::ES, p, std::nullopt);
  }
  static PremiumPrinciple distortion(DistortionFunction h) {
    if (h.endpoint_class() != DistortionClass::Premium) {
      throw DomainError("distortion premium needs h(0) = 0 and h(1) = 1");
    }
    return PremiumPrinciple(PremiumKind::Distortion, 0.0, std::move(h));
  }

  PremiumKind kind() const { return kind_; }
  double loading() const { return param_; }
  double level() const { return param_; }
  const DistortionFunction& distortion_function() const { return *h_; }

  std::string name() const {
    switch (kind_) {
      case PremiumKind::ExpectedValue: return "expected_value";
      case PremiumKind::VaR: return "var";
      case PremiumKind::ES: return "es";
      case PremiumKind::Distortion: return "distortion";
    }
    return "unknown";
  }

  /// The distortion h2 with Pi = int h2(S_X) q. Expected value is h2(t) = (1 + theta) t.
  DistortionFunction as_distortion() const {
    switch (kind_) {
      case PremiumKind::VaR: return DistortionFunction::var_premium(param_);
      case PremiumKind::ES: return DistortionFunction::es_premium(param_);
      case PremiumKind::Distortion: return *h_;
      case PremiumKind::ExpectedValue: break;
    }
    throw UnsupportedError("expected-value premium is not a normalised distortion");
  }

 private:
  PremiumPrinciple(PremiumKind kind, double param, std::optional<DistortionFunction> h)
      : kind_(kind), param_(param), h_(std::move(h)) {}

  PremiumKind kind_;
  double param_;
  std::optional<DistortionFunction> h_;
};

namespace detail {

/// (1/(1-p)) int_p^1 I(VaR_s) ds, written as int min(S/(1-p), 1) q dx: the
/// weight is 1 below x_p and S/(1-p) above it.
inline double es_premium(const LossDistribution& loss, const Indemnity& ind, double p) {
  const double xp = loss.quantile(p);
  double total = 0.0;
  for (const auto& s : ind.segments()) {
    if (s.slope == 0.0) continue;
    const double flat = std::max(0.0, std::min(s.hi, xp) - s.lo);
    const double tail = survival_integral(loss, std::max(s.lo, xp), std::max(s.hi, xp)) / (1.0 - p);
    total += s.slope * (flat + tail);
  }
  return total;
}

}  // namespace detail

inline double premium(const PremiumPrinciple& principle, const LossDistribution& loss, const Indemnity& ind) {
  switch (principle.kind()) {
    case PremiumKind::ExpectedValue:
      return (1.0 + principle.loading()) * expected_indemnity(loss, ind);
    case PremiumKind::VaR:
      // I is non-decreasing, so VaR_p(I(X)) = I(VaR_p(X)).
      return ind(loss.quantile(principle.level()));
    case PremiumKind::ES:
      return detail::es_premium(loss, ind, principle.level());
    case PremiumKind::Distortion: {
      const auto& h = principle.distortion_function();
      if (h.kind() == DistortionKind::VaRPremium) return ind(loss.quantile(h.parameter()));
      if (h.kind() == DistortionKind::ESPremium) return detail::es_premium(loss, ind, h.parameter());
      const auto kinks = kink_locations(h, loss);
      return weighted_transform(loss, ind, [&h](double s) { return h(s); }, true, kinks);
    }
  }
  return 0.0;
}

}  // namespace mdins
