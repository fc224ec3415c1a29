#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mdins/distributions.hpp"
#include "mdins/errors.hpp"

namespace mdins {

enum class DistortionClass {
  Deviation,  ///< h(0) = h(1) = 0, concave
  Premium,    ///< h(0) = 0, h(1) = 1, non-decreasing
};

enum class DistortionKind {
  Gini,
  MeanAbsolute,
  Range,
  InterESRange,
  ESDeviation,
  ESPremium,
  VaRPremium,
  Custom,
};

/// A point mass of the Stieltjes measure dh at level t.
struct DistortionAtom {
  double level;
  double mass;
};

/// Distortion h on [0, 1] for signed Choquet integrals int h(S_X(x)) dx.
class DistortionFunction {
 public:
  using Fn = std::function<double(double)>;

  static DistortionFunction gini() { return DistortionFunction(DistortionKind::Gini, 0.0); }
  static DistortionFunction mean_absolute() { return DistortionFunction(DistortionKind::MeanAbsolute, 0.0); }
  static DistortionFunction range() { return DistortionFunction(DistortionKind::Range, 0.0); }
  static DistortionFunction inter_es_range(double alpha) {
    check_level(alpha, "inter-ES range level");
    return DistortionFunction(DistortionKind::InterESRange, alpha);
  }
  static DistortionFunction es_deviation(double alpha) {
    check_level(alpha, "ES deviation level");
    return DistortionFunction(DistortionKind::ESDeviation, alpha);
  }
  static DistortionFunction es_premium(double p) {
    check_level(p, "ES premium level");
    return DistortionFunction(DistortionKind::ESPremium, p);
  }
  static DistortionFunction var_premium(double p) {
    check_level(p, "VaR premium level");
    return DistortionFunction(DistortionKind::VaRPremium, p);
  }

  /// User-supplied h. The second derivative at zero decides solution
  /// uniqueness and must be given explicitly.
  static DistortionFunction custom(std::string name, DistortionClass cls, Fn h, Fn derivative,
                                   double second_derivative_at_zero) {
    if (!h || !derivative) throw DomainError("custom distortion needs h and h'");
    const double target = cls == DistortionClass::Deviation ? 0.0 : 1.0;
    if (std::abs(h(0.0)) > 1e-12 || std::abs(h(1.0) - target) > 1e-12) {
      throw DomainError("custom distortion '" + name + "' violates its endpoint conditions");
    }
    DistortionFunction d(DistortionKind::Custom, 0.0);
    d.custom_ = std::make_shared<CustomParts>(CustomParts{std::move(name), cls, std::move(h),
                                                          std::move(derivative), second_derivative_at_zero});
    return d;
  }

  DistortionKind kind() const { return kind_; }
  double parameter() const { return param_; }

  DistortionClass endpoint_class() const {
    switch (kind_) {
      case DistortionKind::ESPremium:
      case DistortionKind::VaRPremium:
        return DistortionClass::Premium;
      case DistortionKind::Custom:
        return custom_->cls;
      default:
        return DistortionClass::Deviation;
    }
  }

  std::string name() const {
    switch (kind_) {
      case DistortionKind::Gini: return "gini";
      case DistortionKind::MeanAbsolute: return "mean_absolute";
      case DistortionKind::Range: return "range";
      case DistortionKind::InterESRange: return "inter_es_range";
      case DistortionKind::ESDeviation: return "es_deviation";
      case DistortionKind::ESPremium: return "es_premium";
      case DistortionKind::VaRPremium: return "var_premium";
      case DistortionKind::Custom: return custom_->name;
    }
    return "unknown";
  }

  double operator()(double t) const {
    const double a = param_;
    switch (kind_) {
      case DistortionKind::Gini: return t - t * t;
      case DistortionKind::MeanAbsolute: return std::min(t, 1.0 - t);
      case DistortionKind::Range: return (t > 0.0 && t < 1.0) ? 1.0 : 0.0;
      case DistortionKind::InterESRange:
        return std::min(t / (1.0 - a), 1.0) + std::min((a - t) / (1.0 - a), 0.0);
      case DistortionKind::ESDeviation: return std::min(a * t / (1.0 - a), 1.0 - t);
      case DistortionKind::ESPremium: return std::min(t / (1.0 - a), 1.0);
      case DistortionKind::VaRPremium: return t > 1.0 - a ? 1.0 : 0.0;
      case DistortionKind::Custom: return custom_->h(t);
    }
    return 0.0;
  }

  /// h'(t), taking the right derivative at kinks; zero on flat pieces of
  /// step distortions (their mass is reported by atoms()).
  double derivative(double t) const {
    const double a = param_;
    switch (kind_) {
      case DistortionKind::Gini: return 1.0 - 2.0 * t;
      case DistortionKind::MeanAbsolute: return t < 0.5 ? 1.0 : -1.0;
      case DistortionKind::Range: return 0.0;
      case DistortionKind::InterESRange: {
        double d = t < 1.0 - a ? 1.0 / (1.0 - a) : 0.0;
        if (t >= a) d -= 1.0 / (1.0 - a);
        return d;
      }
      case DistortionKind::ESDeviation: return t < 1.0 - a ? a / (1.0 - a) : -1.0;
      case DistortionKind::ESPremium: return t < 1.0 - a ? 1.0 / (1.0 - a) : 0.0;
      case DistortionKind::VaRPremium: return 0.0;
      case DistortionKind::Custom: return custom_->derivative(t);
    }
    return 0.0;
  }

  std::vector<DistortionAtom> atoms() const {
    if (kind_ == DistortionKind::Range) return {{0.0, 1.0}, {1.0, -1.0}};
    if (kind_ == DistortionKind::VaRPremium) return {{1.0 - param_, 1.0}};
    return {};
  }

  /// Levels t where h' jumps.
  std::vector<double> kinks() const {
    const double a = param_;
    switch (kind_) {
      case DistortionKind::MeanAbsolute: return {0.5};
      case DistortionKind::InterESRange: return {1.0 - a, a};
      case DistortionKind::ESDeviation:
      case DistortionKind::ESPremium:
      case DistortionKind::VaRPremium: return {1.0 - a};
      default: return {};
    }
  }

  bool continuous() const { return kind_ != DistortionKind::Range && kind_ != DistortionKind::VaRPremium; }

  /// h'(0+), infinite for the range.
  double slope_at_zero() const {
    if (kind_ == DistortionKind::Range) return kInfinity;
    if (kind_ == DistortionKind::VaRPremium) return 0.0;
    return derivative(0.0);
  }

  double second_derivative_at_zero() const {
    switch (kind_) {
      case DistortionKind::Gini: return -2.0;
      case DistortionKind::Custom: return custom_->second_derivative_at_zero;
      default: return 0.0;
    }
  }

  /// h(t) / t, extended by h'(0+) at t = 0. The solvers divide first-order
  /// conditions by S_X so that their sign survives S_X -> 0 in the tail.
  double ratio(double t) const {
    if (t <= 0.0) return slope_at_zero();
    switch (kind_) {
      case DistortionKind::Gini: return 1.0 - t;
      default: return (*this)(t) / t;
    }
  }

 private:
  struct CustomParts {
    std::string name;
    DistortionClass cls;
    Fn h;
    Fn derivative;
    double second_derivative_at_zero;
  };

  DistortionFunction(DistortionKind kind, double param) : kind_(kind), param_(param) {}

  static void check_level(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError(std::string(what) + " must lie in (0, 1)");
  }

  DistortionKind kind_;
  double param_;
  std::shared_ptr<const CustomParts> custom_;
};

/// Maps the kinks of h to loss values x = VaR_{1-t}(X), where h(S_X(.)) kinks.
inline std::vector<double> kink_locations(const DistortionFunction& h, const LossDistribution& loss) {
  std::vector<double> xs;
  for (double t : h.kinks()) {
    if (t > 0.0 && t < 1.0) xs.push_back(loss.quantile(1.0 - t));
  }
  return xs;
}

enum class PenaltyKind { LinearQuadratic, Log, Custom };

/// Increasing convex penalty g with g(0) = 0.
class PenaltyFunction {
 public:
  using Fn = std::function<double(double)>;

  /// g(x) = alpha x + beta x^2.
  static PenaltyFunction linear_quadratic(double alpha, double beta) {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw DomainError("penalty coefficients must be non-negative");
    if (alpha == 0.0 && beta == 0.0) throw DomainError("penalty needs alpha > 0 or beta > 0");
    PenaltyFunction g(PenaltyKind::LinearQuadratic);
    g.alpha_ = alpha;
    g.beta_ = beta;
    return g;
  }

  /// g(x) = x - log(1 + x).
  static PenaltyFunction log_penalty() { return PenaltyFunction(PenaltyKind::Log); }

  static PenaltyFunction custom(std::string name, Fn g, Fn derivative) {
    if (!g || !derivative) throw DomainError("custom penalty needs g and g'");
    if (std::abs(g(0.0)) > 1e-12) throw DomainError("custom penalty '" + name + "' must satisfy g(0) = 0");
    PenaltyFunction p(PenaltyKind::Custom);
    p.name_ = std::move(name);
    p.g_ = std::move(g);
    p.dg_ = std::move(derivative);
    return p;
  }

  PenaltyKind kind() const { return kind_; }
  bool is_linear_quadratic() const { return kind_ == PenaltyKind::LinearQuadratic; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  std::string name() const {
    switch (kind_) {
      case PenaltyKind::LinearQuadratic: return "linear_quadratic";
      case PenaltyKind::Log: return "log";
      case PenaltyKind::Custom: return name_;
    }
    return "unknown";
  }

  double operator()(double x) const {
    switch (kind_) {
      case PenaltyKind::LinearQuadratic: return alpha_ * x + beta_ * x * x;
      case PenaltyKind::Log: return x - std::log1p(x);
      case PenaltyKind::Custom: return g_(x);
    }
    return 0.0;
  }

  double derivative(double x) const {
    switch (kind_) {
      case PenaltyKind::LinearQuadratic: return alpha_ + 2.0 * beta_ * x;
      case PenaltyKind::Log: return x / (1.0 + x);
      case PenaltyKind::Custom: return dg_(x);
    }
    return 0.0;
  }

 private:
  explicit PenaltyFunction(PenaltyKind kind) : kind_(kind) {}

  PenaltyKind kind_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::string name_;
  Fn g_;
  Fn dg_;
};

struct StandardDeviationTag {};

/// Either a signed Choquet integral D_h or the standard deviation.
class DeviationMeasure {
 public:
  static DeviationMeasure choquet(DistortionFunction h) {
    if (h.endpoint_class() != DistortionClass::Deviation) {
      throw DomainError("deviation measure needs a distortion with h(0) = h(1) = 0");
    }
    return DeviationMeasure(std::move(h));
  }
  static DeviationMeasure standard_deviation() { return DeviationMeasure(StandardDeviationTag{}); }

  bool is_choquet() const { return std::holds_alternative<DistortionFunction>(kind_); }
  const DistortionFunction& distortion() const {
    if (!is_choquet()) throw UnsupportedError("standard deviation has no distortion function");
    return std::get<DistortionFunction>(kind_);
  }
  std::string name() const { return is_choquet() ? distortion().name() : "sd"; }

 private:
  explicit DeviationMeasure(std::variant<DistortionFunction, StandardDeviationTag> k) : kind_(std::move(k)) {}
  std::variant<DistortionFunction, StandardDeviationTag> kind_;
};

/// D_h(X) = int_0^M h(S_X(x)) dx.
inline double choquet(const DistortionFunction& h, const LossDistribution& loss) {
  if (h.kind() == DistortionKind::Range && loss.kind() != DistributionKind::Empirical) {
    if (!loss.bounded()) throw NumericError("non-convergent integral: the range of an unbounded loss is infinite");
    return loss.ess_sup() - loss.ess_inf();
  }
  if (h.kind() == DistortionKind::VaRPremium) {
    return loss.quantile(h.parameter());
  }
  const auto kinks = kink_locations(h, loss);
  const double value = loss.integrate_transform([&h](double s) { return h(s); }, 0.0, kInfinity, kinks);
  if (!std::isfinite(value)) throw NumericError("non-convergent Choquet integral for " + h.name());
  return value;
}

/// Quantile form int_0^1 VaR_{1-t}(X) dh(t), including point masses of dh.
inline double choquet_quantile_form(const DistortionFunction& h, const LossDistribution& loss) {
  auto var_upper = [&loss](double t) {
    if (t <= 0.0) return loss.bounded() ? loss.ess_sup() : kInfinity;
    if (t >= 1.0) return loss.ess_inf();
    return loss.quantile(1.0 - t);
  };
  double total = 0.0;
  for (const auto& atom : h.atoms()) total += atom.mass * var_upper(atom.level);

  std::vector<double> cuts = h.kinks();
  double lo = 0.0;
  if (!loss.bounded()) {
    lo = kTailTruncation;
    for (double t = 1e-9; t < 1.0; t *= 10.0) cuts.push_back(t);
  }
  if (const auto* emp = std::get_if<LossDistribution::Empirical>(&loss.model())) {
    const auto n = emp->sorted.size();
    for (std::size_t k = 1; k < n; ++k) cuts.push_back(static_cast<double>(k) / static_cast<double>(n));
  }
  auto integrand = [&](double t) { return var_upper(t) * h.derivative(t); };
  total += quadrature::simpson_split(integrand, lo, 1.0, cuts);
  if (!std::isfinite(total)) throw NumericError("non-convergent quantile-form integral for " + h.name());
  return total;
}

inline double standard_deviation(const LossDistribution& loss) {
  const double m = loss.mean();
  return std::sqrt(std::max(0.0, loss.second_moment() - m * m));
}

inline double value_at_risk(const LossDistribution& loss, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("VaR level must lie in (0, 1)");
  return loss.quantile(p);
}

/// ES_p = VaR_p + E[(X - VaR_p)_+] / (1 - p).
inline double expected_shortfall(const LossDistribution& loss, double p) {
  const double q = value_at_risk(loss, p);
  return q + loss.stop_loss(q) / (1.0 - p);
}

inline double evaluate(const DeviationMeasure& d, const LossDistribution& loss) {
  return d.is_choquet() ? choquet(d.distortion(), loss) : standard_deviation(loss);
}

/// MD_g(X) = g(D(X)) + E[X].
inline double md_g(const PenaltyFunction& g, const DeviationMeasure& d, const LossDistribution& loss) {
  return g(evaluate(d, loss)) + loss.mean();
}

/// alpha + 2 beta D(X) <= 1: g' stays within 1 on every retained loss, which
/// keeps MD_g monotone over the admissible contracts.
inline bool check_monotonicity_constraint(const PenaltyFunction& g, const DeviationMeasure& d,
                                          const LossDistribution& loss) {
  if (!g.is_linear_quadratic()) throw UnsupportedError("monotonicity check needs a linear-quadratic penalty");
  return g.alpha() + 2.0 * g.beta() * evaluate(d, loss) <= 1.0;
}

}  // namespace mdins
