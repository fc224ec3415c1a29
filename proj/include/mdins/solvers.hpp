#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mdins/contracts.hpp"
#include "mdins/distributions.hpp"
#include "mdins/errors.hpp"
#include "mdins/indemnity.hpp"
#include "mdins/measures.hpp"
#include "mdins/premiums.hpp"

namespace mdins {

struct Multipliers {
  double lambda1 = 0.0;  ///< multiplier of the deviation level constraint
  double lambda2 = 0.0;  ///< multiplier of the premium budget
};

struct Diagnostics {
  int iterations = 0;
  double residual = 0.0;  ///< first-order residual at the returned thresholds
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  bool binding = false;
  bool degenerate_tie = false;
  std::vector<std::string> notes;
};

struct OptimalContract {
  Indemnity contract;
  double objective_value = 0.0;
  double premium = 0.0;
  std::optional<Multipliers> multipliers;
  bool unique = false;
  Diagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// Sub-level sets

struct SublevelOptions {
  int scan_points = 512;
  double relative_tolerance = 1e-10;
};

/// Extent of {x in [lo, hi] : condition(x) <= 0} as seen by a uniform scan.
struct SublevelSet {
  bool empty = true;
  double inf = 0.0;
  double sup = 0.0;
};

namespace detail {

template <class Cond>
double checked(Cond& condition, double x) {
  const double v = condition(x);
  if (std::isnan(v)) {
    std::ostringstream os;
    os << "condition evaluated to NaN at x = " << x;
    throw NumericError(os.str());
  }
  return v;
}

/// Shrinks [in, out] (condition(in) <= 0 < condition(out)) to the crossing.
template <class Cond>
double bisect_crossing(Cond& condition, double in, double out, double width) {
  while (std::abs(out - in) > width) {
    const double mid = 0.5 * (in + out);
    if (mid == in || mid == out) break;
    if (checked(condition, mid) <= 0.0) in = mid;
    else out = mid;
  }
  return in;
}

}  // namespace detail

/// Scans `scan_points` equal cells and refines the first and the last
/// non-positive point by bisection to relative_tolerance * (hi - lo).
template <class Cond>
SublevelSet scan_sublevel(Cond&& condition, double lo, double hi, const SublevelOptions& opts = {}) {
  SublevelSet out;
  if (!(hi >= lo)) throw DomainError("sub-level scan needs lo <= hi");
  if (hi == lo) {
    if (detail::checked(condition, lo) <= 0.0) out = {false, lo, lo};
    return out;
  }
  const int n = std::max(2, opts.scan_points);
  const double step = (hi - lo) / n;
  const double width = opts.relative_tolerance * (hi - lo);
  auto at = [&](int i) { return i == n ? hi : lo + step * i; };

  std::vector<double> values(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) values[i] = detail::checked(condition, at(i));

  int first = -1;
  int last = -1;
  for (int i = 0; i <= n; ++i) {
    if (values[i] <= 0.0) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0) return out;
  out.empty = false;
  out.inf = first == 0 ? lo : detail::bisect_crossing(condition, at(first), at(first - 1), width);
  out.sup = last == n ? hi : detail::bisect_crossing(condition, at(last), at(last + 1), width);
  return out;
}

/// sup{x in [lo, hi] : condition(x) <= 0}, with sup of the empty set = lo.
template <class Cond>
double sublevel_sup(Cond&& condition, double lo, double hi, const SublevelOptions& opts = {}) {
  const auto set = scan_sublevel(condition, lo, hi, opts);
  return set.empty ? lo : set.sup;
}

/// inf{x in [lo, hi] : condition(x) <= 0}, or nullopt for the empty set.
template <class Cond>
std::optional<double> sublevel_inf(Cond&& condition, double lo, double hi, const SublevelOptions& opts = {}) {
  const auto set = scan_sublevel(condition, lo, hi, opts);
  if (set.empty) return std::nullopt;
  return set.inf;
}

// ---------------------------------------------------------------------------
// Shared helpers

/// Right end of every sup-set scan: M, or quantile(1 - 1e-8) when M = inf.
inline double scan_limit(const LossDistribution& loss) {
  return loss.bounded() ? loss.ess_sup() : loss.quantile(1.0 - 1e-8);
}

/// A scan that reaches the right edge of unbounded support means no cover.
inline double apply_sentinel(const LossDistribution& loss, double x, double edge) {
  return (!loss.bounded() && x >= edge) ? kInfinity : x;
}

/// int_a^b h(S_X(x)) dx.
inline double distorted_integral(const DistortionFunction& h, const LossDistribution& loss, double a, double b) {
  if (!(b > a)) return 0.0;
  const auto kinks = kink_locations(h, loss);
  return loss.integrate_transform([&h](double s) { return h(s); }, a, b, kinks);
}

inline void require_deviation(const DistortionFunction& h) {
  if (h.endpoint_class() != DistortionClass::Deviation) {
    throw DomainError("deviation distortion must satisfy h(0) = h(1) = 0");
  }
}

inline OptimalContract finish(Indemnity contract, const PenaltyFunction& g, const DeviationMeasure& d,
                              const LossDistribution& loss, const PremiumPrinciple& principle) {
  OptimalContract out{contract, 0.0, 0.0, std::nullopt, false, {}};
  out.premium = premium(principle, loss, contract);
  out.objective_value = objective(g, d, loss, contract, principle);
  return out;
}

// ---------------------------------------------------------------------------
// Expected-value premium, Choquet deviation

/// F'(d) / S_X(d) = g'(int_0^d h(S_X)) h(S_X(d)) / S_X(d) - theta.
inline double evpp_condition(const PenaltyFunction& g, const DistortionFunction& h, const LossDistribution& loss,
                             double theta, double x, double extra_loading = 0.0) {
  const double retained = distorted_integral(h, loss, 0.0, x);
  return g.derivative(retained) * h.ratio(loss.survival(x)) - theta - extra_loading;
}

/// Optimal stop-loss contract for min g(D_h(X - I)) + E[X] + theta E[I].
///
/// d* = sup{x : g'(int_0^x h(S_X)) h(S_X(x)) - theta S_X(x) <= 0}; d* = M
/// means no insurance. When the objective is flat between an interior
/// crossing and M (possible when h''(0) = 0) the interior point is returned
/// and flagged.
inline OptimalContract solve_evpp_choquet(const PenaltyFunction& g, const DistortionFunction& h,
                                          const LossDistribution& loss, double theta) {
  require_deviation(h);
  const auto principle = PremiumPrinciple::expected_value(theta);
  const auto deviation = DeviationMeasure::choquet(h);
  const double edge = scan_limit(loss);
  auto condition = [&](double x) { return evpp_condition(g, h, loss, theta, x); };

  const auto set = scan_sublevel(condition, 0.0, edge);
  double d = set.empty ? 0.0 : set.sup;
  d = apply_sentinel(loss, d, edge);

  bool tie = false;
  if (d >= edge) {
    // End of the last stretch where F strictly decreases; past it F' = 0 up
    // to M when the objective is flat.
    auto decreasing = [&](double x) { return condition(x) < -1e-12 ? -1.0 : 1.0; };
    const auto pos = scan_sublevel(decreasing, 0.0, edge);
    if (!pos.empty && pos.sup < edge - 1e-6 * edge) {
      const double candidate = pos.sup;
      const double f_candidate = objective(g, deviation, loss, Indemnity::stop_loss(candidate), principle);
      const double f_none = objective(g, deviation, loss, Indemnity::stop_loss(d), principle);
      if (std::abs(f_candidate - f_none) <= 1e-10 * (1.0 + std::abs(f_none))) {
        d = candidate;
        tie = true;
      }
    }
  }

  auto out = finish(Indemnity::stop_loss(d), g, deviation, loss, principle);
  out.unique = h.second_derivative_at_zero() < 0.0;
  out.diagnostics.iterations = 1;
  out.diagnostics.bracket_lo = 0.0;
  out.diagnostics.bracket_hi = edge;
  out.diagnostics.degenerate_tie = tie;
  if (tie) out.diagnostics.notes.push_back("objective flat between interior optimum and no insurance");
  if (std::isfinite(d) && d < loss.ess_sup()) {
    out.diagnostics.residual = evpp_condition(g, h, loss, theta, d) * loss.survival(d);
  }
  if (!std::isfinite(d) || d >= loss.ess_sup()) out.diagnostics.notes.push_back("no insurance is optimal");
  return out;
}

// ---------------------------------------------------------------------------
// Expected-value premium, standard deviation

/// alpha sqrt((d - w1)^2 / (w2 - w1^2)) + 2 beta (d - w1) - theta.
inline double evpp_sd_condition(const PenaltyFunction& g, const LossDistribution& loss, double theta, double d) {
  if (d <= 0.0) return -theta;
  const auto w = loss.truncated_moments(d);
  const double gap = d - w.w1;
  const double var = w.variance();
  const double ratio = var > 0.0 ? gap * gap / var : 0.0;
  return g.alpha() * std::sqrt(ratio) + 2.0 * g.beta() * gap - theta;
}

/// Optimal stop-loss contract for min g(SD(X - I)) + E[X] + theta E[I] with
/// g(x) = alpha x + beta x^2.
inline OptimalContract solve_evpp_sd(const PenaltyFunction& g, const LossDistribution& loss, double theta) {
  if (!g.is_linear_quadratic()) throw UnsupportedError("standard-deviation solver needs a linear-quadratic penalty");
  (void)loss.second_moment();  // throws on an infinite second moment
  const auto principle = PremiumPrinciple::expected_value(theta);
  const auto deviation = DeviationMeasure::standard_deviation();
  const double edge = scan_limit(loss);
  auto condition = [&](double x) { return evpp_sd_condition(g, loss, theta, x); };
  double d = apply_sentinel(loss, sublevel_sup(condition, 0.0, edge), edge);

  auto out = finish(Indemnity::stop_loss(d), g, deviation, loss, principle);
  out.unique = false;
  out.diagnostics.iterations = 1;
  out.diagnostics.bracket_hi = edge;
  if (std::isfinite(d) && d < loss.ess_sup()) {
    out.diagnostics.residual = condition(d) * loss.survival(d);
  } else {
    out.diagnostics.notes.push_back("no insurance is optimal");
  }
  return out;
}

// ---------------------------------------------------------------------------
// VaR premium

/// 1 - S_X(x) - g'(int_x^upper h1(S_X)) h1(S_X(x)): derivative of the
/// objective in the lower full-cover limit.
inline double lower_limit_condition(const PenaltyFunction& g, const DistortionFunction& h1,
                                    const LossDistribution& loss, double x, double upper) {
  const double s = loss.survival(x);
  return 1.0 - s - g.derivative(distorted_integral(h1, loss, x, upper)) * h1(s);
}

/// Optimal dual truncated stop-loss contract x ^ d* + (x - x_p)_+ under the
/// premium VaR_p(I(X)).
inline OptimalContract solve_var_premium(const PenaltyFunction& g, const DistortionFunction& h1,
                                         const LossDistribution& loss, double p) {
  require_deviation(h1);
  const auto principle = PremiumPrinciple::value_at_risk(p);
  const auto deviation = DeviationMeasure::choquet(h1);
  const double xp = loss.quantile(p);
  auto condition = [&](double x) { return lower_limit_condition(g, h1, loss, x, xp); };
  const double d = sublevel_sup(condition, 0.0, xp);

  auto out = finish(Indemnity::dual_truncated(d, xp), g, deviation, loss, principle);
  out.unique = true;
  out.diagnostics.iterations = 1;
  out.diagnostics.bracket_hi = xp;
  out.diagnostics.residual = (d > 0.0 && d < xp) ? condition(d) : 0.0;
  if (d >= xp) out.diagnostics.notes.push_back("full insurance is optimal");
  return out;
}

// ---------------------------------------------------------------------------
// ES premium

struct FixedPointOptions {
  double tolerance = 1e-9;
  int max_iterations = 200;
};

/// g'(int_lower^x h1(S_X)) h1(S_X(x)) / S_X(x) - p / (1 - p).
inline double tail_deductible_condition(const PenaltyFunction& g, const DistortionFunction& h1,
                                        const LossDistribution& loss, double p, double lower, double x) {
  return g.derivative(distorted_integral(h1, loss, lower, x)) * h1.ratio(loss.survival(x)) - p / (1.0 - p);
}

/// Optimal dual truncated contract x ^ d2* + (x - d1*)_+ under ES_p premium,
/// with d2* <= x_p < d1*. The coupled sup-set conditions are solved by
/// alternating updates, halving the step once an iterate oscillates.
inline OptimalContract solve_es_premium(const PenaltyFunction& g, const DistortionFunction& h1,
                                        const LossDistribution& loss, double p, const FixedPointOptions& opts = {}) {
  require_deviation(h1);
  const auto principle = PremiumPrinciple::expected_shortfall(p);
  const auto deviation = DeviationMeasure::choquet(h1);
  const double xp = loss.quantile(p);
  const double edge = scan_limit(loss);

  auto solve_tail = [&](double lower) {
    auto c = [&](double x) { return tail_deductible_condition(g, h1, loss, p, lower, x); };
    return apply_sentinel(loss, sublevel_sup(c, xp, edge), edge);
  };
  auto solve_lower = [&](double upper) {
    auto c = [&](double x) { return lower_limit_condition(g, h1, loss, x, upper); };
    return sublevel_sup(c, 0.0, xp);
  };
  auto distance = [](double a, double b) {
    if (a == b) return 0.0;
    if (!std::isfinite(a) || !std::isfinite(b)) return kInfinity;
    return std::abs(a - b);
  };

  double d2 = 0.0;
  double d1 = solve_tail(d2);
  double step1 = 0.0, step2 = 0.0;
  double damping = 1.0;
  std::ostringstream trace;
  int it = 0;
  bool converged = false;
  for (; it < opts.max_iterations; ++it) {
    double next2 = solve_lower(d1);
    double next1 = solve_tail(next2);
    if (std::isfinite(next1) && std::isfinite(d1)) {
      const double s1 = next1 - d1;
      const double s2 = next2 - d2;
      if (s1 * step1 < 0.0 || s2 * step2 < 0.0) damping = 0.5;
      next1 = d1 + damping * s1;
      next2 = d2 + damping * s2;
      step1 = s1;
      step2 = s2;
    }
    const double change = distance(next1, d1) + distance(next2, d2);
    if (it < 8 || it % 25 == 0) trace << " [" << it << "] d1=" << next1 << " d2=" << next2 << " change=" << change;
    d1 = next1;
    d2 = next2;
    if (change <= opts.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw SolverError("ES-premium fixed point did not converge after " + std::to_string(opts.max_iterations) +
                      " iterations:" + trace.str());
  }

  auto out = finish(Indemnity::dual_truncated(d2, d1), g, deviation, loss, principle);
  out.unique = h1.second_derivative_at_zero() < 0.0;
  out.diagnostics.iterations = it + 1;
  out.diagnostics.bracket_lo = xp;
  out.diagnostics.bracket_hi = edge;
  double residual = 0.0;
  if (std::isfinite(d1) && d1 > xp && d1 < loss.ess_sup()) {
    residual = std::max(residual, std::abs(tail_deductible_condition(g, h1, loss, p, d2, d1) * loss.survival(d1)));
  }
  if (d2 > 0.0 && d2 < xp) residual = std::max(residual, std::abs(lower_limit_condition(g, h1, loss, d2, d1)));
  out.diagnostics.residual = residual;
  if (damping < 1.0) out.diagnostics.notes.push_back("damped iteration");
  return out;
}

// ---------------------------------------------------------------------------
// Budget constraint, expected-value premium

/// Optimal contract under (1 + theta) E[I(X)] <= budget. A budget below the
/// unconstrained premium binds and the deductible solves
/// (1 + theta) E[(X - d)_+] = budget.
inline OptimalContract solve_budget_evpp(const PenaltyFunction& g, const DeviationMeasure& deviation,
                                         const LossDistribution& loss, double theta, double budget) {
  if (!(budget > 0.0)) throw DomainError("premium budget must be positive");
  const auto principle = PremiumPrinciple::expected_value(theta);
  OptimalContract free = deviation.is_choquet() ? solve_evpp_choquet(g, deviation.distortion(), loss, theta)
                                                : solve_evpp_sd(g, loss, theta);
  const double unconstrained = free.premium;
  const double full_cover = (1.0 + theta) * loss.mean();

  if (budget >= unconstrained) {
    free.multipliers = Multipliers{g.derivative(retained_deviation(deviation, loss, free.contract)), 0.0};
    free.diagnostics.binding = false;
    free.diagnostics.notes.push_back("constraint not binding");
    if (budget > full_cover) free.diagnostics.notes.push_back("budget exceeds the full-insurance premium");
    return free;
  }

  const double d_free = free.contract.thresholds()[0];
  double lo = d_free;  // premium(lo) >= budget
  double hi = loss.bounded() ? loss.ess_sup() : loss.integration_limit();
  while ((1.0 + theta) * loss.stop_loss(hi) > budget) hi *= 2.0;
  int it = 0;
  for (; it < 400 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((1.0 + theta) * loss.stop_loss(mid) > budget) lo = mid;
    else hi = mid;
  }
  const double d = 0.5 * (lo + hi);

  auto out = finish(Indemnity::stop_loss(d), g, deviation, loss, principle);
  out.unique = free.unique;
  const double s = loss.survival(d);
  double excess;
  if (deviation.is_choquet()) {
    excess = evpp_condition(g, deviation.distortion(), loss, theta, d);
  } else {
    excess = evpp_sd_condition(g, loss, theta, d);
  }
  const double lambda2 = std::max(0.0, excess / (1.0 + theta));
  out.multipliers = Multipliers{g.derivative(retained_deviation(deviation, loss, out.contract)), lambda2};
  out.diagnostics.iterations = it;
  out.diagnostics.binding = true;
  out.diagnostics.bracket_lo = d_free;
  out.diagnostics.bracket_hi = hi;
  out.diagnostics.residual = (excess - lambda2 * (1.0 + theta)) * s;
  out.diagnostics.notes.push_back("constraint binding");
  return out;
}

// ---------------------------------------------------------------------------
// Budget constraint, VaR / ES premium

struct BudgetOptions {
  double tolerance = 1e-8;
  int max_outer = 100;
  int max_inner = 100;
};

struct ThreeThresholds {
  double d1;
  double d2;
  double d3;
};

/// Thresholds minimising the Lagrangian pointwise for fixed multipliers.
/// Below x_p the middle layer is where 1 + lambda2 - S - lambda1 h1(S) <= 0;
/// above x_p cover starts once lambda1 h1(S)/S exceeds (p + lambda2)/(1 - p).
inline ThreeThresholds budget_thresholds(const DistortionFunction& h1, const LossDistribution& loss, double p,
                                         PremiumKind kind, double lambda1, double lambda2) {
  const double xp = loss.quantile(p);
  auto layer = [&](double x) {
    const double s = loss.survival(x);
    return 1.0 + lambda2 - s - lambda1 * h1(s);
  };
  const auto set = scan_sublevel(layer, 0.0, xp);
  double d1 = xp, d2 = xp;
  if (!set.empty) {
    d1 = set.inf;
    d2 = set.sup;
  }
  double d3 = xp;
  if (kind == PremiumKind::ES) {
    const double edge = scan_limit(loss);
    auto tail = [&](double x) { return lambda1 * h1.ratio(loss.survival(x)) - (p + lambda2) / (1.0 - p); };
    d3 = apply_sentinel(loss, sublevel_sup(tail, xp, edge), edge);
  }
  return {d1, d2, d3};
}

/// Optimal three-threshold contract (x - d1)_+ ^ (d2 - d1) + (x - d3)_+
/// under a VaR_p or ES_p premium capped by `budget`.
///
/// For fixed lambda2 the deviation multiplier solves
/// lambda1 = g'(int_0^d1 h1(S) + int_d2^d3 h1(S)); the right side falls as
/// lambda1 grows, so the root is bracketed by [g'(0), g'(D(X))] and found by
/// bisection. lambda2 is then the smallest value whose contract fits the
/// budget, found by bisection after geometric bracketing.
inline OptimalContract solve_budget_var_es(const PenaltyFunction& g, const DistortionFunction& h1,
                                           const LossDistribution& loss, double p, double budget,
                                           PremiumKind kind, const BudgetOptions& opts = {}) {
  require_deviation(h1);
  if (!(h1.second_derivative_at_zero() < 0.0)) {
    throw DomainError("budget-constrained VaR/ES solver requires h1''(0) < 0");
  }
  if (!(budget > 0.0)) throw DomainError("premium budget must be positive");
  if (kind != PremiumKind::VaR && kind != PremiumKind::ES) {
    throw UnsupportedError("budget-constrained distortion solver covers VaR and ES premiums only");
  }
  const auto principle =
      kind == PremiumKind::VaR ? PremiumPrinciple::value_at_risk(p) : PremiumPrinciple::expected_shortfall(p);
  const auto deviation = DeviationMeasure::choquet(h1);
  const double full_deviation = choquet(h1, loss);

  struct Pass {
    ThreeThresholds t;
    double lambda1;
    double premium;
    int inner;
  };
  auto retained = [&](const ThreeThresholds& t) {
    return distorted_integral(h1, loss, 0.0, t.d1) + distorted_integral(h1, loss, t.d2, t.d3);
  };
  auto contract_of = [](const ThreeThresholds& t) { return Indemnity::three_threshold(t.d1, t.d2, t.d3); };
  auto solve_inner = [&](double lambda2) {
    double lo = g.derivative(0.0);
    double hi = g.derivative(full_deviation);
    int inner = 0;
    if (hi - lo > 0.0) {
      for (; inner < opts.max_inner && hi - lo > 1e-13 * std::max(1.0, hi); ++inner) {
        const double mid = 0.5 * (lo + hi);
        const auto t = budget_thresholds(h1, loss, p, kind, mid, lambda2);
        if (g.derivative(retained(t)) > mid) lo = mid;
        else hi = mid;
      }
    }
    const double lambda1 = 0.5 * (lo + hi);
    const auto t = budget_thresholds(h1, loss, p, kind, lambda1, lambda2);
    return Pass{t, lambda1, premium(principle, loss, contract_of(t)), inner};
  };

  Pass pass = solve_inner(0.0);
  double lambda2 = 0.0;
  int outer = 0;
  bool binding = pass.premium > budget;
  if (binding) {
    double lo = 0.0;
    double hi = 1.0;
    Pass at_hi = solve_inner(hi);
    for (int grow = 0; at_hi.premium > budget; ++grow) {
      if (grow > 60) throw SolverError("could not bracket the budget multiplier");
      lo = hi;
      hi *= 2.0;
      at_hi = solve_inner(hi);
    }
    pass = at_hi;
    for (; outer < opts.max_outer; ++outer) {
      if (std::abs(pass.premium - budget) <= 1e-3 * opts.tolerance || hi - lo <= 1e-15 * std::max(1.0, hi)) break;
      const double mid = 0.5 * (lo + hi);
      Pass at_mid = solve_inner(mid);
      if (at_mid.premium > budget) {
        lo = mid;
      } else {
        hi = mid;
        pass = at_mid;
      }
    }
    lambda2 = hi;
    if (std::abs(pass.premium - budget) > 1e-6) {
      std::ostringstream os;
      os << "budget multiplier search stalled: premium " << pass.premium << " vs budget " << budget
         << " with lambda2 in [" << lo << ", " << hi << "]";
      throw SolverError(os.str());
    }
  }

  auto out = finish(contract_of(pass.t), g, deviation, loss, principle);
  out.unique = true;
  out.multipliers = Multipliers{pass.lambda1, lambda2};
  out.diagnostics.iterations = outer;
  out.diagnostics.binding = binding;
  out.diagnostics.bracket_lo = 0.0;
  out.diagnostics.bracket_hi = lambda2;
  out.diagnostics.residual = g.derivative(retained(pass.t)) - pass.lambda1;
  out.diagnostics.notes.push_back(binding ? "constraint binding" : "constraint not binding");
  return out;
}

}  // namespace mdins
