#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mdins/contracts.hpp"
#include "mdins/distributions.hpp"
#include "mdins/errors.hpp"
#include "mdins/indemnity.hpp"
#include "mdins/measures.hpp"
#include "mdins/premiums.hpp"

namespace mdins {

/// Loss problem cut into cells on which the marginal indemnity is constant.
/// Every objective built from such a contract is linear in the cell slopes
/// once the deviation argument is fixed, so all cell integrals are computed
/// once. Cell i is [grid[i], grid[i+1]); the last cell runs to ess sup X.
class DiscretizedProblem {
 public:
  static DiscretizedProblem build(const LossDistribution& loss, const DeviationMeasure& deviation,
                                  const PremiumPrinciple& principle, int cells = 64) {
    if (cells < 1) throw DomainError("discretization needs at least one cell");
    DiscretizedProblem p(loss, deviation, principle);
    const double top = loss.bounded() ? loss.ess_sup() : loss.quantile(1.0 - 1e-8);
    p.grid_.resize(static_cast<std::size_t>(cells));
    for (int i = 0; i < cells; ++i) p.grid_[i] = top * i / cells;
    p.top_ = top;

    const std::size_t n = p.grid_.size();
    p.w_s_.resize(n);
    p.w_xs_.resize(n);
    p.w_h_.resize(n);
    p.w_premium_.resize(n);
    const auto identity = [](double s) { return s; };
    std::vector<double> dev_kinks;
    if (deviation.is_choquet()) dev_kinks = kink_locations(deviation.distortion(), loss);
    std::optional<DistortionFunction> h2;
    std::vector<double> h2_kinks;
    if (principle.kind() == PremiumKind::ES || principle.kind() == PremiumKind::Distortion) {
      h2 = principle.as_distortion();
      h2_kinks = kink_locations(*h2, loss);
    }
    const double xp = principle.kind() == PremiumKind::VaR ? loss.quantile(principle.level()) : 0.0;

    for (std::size_t i = 0; i < n; ++i) {
      const double a = p.grid_[i];
      const double b = p.cell_end(i);
      p.w_s_[i] = loss.integrate_transform(identity, a, b);
      p.w_xs_[i] = loss.integrate_transform(identity, a, b, {}, 1);
      if (deviation.is_choquet()) {
        const auto& h = deviation.distortion();
        p.w_h_[i] = loss.integrate_transform([&h](double s) { return h(s); }, a, b, dev_kinks);
      }
      switch (principle.kind()) {
        case PremiumKind::ExpectedValue:
          p.w_premium_[i] = (1.0 + principle.loading()) * p.w_s_[i];
          break;
        case PremiumKind::VaR:
          p.w_premium_[i] = std::max(0.0, std::min(b, xp) - a);
          break;
        default:
          p.w_premium_[i] = loss.integrate_transform([&h2](double s) { return (*h2)(s); }, a, b, h2_kinks);
          break;
      }
    }
    return p;
  }

  const LossDistribution& loss() const { return loss_; }
  const DeviationMeasure& deviation() const { return deviation_; }
  const PremiumPrinciple& principle() const { return principle_; }
  const std::vector<double>& grid() const { return grid_; }
  std::size_t cells() const { return grid_.size(); }
  double top() const { return top_; }
  double cell_end(std::size_t i) const {
    if (i + 1 < grid_.size()) return grid_[i + 1];
    return loss_.bounded() ? loss_.ess_sup() : kInfinity;
  }
  /// Threshold k in 0..cells() as a loss level; k = cells() means "never".
  double threshold(std::size_t k) const { return k < grid_.size() ? grid_[k] : kInfinity; }

  std::span<const double> survival_weights() const { return w_s_; }
  std::span<const double> moment_weights() const { return w_xs_; }
  std::span<const double> deviation_weights() const { return w_h_; }
  std::span<const double> premium_weights() const { return w_premium_; }

  Indemnity indemnity(std::span<const double> q) const {
    return Indemnity::grid_marginal(grid_, std::vector<double>(q.begin(), q.end()));
  }

  /// Cell slopes of an indemnity; exact when its kinks sit on the grid.
  std::vector<double> slopes_of(const Indemnity& ind) const {
    std::vector<double> q(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const double a = grid_[i];
      const double end = cell_end(i);
      const double b = std::isfinite(end) ? end : a + top_ / static_cast<double>(grid_.size());
      q[i] = std::clamp((ind(b) - ind(a)) / (b - a), 0.0, 1.0);
    }
    return q;
  }

 private:
  DiscretizedProblem(LossDistribution loss, DeviationMeasure deviation, PremiumPrinciple principle)
      : loss_(std::move(loss)), deviation_(std::move(deviation)), principle_(std::move(principle)) {}

  LossDistribution loss_;
  DeviationMeasure deviation_;
  PremiumPrinciple principle_;
  std::vector<double> grid_;
  double top_ = 0.0;
  std::vector<double> w_s_, w_xs_, w_h_, w_premium_;
};

inline double discrete_premium(const DiscretizedProblem& problem, std::span<const double> q) {
  const auto w = problem.premium_weights();
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) total += w[i] * q[i];
  return total;
}

/// Deviation of the retained loss X - I(X) for cell slopes q.
inline double discrete_retained_deviation(const DiscretizedProblem& problem, std::span<const double> q) {
  if (problem.deviation().is_choquet()) {
    const auto w = problem.deviation_weights();
    double total = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) total += w[i] * (1.0 - q[i]);
    return total;
  }
  // E[R] = int R' S and E[R^2] = int 2 R R' S with R linear on each cell.
  const auto ws = problem.survival_weights();
  const auto wxs = problem.moment_weights();
  const auto& grid = problem.grid();
  double level = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double r = 1.0 - q[i];
    m1 += r * ws[i];
    m2 += 2.0 * r * (level * ws[i] + r * (wxs[i] - grid[i] * ws[i]));
    const double end = problem.cell_end(i);
    if (std::isfinite(end)) level += r * (end - grid[i]);
  }
  return std::sqrt(std::max(0.0, m2 - m1 * m1));
}

/// g(D(X - I)) + E[X] - E[I] + premium for the grid contract with slopes q.
inline double discrete_objective(const DiscretizedProblem& problem, const PenaltyFunction& g,
                                 std::span<const double> q) {
  if (q.size() != problem.cells()) throw DomainError("slope vector length must match the grid");
  for (double v : q) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("cell slopes must lie in [0, 1]");
  }
  const auto ws = problem.survival_weights();
  double ceded = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) ceded += ws[i] * q[i];
  return g(discrete_retained_deviation(problem, q)) + problem.loss().mean() - ceded + discrete_premium(problem, q);
}

/// Evaluation error of the grid: disagreement with the continuous objective
/// at no insurance and at full insurance.
inline double discretization_slack(const DiscretizedProblem& problem, const PenaltyFunction& g) {
  const auto& loss = problem.loss();
  std::vector<double> q(problem.cells(), 0.0);
  const double none = objective(g, problem.deviation(), loss, Indemnity::no_insurance(), problem.principle());
  double slack = std::abs(discrete_objective(problem, g, q) - none);
  std::fill(q.begin(), q.end(), 1.0);
  const double full = objective(g, problem.deviation(), loss, Indemnity::full_insurance(), problem.principle());
  slack = std::max(slack, std::abs(discrete_objective(problem, g, q) - full));
  return slack;
}

// ---------------------------------------------------------------------------
// Search

enum class SearchKind { ThresholdGrid, RandomLipschitz, CoordinateDescent };

struct SearchStrategy {
  SearchKind kind = SearchKind::ThresholdGrid;
  int samples = 0;
  int restarts = 0;
  std::uint64_t seed = 0xC0FFEE;

  static SearchStrategy threshold_grid() { return {SearchKind::ThresholdGrid, 0, 0}; }
  static SearchStrategy random_lipschitz(int samples, std::uint64_t seed = 0xC0FFEE) {
    if (samples < 1) throw DomainError("random search needs at least one sample");
    return {SearchKind::RandomLipschitz, samples, 0, seed};
  }
  static SearchStrategy coordinate_descent(int restarts, std::uint64_t seed = 0xC0FFEE) {
    if (restarts < 1) throw DomainError("coordinate descent needs at least one start");
    return {SearchKind::CoordinateDescent, 0, restarts, seed};
  }
};

struct SearchResult {
  std::vector<double> q;
  double value = std::numeric_limits<double>::infinity();
  double premium = 0.0;
  long evaluated = 0;
};

namespace detail {

inline constexpr double kBudgetSlack = 1e-12;

struct Tracker {
  const DiscretizedProblem& problem;
  const PenaltyFunction& g;
  std::optional<double> budget;
  SearchResult best;

  bool feasible(std::span<const double> q) const {
    return !budget || discrete_premium(problem, q) <= *budget + kBudgetSlack * (1.0 + *budget);
  }
  void offer(std::span<const double> q) {
    ++best.evaluated;
    if (!feasible(q)) return;
    const double v = discrete_objective(problem, g, q);
    if (v < best.value) {
      best.value = v;
      best.q.assign(q.begin(), q.end());
      best.premium = discrete_premium(problem, q);
    }
  }
  /// Scales q down onto the budget boundary; premiums are homogeneous in q.
  void fit_budget(std::vector<double>& q) const {
    if (!budget) return;
    const double spend = discrete_premium(problem, q);
    if (spend > *budget && spend > 0.0) {
      const double scale = *budget / spend;
      for (double& v : q) v *= scale;
    }
  }
};

inline void fill_pattern(std::vector<double>& q, std::size_t k1, std::size_t k2, std::size_t k3) {
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = ((i >= k1 && i < k2) || i >= k3) ? 1.0 : 0.0;
}

inline void search_thresholds(Tracker& t) {
  const std::size_t n = t.problem.cells();
  std::vector<double> q(n);
  for (std::size_t k1 = 0; k1 <= n; ++k1) {
    for (std::size_t k2 = k1; k2 <= n; ++k2) {
      for (std::size_t k3 = k2; k3 <= n; ++k3) {
        fill_pattern(q, k1, k2, k3);
        t.offer(q);
      }
    }
  }
}

inline void search_random(Tracker& t, const SearchStrategy& s) {
  const std::size_t n = t.problem.cells();
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> cell(0, n);
  std::vector<double> q(n);
  for (int k = 0; k < s.samples; ++k) {
    switch (k % 3) {
      case 0:  // independent slopes
        for (double& v : q) v = unit(rng);
        break;
      case 1: {  // random layers with random partial slopes
        std::size_t a = cell(rng), b = cell(rng), c = cell(rng);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        const double low = unit(rng), high = unit(rng);
        for (std::size_t i = 0; i < n; ++i) q[i] = i < a ? 0.0 : (i < b ? high : (i < c ? low : 1.0));
        break;
      }
      default: {  // smooth random walk in [0, 1]
        double v = unit(rng);
        for (double& x : q) {
          v = std::clamp(v + 0.3 * (unit(rng) - 0.5), 0.0, 1.0);
          x = v;
        }
        break;
      }
    }
    t.fit_budget(q);
    t.offer(q);
  }
}

inline void search_coordinates(Tracker& t, const SearchStrategy& s) {
  const std::size_t n = t.problem.cells();
  const auto prem_w = t.problem.premium_weights();
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> q(n);
  constexpr double kGolden = 0.6180339887498949;

  for (int r = 0; r < s.restarts; ++r) {
    for (double& v : q) v = r == 0 ? 0.5 : unit(rng);
    t.fit_budget(q);
    double current = discrete_objective(t.problem, t.g, q);
    for (int sweep = 0; sweep < 500; ++sweep) {
      const double before = current;
      for (std::size_t i = 0; i < n; ++i) {
        double upper = 1.0;
        if (t.budget && prem_w[i] > 0.0) {
          const double room = *t.budget - discrete_premium(t.problem, q);
          upper = std::clamp(q[i] + room / prem_w[i], q[i], 1.0);
        }
        auto f = [&](double v) {
          q[i] = v;
          return discrete_objective(t.problem, t.g, q);
        };
        // The objective is convex in one slope; golden section then compare ends.
        double lo = 0.0, hi = upper;
        double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
        double f1 = f(x1), f2 = f(x2);
        for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
          if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kGolden * (hi - lo);
            f1 = f(x1);
          } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kGolden * (hi - lo);
            f2 = f(x2);
          }
        }
        double best_v = 0.5 * (lo + hi);
        double best_f = f(best_v);
        for (double v : {0.0, upper}) {
          const double fv = f(v);
          if (fv < best_f) {
            best_f = fv;
            best_v = v;
          }
        }
        q[i] = best_v;
        current = best_f;
        t.best.evaluated += 64;
      }
      if (before - current <= 1e-14 * (1.0 + std::abs(current))) break;
    }
    t.offer(q);
  }
}

}  // namespace detail

/// Best grid contract found by the strategy; with a budget only contracts
/// whose premium stays within it are considered.
inline SearchResult search_contracts(const DiscretizedProblem& problem, const PenaltyFunction& g,
                                     const SearchStrategy& strategy, std::optional<double> budget = std::nullopt) {
  detail::Tracker tracker{problem, g, budget, {}};
  switch (strategy.kind) {
    case SearchKind::ThresholdGrid:
      detail::search_thresholds(tracker);
      break;
    case SearchKind::RandomLipschitz:
      detail::search_random(tracker, strategy);
      break;
    case SearchKind::CoordinateDescent:
      detail::search_coordinates(tracker, strategy);
      break;
  }
  return tracker.best;
}

// ---------------------------------------------------------------------------
// Convex order

struct ConvexOrderResult {
  bool holds = false;
  bool conclusive = false;
  double mean_gap = 0.0;       ///< |mean(Y1) - mean(Y2)|
  double max_violation = 0.0;  ///< largest stop-loss excess of Y1 over Y2 beyond tolerance
};

/// Stop-loss order proxy for Y1 <=cx Y2 on samples: E[(Y1 - d)_+] <= E[(Y2 - d)_+]
/// at every d in d_grid, up to three standard errors. Means that differ by
/// more than three standard errors make the result inconclusive.
inline ConvexOrderResult convex_order_check(std::span<const double> y1, std::span<const double> y2,
                                            std::span<const double> d_grid) {
  if (y1.empty() || y2.empty()) throw DomainError("convex order check needs non-empty samples");
  auto moments = [](std::span<const double> y, auto&& f) {
    double s = 0.0, s2 = 0.0;
    for (double v : y) {
      const double x = f(v);
      s += x;
      s2 += x * x;
    }
    const double n = static_cast<double>(y.size());
    const double mean = s / n;
    return std::pair{mean, std::max(0.0, s2 / n - mean * mean) / n};
  };
  const auto id = [](double v) { return v; };
  const auto [m1, v1] = moments(y1, id);
  const auto [m2, v2] = moments(y2, id);

  ConvexOrderResult out;
  out.mean_gap = std::abs(m1 - m2);
  out.conclusive = out.mean_gap <= 3.0 * std::sqrt(v1 + v2) + 1e-12 * (1.0 + std::abs(m1));
  out.holds = true;
  for (double d : d_grid) {
    const auto excess = [d](double v) { return std::max(v - d, 0.0); };
    const auto [e1, s1] = moments(y1, excess);
    const auto [e2, s2] = moments(y2, excess);
    const double tolerance = 3.0 * std::sqrt(s1 + s2) + 1e-12;
    const double violation = e1 - e2 - tolerance;
    if (violation > 0.0) {
      out.holds = false;
      out.max_violation = std::max(out.max_violation, violation);
    }
  }
  return out;
}

}  // namespace mdins
