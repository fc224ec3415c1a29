#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdins/distributions.hpp"
#include "mdins/errors.hpp"

namespace mdins {

enum class IndemnityForm { StopLoss, DualTruncated, ThreeThreshold, GridMarginal };

/// Piece of [0, inf) on which the marginal indemnity q is constant.
struct Segment {
  double lo;
  double hi;
  double slope;
};

/// Admissible ceded-loss function: I(0) = 0 and 0 <= I(x) - I(y) <= x - y.
///
///   StopLoss(d)               I(x) = (x - d)_+
///   DualTruncated(lo, hi)     I(x) = x ^ lo + (x - hi)_+
///   ThreeThreshold(d1,d2,d3)  I(x) = (x - d1)_+ ^ (d2 - d1) + (x - d3)_+
///   GridMarginal(grid, q)     I(x) = int_0^x q, q constant per cell
///
/// Thresholds may be +inf (an empty layer). For GridMarginal the grid starts
/// at 0 and the last cell extends to infinity.
class Indemnity {
 public:
  static Indemnity stop_loss(double d) {
    check_threshold(d, "deductible");
    return Indemnity(IndemnityForm::StopLoss, {d});
  }

  static Indemnity no_insurance() { return stop_loss(kInfinity); }
  static Indemnity full_insurance() { return stop_loss(0.0); }

  static Indemnity dual_truncated(double d_low, double d_high) {
    check_threshold(d_low, "lower limit");
    check_threshold(d_high, "upper deductible");
    if (d_high < d_low) throw DomainError("dual truncated contract needs d_low <= d_high");
    return Indemnity(IndemnityForm::DualTruncated, {d_low, d_high});
  }

  static Indemnity three_threshold(double d1, double d2, double d3) {
    check_threshold(d1, "d1");
    check_threshold(d2, "d2");
    check_threshold(d3, "d3");
    if (!(d1 <= d2 && d2 <= d3)) throw DomainError("three-threshold contract needs d1 <= d2 <= d3");
    return Indemnity(IndemnityForm::ThreeThreshold, {d1, d2, d3});
  }

  static Indemnity grid_marginal(std::vector<double> grid, std::vector<double> slopes) {
    if (grid.empty() || grid.front() != 0.0) throw DomainError("marginal grid must start at 0");
    if (slopes.size() != grid.size()) throw DomainError("marginal grid needs one slope per cell");
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(grid[i] > grid[i - 1]) || !std::isfinite(grid[i])) {
        throw DomainError("marginal grid must be strictly increasing and finite");
      }
    }
    for (double q : slopes) {
      if (!(q >= 0.0 && q <= 1.0)) throw DomainError("marginal slopes must lie in [0, 1]");
    }
    Indemnity ind(IndemnityForm::GridMarginal, {});
    ind.grid_ = std::move(grid);
    ind.slopes_ = std::move(slopes);
    return ind;
  }

  IndemnityForm form() const { return form_; }

  /// Thresholds in declaration order (empty for GridMarginal).
  const std::vector<double>& thresholds() const { return thresholds_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& slopes() const { return slopes_; }

  std::string form_name() const {
    switch (form_) {
      case IndemnityForm::StopLoss: return "stop_loss";
      case IndemnityForm::DualTruncated: return "dual_truncated";
      case IndemnityForm::ThreeThreshold: return "three_threshold";
      case IndemnityForm::GridMarginal: return "grid_marginal";
    }
    return "unknown";
  }

  /// Constant-slope pieces covering [0, inf), empty pieces dropped.
  std::vector<Segment> segments() const {
    std::vector<Segment> raw;
    const auto& t = thresholds_;
    switch (form_) {
      case IndemnityForm::StopLoss:
        raw = {{0.0, t[0], 0.0}, {t[0], kInfinity, 1.0}};
        break;
      case IndemnityForm::DualTruncated:
        raw = {{0.0, t[0], 1.0}, {t[0], t[1], 0.0}, {t[1], kInfinity, 1.0}};
        break;
      case IndemnityForm::ThreeThreshold:
        raw = {{0.0, t[0], 0.0}, {t[0], t[1], 1.0}, {t[1], t[2], 0.0}, {t[2], kInfinity, 1.0}};
        break;
      case IndemnityForm::GridMarginal:
        for (std::size_t i = 0; i < grid_.size(); ++i) {
          const double hi = i + 1 < grid_.size() ? grid_[i + 1] : kInfinity;
          raw.push_back({grid_[i], hi, slopes_[i]});
        }
        break;
    }
    std::vector<Segment> out;
    for (const auto& s : raw) {
      if (s.hi > s.lo) out.push_back(s);
    }
    return out;
  }

  /// Finite points where the marginal indemnity may jump.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (const auto& s : segments()) {
      if (s.lo > 0.0) out.push_back(s.lo);
    }
    return out;
  }

  /// I(x).
  double operator()(double x) const {
    if (!(x >= 0.0)) throw DomainError("indemnity needs a non-negative loss");
    double value = 0.0;
    for (const auto& s : segments()) {
      if (x <= s.lo) break;
      value += s.slope * (std::min(x, s.hi) - s.lo);
    }
    return value;
  }

  /// q(x); at a breakpoint the slope of the cell to its left.
  double marginal(double x) const {
    double q = 0.0;
    for (const auto& s : segments()) {
      if (x <= s.lo) break;
      q = s.slope;
    }
    if (x == 0.0 && !segments().empty()) q = segments().front().slope;
    return q;
  }

 private:
  Indemnity(IndemnityForm form, std::vector<double> thresholds)
      : form_(form), thresholds_(std::move(thresholds)) {}

  static void check_threshold(double d, const char* what) {
    if (!(d >= 0.0)) throw DomainError(std::string(what) + " must be non-negative");
  }

  IndemnityForm form_;
  std::vector<double> thresholds_;
  std::vector<double> grid_;
  std::vector<double> slopes_;
};

/// int over the ceded (weight q) or retained (weight 1 - q) part of
/// phi(S_X(x)) dx, splitting at contract breakpoints and `extra`.
template <class Phi>
double weighted_transform(const LossDistribution& loss, const Indemnity& ind, Phi&& phi, bool ceded,
                          std::span<const double> extra = {}) {
  double total = 0.0;
  for (const auto& s : ind.segments()) {
    const double w = ceded ? s.slope : 1.0 - s.slope;
    if (w == 0.0) continue;
    total += w * loss.integrate_transform(phi, s.lo, s.hi, extra);
  }
  return total;
}

/// int_a^b S_X = pi(a) - pi(b) with the stop-loss transform pi.
inline double survival_integral(const LossDistribution& loss, double a, double b) {
  if (!(b > a)) return 0.0;
  return loss.stop_loss(a) - loss.stop_loss(b);
}

/// E[I(X)] = int S_X q.
inline double expected_indemnity(const LossDistribution& loss, const Indemnity& ind) {
  double total = 0.0;
  for (const auto& s : ind.segments()) {
    if (s.slope != 0.0) total += s.slope * survival_integral(loss, s.lo, s.hi);
  }
  return total;
}

}  // namespace mdins
