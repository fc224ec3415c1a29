#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "mdins/errors.hpp"

namespace mdins::quadrature {

struct Tolerance {
  double absolute = 1e-10;
  double relative = 1e-9;
  int max_depth = 60;
};

namespace detail {

template <class F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m,
                    double fm, double whole, double eps, int depth,
                    int& evaluations) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  evaluations += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps || (b - a) < 1e-15 * std::max(1.0, std::abs(a))) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1, evaluations) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1, evaluations);
}

}  // namespace detail

/// Adaptive Simpson on [a, b]. The error budget is max(absolute, relative *
/// |coarse estimate|); the first level is pre-split in four so integrands with
/// a narrow bump do not fool the initial estimate.
template <class F>
double simpson(F&& f, double a, double b, const Tolerance& tol = {}) {
  if (!(b > a)) return 0.0;
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw NumericError("adaptive Simpson needs a finite interval");
  }
  constexpr int kPieces = 4;
  const double h = (b - a) / kPieces;
  double coarse = 0.0;
  std::array<double, kPieces + 1> xs{};
  std::array<double, kPieces + 1> fs{};
  for (int i = 0; i <= kPieces; ++i) {
    xs[i] = (i == kPieces) ? b : a + i * h;
    fs[i] = f(xs[i]);
  }
  std::array<double, kPieces> fm{};
  for (int i = 0; i < kPieces; ++i) {
    fm[i] = f(0.5 * (xs[i] + xs[i + 1]));
    coarse += (xs[i + 1] - xs[i]) / 6.0 * (fs[i] + 4.0 * fm[i] + fs[i + 1]);
  }
  const double eps = std::max(tol.absolute, tol.relative * std::abs(coarse));
  double total = 0.0;
  int evaluations = 0;
  for (int i = 0; i < kPieces; ++i) {
    const double m = 0.5 * (xs[i] + xs[i + 1]);
    const double whole = (xs[i + 1] - xs[i]) / 6.0 * (fs[i] + 4.0 * fm[i] + fs[i + 1]);
    total += detail::simpson_step(f, xs[i], fs[i], xs[i + 1], fs[i + 1], m, fm[i], whole,
                                  eps / kPieces, tol.max_depth, evaluations);
  }
  if (!std::isfinite(total)) throw NumericError("adaptive Simpson produced a non-finite value");
  return total;
}

/// Integrates over [a, b] after splitting at every breakpoint strictly inside
/// the interval.
template <class F>
double simpson_split(F&& f, double a, double b, std::span<const double> breakpoints,
                     const Tolerance& tol = {}) {
  if (!(b > a)) return 0.0;
  std::vector<double> cuts{a};
  for (double c : breakpoints) {
    if (c > a && c < b) cuts.push_back(c);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += simpson(f, cuts[i], cuts[i + 1], tol);
  }
  return total;
}

}  // namespace mdins::quadrature
