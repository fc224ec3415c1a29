#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mdins/errors.hpp"
#include "mdins/quadrature.hpp"

namespace mdins {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Tail mass left out when an integral over unbounded support is truncated.
inline constexpr double kTailTruncation = 1e-10;

struct TruncatedMoments {
  double w1 = 0.0;  ///< E[X ^ d] = int_0^d S_X
  double w2 = 0.0;  ///< E[(X ^ d)^2] = 2 int_0^d x S_X
  double variance() const { return std::max(0.0, w2 - w1 * w1); }
};

enum class DistributionKind { Uniform, Exponential, Pareto, Empirical };

/// A non-negative loss X on [0, M].
///
/// Analytic kinds use closed forms for every moment; integrals of the form
/// int phi(S_X(x)) x^k dx fall back to adaptive Simpson, truncated at
/// quantile(1 - 1e-10) when M is infinite. Empirical samples carry the exact
/// step survival function, so the same integrals reduce to finite sums.
class LossDistribution {
 public:
  struct Uniform {
    double lower;
    double upper;
  };
  struct Exponential {
    double rate;
  };
  /// Lomax form: S(x) = (1 + x / scale)^(-tail).
  struct Pareto {
    double tail;
    double scale;
  };
  struct Empirical {
    std::vector<double> sorted;
  };

  static LossDistribution uniform(double lower, double upper) {
    if (!(lower >= 0.0) || !(upper > lower) || !std::isfinite(upper)) {
      throw DomainError("uniform loss needs 0 <= a < b < inf");
    }
    return LossDistribution(Uniform{lower, upper});
  }

  static LossDistribution exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("exponential rate must be positive");
    return LossDistribution(Exponential{rate});
  }

  /// Any positive tail index is accepted; moments check finiteness on demand.
  static LossDistribution pareto(double tail, double scale = 1.0) {
    if (!(tail > 0.0) || !(scale > 0.0)) throw DomainError("pareto tail and scale must be positive");
    return LossDistribution(Pareto{tail, scale});
  }

  static LossDistribution empirical(std::vector<double> sample) {
    if (sample.empty()) throw DomainError("empirical loss needs at least one observation");
    for (double v : sample) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("empirical observations must be finite and non-negative");
    }
    std::sort(sample.begin(), sample.end());
    return LossDistribution(Empirical{std::move(sample)});
  }

  DistributionKind kind() const { return static_cast<DistributionKind>(model_.index()); }

  std::string describe() const {
    return std::visit(
        [](const auto& m) -> std::string {
          using T = std::decay_t<decltype(m)>;
          char buf[128];
          if constexpr (std::is_same_v<T, Uniform>) {
            std::snprintf(buf, sizeof buf, "uniform(%.9g, %.9g)", m.lower, m.upper);
          } else if constexpr (std::is_same_v<T, Exponential>) {
            std::snprintf(buf, sizeof buf, "exponential(%.9g)", m.rate);
          } else if constexpr (std::is_same_v<T, Pareto>) {
            std::snprintf(buf, sizeof buf, "pareto(%.9g, %.9g)", m.tail, m.scale);
          } else {
            std::snprintf(buf, sizeof buf, "empirical(n=%zu)", m.sorted.size());
          }
          return buf;
        },
        model_);
  }

  const std::variant<Uniform, Exponential, Pareto, Empirical>& model() const { return model_; }

  /// Essential supremum M; +inf for exponential and Pareto.
  double ess_sup() const {
    return std::visit(
        [](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Uniform>) return m.upper;
          else if constexpr (std::is_same_v<T, Empirical>) return m.sorted.back();
          else return kInfinity;
        },
        model_);
  }

  double ess_inf() const {
    return std::visit(
        [](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Uniform>) return m.lower;
          else if constexpr (std::is_same_v<T, Empirical>) return m.sorted.front();
          else return 0.0;
        },
        model_);
  }

  bool bounded() const { return std::isfinite(ess_sup()); }

  double survival(double x) const {
    if (!(x >= 0.0)) throw DomainError("survival needs a non-negative argument");
    return survival_unchecked(x);
  }

  double cdf(double x) const { return 1.0 - survival(x); }

  /// Left quantile inf{x : F(x) >= p}.
  double quantile(double p) const {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in (0, 1]");
    return std::visit(
        [p](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return m.lower + p * (m.upper - m.lower);
          } else if constexpr (std::is_same_v<T, Exponential>) {
            if (p == 1.0) throw DomainError("quantile at level 1 is unbounded");
            return -std::log1p(-p) / m.rate;
          } else if constexpr (std::is_same_v<T, Pareto>) {
            if (p == 1.0) throw DomainError("quantile at level 1 is unbounded");
            return m.scale * std::expm1(-std::log1p(-p) / m.tail);
          } else {
            const auto n = static_cast<double>(m.sorted.size());
            const double k = std::ceil(n * p - 1e-12 * n);
            const auto idx = static_cast<std::size_t>(std::clamp(k, 1.0, n)) - 1;
            return m.sorted[idx];
          }
        },
        model_);
  }

  double mean() const {
    return std::visit(
        [](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return 0.5 * (m.lower + m.upper);
          } else if constexpr (std::is_same_v<T, Exponential>) {
            return 1.0 / m.rate;
          } else if constexpr (std::is_same_v<T, Pareto>) {
            if (m.tail <= 1.0) throw DomainError("infinite mean: pareto tail index must exceed 1");
            return m.scale / (m.tail - 1.0);
          } else {
            return std::accumulate(m.sorted.begin(), m.sorted.end(), 0.0) /
                   static_cast<double>(m.sorted.size());
          }
        },
        model_);
  }

  double second_moment() const {
    return std::visit(
        [](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return (m.lower * m.lower + m.lower * m.upper + m.upper * m.upper) / 3.0;
          } else if constexpr (std::is_same_v<T, Exponential>) {
            return 2.0 / (m.rate * m.rate);
          } else if constexpr (std::is_same_v<T, Pareto>) {
            if (m.tail <= 2.0) throw DomainError("infinite second moment: pareto tail index must exceed 2");
            return 2.0 * m.scale * m.scale / ((m.tail - 1.0) * (m.tail - 2.0));
          } else {
            double s = 0.0;
            for (double v : m.sorted) s += v * v;
            return s / static_cast<double>(m.sorted.size());
          }
        },
        model_);
  }

  /// E[(X - d)_+].
  double stop_loss(double d) const {
    if (!(d >= 0.0)) throw DomainError("stop-loss retention must be non-negative");
    if (d == kInfinity) return 0.0;
    return std::visit(
        [d, this](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            if (d <= m.lower) return mean() - d;
            if (d >= m.upper) return 0.0;
            const double r = m.upper - d;
            return r * r / (2.0 * (m.upper - m.lower));
          } else if constexpr (std::is_same_v<T, Exponential>) {
            return std::exp(-m.rate * d) / m.rate;
          } else if constexpr (std::is_same_v<T, Pareto>) {
            if (m.tail <= 1.0) throw DomainError("infinite mean: pareto tail index must exceed 1");
            return m.scale / (m.tail - 1.0) * std::pow(1.0 + d / m.scale, 1.0 - m.tail);
          } else {
            double s = 0.0;
            for (double v : m.sorted) s += std::max(v - d, 0.0);
            return s / static_cast<double>(m.sorted.size());
          }
        },
        model_);
  }

  TruncatedMoments truncated_moments(double d) const {
    if (!(d >= 0.0)) throw DomainError("truncation point must be non-negative");
    if (d == kInfinity) {
      return {mean(), second_moment()};
    }
    return std::visit(
        [d, this](const auto& m) -> TruncatedMoments {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            const double a = m.lower, b = m.upper;
            if (d <= a) return {d, d * d};
            if (d >= b) return {mean(), second_moment()};
            const double w1 = d - (d - a) * (d - a) / (2.0 * (b - a));
            const double w2 = a * a + 2.0 / (b - a) * (b * (d * d - a * a) / 2.0 - (d * d * d - a * a * a) / 3.0);
            return {w1, w2};
          } else if constexpr (std::is_same_v<T, Exponential>) {
            const double l = m.rate;
            const double e = std::exp(-l * d);
            return {-std::expm1(-l * d) / l, 2.0 / (l * l) * (-std::expm1(-l * d)) - 2.0 / l * d * e};
          } else if constexpr (std::is_same_v<T, Pareto>) {
            const double s = m.scale, th = m.tail, u = 1.0 + d / s;
            // int_1^u w^-k dw
            auto power_integral = [u](double k) {
              if (std::abs(k - 1.0) < 1e-12) return std::log(u);
              return (std::pow(u, 1.0 - k) - 1.0) / (1.0 - k);
            };
            const double w1 = s * power_integral(th);
            const double w2 = 2.0 * s * s * (power_integral(th - 1.0) - power_integral(th));
            return {w1, w2};
          } else {
            double s1 = 0.0, s2 = 0.0;
            for (double v : m.sorted) {
              const double c = std::min(v, d);
              s1 += c;
              s2 += c * c;
            }
            const auto n = static_cast<double>(m.sorted.size());
            return {s1 / n, s2 / n};
          }
        },
        model_);
  }

  /// Right end used for every numerical integral: M, or quantile(1 - 1e-10).
  double integration_limit() const {
    return bounded() ? ess_sup() : quantile(1.0 - kTailTruncation);
  }

  /// Points where S_X is not smooth plus geometric cuts on unbounded support.
  std::vector<double> natural_breakpoints() const {
    return std::visit(
        [this](const auto& m) -> std::vector<double> {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return {m.lower, m.upper};
          } else if constexpr (std::is_same_v<T, Empirical>) {
            return m.sorted;
          } else {
            std::vector<double> cuts;
            const double limit = integration_limit();
            const double start = quantile(0.5);
            for (double c = start; c < limit; c *= 2.0) cuts.push_back(c);
            return cuts;
          }
        },
        model_);
  }

  /// int_lo^hi x^power * phi(S_X(x)) dx for power in {0, 1}.
  ///
  /// `hi` is clipped to integration_limit(); `extra` lists additional kinks of
  /// phi(S_X(.)) to split at. Exact for empirical losses.
  template <class Phi>
  double integrate_transform(Phi&& phi, double lo, double hi, std::span<const double> extra = {},
                             int power = 0) const {
    lo = std::max(lo, 0.0);
    if (const auto* emp = std::get_if<Empirical>(&model_)) {
      if (hi == kInfinity) hi = emp->sorted.back();
      if (!(hi > lo)) return 0.0;
      return empirical_transform(*emp, phi, lo, hi, power);
    }
    if (!bounded() || hi == kInfinity) hi = std::min(hi, integration_limit());
    if (!(hi > lo)) return 0.0;
    std::vector<double> cuts = natural_breakpoints();
    cuts.insert(cuts.end(), extra.begin(), extra.end());
    auto integrand = [&](double x) {
      const double v = phi(survival_unchecked(x));
      return power == 0 ? v : x * v;
    };
    return quadrature::simpson_split(integrand, lo, hi, cuts);
  }

  /// Inverse-transform draw.
  template <class Rng>
  double sample(Rng& rng) const {
    if (const auto* emp = std::get_if<Empirical>(&model_)) {
      std::uniform_int_distribution<std::size_t> pick(0, emp->sorted.size() - 1);
      return emp->sorted[pick(rng)];
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    while (u <= 0.0) u = unit(rng);
    return quantile(u);
  }

 private:
  explicit LossDistribution(std::variant<Uniform, Exponential, Pareto, Empirical> model)
      : model_(std::move(model)) {}

  double survival_unchecked(double x) const {
    return std::visit(
        [x](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            if (x <= m.lower) return 1.0;
            if (x >= m.upper) return 0.0;
            return (m.upper - x) / (m.upper - m.lower);
          } else if constexpr (std::is_same_v<T, Exponential>) {
            return std::exp(-m.rate * x);
          } else if constexpr (std::is_same_v<T, Pareto>) {
            return std::pow(1.0 + x / m.scale, -m.tail);
          } else {
            const auto above = m.sorted.end() - std::upper_bound(m.sorted.begin(), m.sorted.end(), x);
            return static_cast<double>(above) / static_cast<double>(m.sorted.size());
          }
        },
        model_);
  }

  template <class Phi>
  static double empirical_transform(const Empirical& emp, Phi& phi, double lo, double hi, int power) {
    const auto& xs = emp.sorted;
    const auto n = static_cast<double>(xs.size());
    auto piece = [power](double a, double b) { return power == 0 ? b - a : 0.5 * (b * b - a * a); };
    double total = 0.0;
    double left = lo;
    auto it = std::upper_bound(xs.begin(), xs.end(), lo);
    while (left < hi) {
      const double right = (it == xs.end()) ? hi : std::min(*it, hi);
      if (right > left) {
        const double s = static_cast<double>(xs.end() - it) / n;
        total += phi(s) * piece(left, right);
      }
      if (it == xs.end()) break;
      left = right;
      it = std::upper_bound(it, xs.end(), *it);
    }
    return total;
  }

  std::variant<Uniform, Exponential, Pareto, Empirical> model_;
};

}  // namespace mdins
