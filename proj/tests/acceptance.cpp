// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mdins/mdins.hpp"

using namespace mdins;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

const auto kGini = DistortionFunction::gini();
const auto kGiniD = DeviationMeasure::choquet(DistortionFunction::gini());
const auto kSd = DeviationMeasure::standard_deviation();
const auto kUniform = LossDistribution::uniform(0, 10);
const auto kExp = LossDistribution::exponential(0.1);

double deductible(const OptimalContract& c) { return c.contract.thresholds()[0]; }

Outcome closed_form_measures() {
  Outcome o;
  auto t0 = Clock::now();
  const double u = choquet(kGini, kUniform);
  const double tu = seconds_since(t0);
  t0 = Clock::now();
  const double e = choquet(kGini, kExp);
  const double te = seconds_since(t0);
  o.require(std::abs(u - 10.0 / 6.0) <= 1e-6, "Gini U[0,10] = " + num(u));
  o.require(std::abs(e - 5.0) <= 1e-6, "Gini Exp(0.1) = " + num(e));
  o.require(tu < 0.1 && te < 0.1, "runtime " + num(tu) + " / " + num(te) + " s");
  o.detail = o.pass ? "Gini U[0,10]=" + num(u) + " Exp(0.1)=" + num(e) : o.detail;
  return o;
}

Outcome example_one() {
  Outcome o;
  const double alpha = 0.5, theta = 0.2;
  const auto c = solve_evpp_choquet(PenaltyFunction::linear_quadratic(alpha, 0), kGini, kUniform, theta);
  const double closed = kUniform.quantile(1 - (alpha - theta) / alpha);
  o.require(std::abs(deductible(c) - 4.0) <= 1e-6 && std::abs(closed - 4.0) <= 1e-12, "d* = " + num(deductible(c)));
  for (double t : {0.5, 0.6, 0.9}) {
    const auto none = solve_evpp_choquet(PenaltyFunction::linear_quadratic(alpha, 0), kGini, kUniform, t);
    o.require(deductible(none) == kUniform.ess_sup(), "theta=" + num(t) + " gives d*=" + num(deductible(none)));
    const auto none_exp = solve_evpp_choquet(PenaltyFunction::linear_quadratic(alpha, 0), kGini, kExp, t);
    o.require(std::isinf(deductible(none_exp)), "Exp theta=" + num(t) + " gives d*=" + num(deductible(none_exp)));
  }
  if (o.pass) o.detail = "d*=" + num(deductible(c)) + ", theta>=alpha gives no insurance";
  return o;
}

Outcome budget_free_example() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto c = solve_evpp_choquet(PenaltyFunction::linear_quadratic(0.5, 0.7), kGini, kUniform, 0.2);
  const double t = seconds_since(t0);
  o.require(std::abs(deductible(c) - 2.39) <= 0.01, "d* = " + num(deductible(c)));
  o.require(std::abs(c.premium - 3.48) <= 0.01, "premium = " + num(c.premium));
  o.require(t < 1.0, "runtime " + num(t) + " s");
  if (o.pass) o.detail = "d*=" + num(deductible(c)) + " premium=" + num(c.premium) + " in " + num(t) + " s";
  return o;
}

Outcome budget_binding() {
  Outcome o;
  const auto g = PenaltyFunction::linear_quadratic(0.5, 0.7);
  double prev = kInfinity;
  std::string ds;
  for (double budget : {1.0, 2.0, 3.0}) {
    const auto c = solve_budget_evpp(g, kGiniD, kUniform, 0.2, budget);
    o.require(std::abs(c.premium - budget) <= 1e-6, "budget " + num(budget) + " spent " + num(c.premium));
    o.require(deductible(c) <= prev, "deductible not monotone at budget " + num(budget));
    prev = deductible(c);
    ds += num(deductible(c)) + " ";
  }
  const auto free = solve_evpp_choquet(g, kGini, kUniform, 0.2);
  const auto loose = solve_budget_evpp(g, kGiniD, kUniform, 0.2, 3.6);
  o.require(deductible(loose) == deductible(free) && loose.premium == free.premium,
            "budget 3.6 changed the contract");
  if (o.pass) o.detail = "d~ for budgets 1,2,3: " + ds + "; budget 3.6 returns d*=" + num(deductible(loose));
  return o;
}

Outcome figure_shapes() {
  Outcome o;
  const int steps = 50;
  std::vector<double> bs(steps);
  for (int i = 0; i < steps; ++i) bs[i] = 1.0 + 9.0 * i / (steps - 1);
  for (double beta : {0.0, 0.3, 0.7}) {
    std::vector<double> ds;
    for (double b : bs) {
      ds.push_back(deductible(solve_evpp_choquet(PenaltyFunction::linear_quadratic(0.5, beta), kGini,
                                                 LossDistribution::uniform(0, b), 0.2)));
    }
    for (int i = 0; i < steps; ++i) {
      o.require(ds[i] <= 0.4 * bs[i] + 1e-9, "beta=" + num(beta) + " d*>0.4b at b=" + num(bs[i]));
      if (i > 0 && ds[i - 1] > 0) o.require(ds[i] > ds[i - 1], "beta=" + num(beta) + " not increasing at b=" + num(bs[i]));
    }
    if (beta == 0.0) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (int i = 0; i < steps; ++i) {
        sx += bs[i];
        sy += ds[i];
        sxx += bs[i] * bs[i];
        sxy += bs[i] * ds[i];
      }
      const double slope = (steps * sxy - sx * sy) / (steps * sxx - sx * sx);
      const double icpt = (sy - slope * sx) / steps;
      double resid = 0;
      for (int i = 0; i < steps; ++i) resid = std::max(resid, std::abs(ds[i] - slope * bs[i] - icpt));
      o.require(resid <= 1e-6, "linear residual " + num(resid));
    } else {
      double worst = -kInfinity;
      for (int i = 2; i < steps; ++i) worst = std::max(worst, ds[i] - 2 * ds[i - 1] + ds[i - 2]);
      o.require(worst <= 1e-8, "beta=" + num(beta) + " max second difference " + num(worst));
    }
  }
  if (o.pass) o.detail = "50-step sweeps for beta in {0, 0.3, 0.7}";
  return o;
}

Outcome es_premium_shape() {
  Outcome o;
  const auto g = PenaltyFunction::linear_quadratic(0.5, 0.3);
  for (int i = 1; i <= 20; ++i) {
    const double b = 0.5 * i;
    const auto c = solve_es_premium(g, kGini, LossDistribution::uniform(0, b), 0.2);
    o.require(c.contract.thresholds()[0] == 0.0, "d2*=" + num(c.contract.thresholds()[0]) + " at b=" + num(b));
  }
  double prev = -1;
  std::string d1s;
  for (double p : {0.2, 0.5, 0.8}) {
    const double d1 = solve_es_premium(g, kGini, kUniform, p).contract.thresholds()[1];
    o.require(d1 > prev, "d1* not increasing at p=" + num(p));
    prev = d1;
    d1s += num(d1) + " ";
  }
  if (o.pass) o.detail = "d2*=0 on 20 b-values; d1* at p=.2,.5,.8: " + d1s;
  return o;
}

Outcome oracle_optimality() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto g = PenaltyFunction::linear_quadratic(0.5, 0.7);
  const auto g3 = PenaltyFunction::linear_quadratic(0.5, 0.3);
  const auto g9 = PenaltyFunction::linear_quadratic(0.9, 0.5);
  struct Case {
    std::string name;
    DeviationMeasure dev;
    PremiumPrinciple principle;
    PenaltyFunction pen;
    std::optional<double> budget;
    std::function<OptimalContract(const LossDistribution&)> solve;
  };
  double worst = -kInfinity;
  int runs = 0;
  for (const auto& x : {kUniform, kExp}) {
    const auto ev = PremiumPrinciple::expected_value(0.2);
    const double var_budget = 0.5 * solve_var_premium(g9, kGini, x, 0.8).premium;
    const double es_budget = 0.6 * solve_es_premium(g3, kGini, x, 0.5).premium;
    const double ev_budget = 0.6 * solve_evpp_choquet(g, kGini, x, 0.2).premium;
    const double sd_budget = 0.6 * solve_evpp_sd(g, x, 0.2).premium;
    const std::vector<Case> cases = {
        {"evpp/gini", kGiniD, ev, g, std::nullopt, [&](const auto& l) { return solve_evpp_choquet(g, kGini, l, 0.2); }},
        {"evpp/sd", kSd, ev, g, std::nullopt, [&](const auto& l) { return solve_evpp_sd(g, l, 0.2); }},
        {"var", kGiniD, PremiumPrinciple::value_at_risk(0.8), g9, std::nullopt,
         [&](const auto& l) { return solve_var_premium(g9, kGini, l, 0.8); }},
        {"es", kGiniD, PremiumPrinciple::expected_shortfall(0.5), g3, std::nullopt,
         [&](const auto& l) { return solve_es_premium(g3, kGini, l, 0.5); }},
        {"budget-ev/gini", kGiniD, ev, g, ev_budget,
         [&](const auto& l) { return solve_budget_evpp(g, kGiniD, l, 0.2, ev_budget); }},
        {"budget-ev/sd", kSd, ev, g, sd_budget, [&](const auto& l) { return solve_budget_evpp(g, kSd, l, 0.2, sd_budget); }},
        {"budget-var", kGiniD, PremiumPrinciple::value_at_risk(0.8), g9, var_budget,
         [&](const auto& l) { return solve_budget_var_es(g9, kGini, l, 0.8, var_budget, PremiumKind::VaR); }},
        {"budget-es", kGiniD, PremiumPrinciple::expected_shortfall(0.5), g3, es_budget,
         [&](const auto& l) { return solve_budget_var_es(g3, kGini, l, 0.5, es_budget, PremiumKind::ES); }},
    };
    for (const auto& c : cases) {
      const auto solved = c.solve(x);
      const auto problem = DiscretizedProblem::build(x, c.dev, c.principle, 64);
      const double tol = 1e-6 + discretization_slack(problem, c.pen);
      for (const auto& s : {SearchStrategy::threshold_grid(), SearchStrategy::random_lipschitz(10000)}) {
        const auto best = search_contracts(problem, c.pen, s, c.budget);
        const double gap = solved.objective_value - best.value;
        worst = std::max(worst, gap);
        ++runs;
        o.require(gap <= tol, c.name + " on " + x.describe() + " beaten by " + num(gap));
      }
    }
  }
  const double t = seconds_since(t0);
  o.require(t < 60.0, "runtime " + num(t) + " s");
  if (o.pass) o.detail = num(runs) + " searches, largest solver-minus-oracle gap " + num(worst) + " in " + num(t) + " s";
  return o;
}

Outcome deviation_axioms() {
  Outcome o;
  std::mt19937_64 rng(0xC0FFEE);
  std::gamma_distribution<double> gamma(2.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<DistortionFunction> hs = {kGini, DistortionFunction::mean_absolute(),
                                              DistortionFunction::inter_es_range(0.8),
                                              DistortionFunction::es_deviation(0.7)};
  for (int f = 0; f < 20; ++f) {
    std::vector<double> xs(2000), ys(2000);
    for (auto& v : xs) v = (1 + f % 4) * gamma(rng);
    for (auto& v : ys) v = 3 * unit(rng);
    auto map = [](std::vector<double> v, double a, double c) {
      for (auto& x : v) x = a * x + c;
      return LossDistribution::empirical(std::move(v));
    };
    for (const auto& h : hs) {
      const double d = choquet(h, LossDistribution::empirical(xs));
      const double dy = choquet(h, LossDistribution::empirical(ys));
      o.require(d >= 0, "D2 " + h.name());
      o.require(std::abs(choquet(h, map(xs, 1, 2.5)) - d) <= 1e-8 * (1 + d), "D1 " + h.name());
      for (double lambda : {0.0, 0.5, 2.0}) {
        o.require(std::abs(choquet(h, map(xs, lambda, 0)) - lambda * d) <= 1e-8 * (1 + d), "D3 " + h.name());
      }
      auto sx = xs, sy = ys;
      std::sort(sx.begin(), sx.end());
      std::sort(sy.begin(), sy.end());
      std::vector<double> como(xs.size()), indep(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        como[i] = sx[i] + sy[i];
        indep[i] = xs[i] + ys[i];
      }
      o.require(choquet(h, LossDistribution::empirical(como)) <= d + dy + 1e-8, "D4 comonotone " + h.name());
      o.require(choquet(h, LossDistribution::empirical(indep)) <= d + dy + 1e-8, "D4 independent " + h.name());
    }
  }
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    const auto& x = k % 2 ? kExp : kUniform;
    const int cells = 4 + k % 13;
    const double top = x.bounded() ? 10 : 50;
    std::vector<double> grid(cells), q(cells);
    for (int i = 0; i < cells; ++i) {
      grid[i] = top * i / cells;
      q[i] = unit(rng);
    }
    const auto ind = Indemnity::grid_marginal(grid, q);
    const double split = retained_deviation(kGini, x, ind) + ceded_deviation(kGini, x, ind);
    worst = std::max(worst, std::abs(split - choquet(kGini, x)));
  }
  o.require(worst <= 1e-8, "comonotonic split error " + num(worst));
  if (o.pass) o.detail = "20 fixtures x 4 distortions; split error " + num(worst) + " over 50 contracts";
  return o;
}

Outcome first_order_and_endpoints() {
  Outcome o;
  const double theta = 0.2;
  const auto ev = PremiumPrinciple::expected_value(theta);
  double worst_slope = 0, worst_end = 0;
  for (const auto& [alpha, beta] : {std::pair{0.5, 0.7}, std::pair{0.5, 0.0}, std::pair{0.8, 0.3}}) {
    const auto g = PenaltyFunction::linear_quadratic(alpha, beta);
    for (const auto& x : {kUniform, kExp, LossDistribution::uniform(0, 4)}) {
      const auto c = solve_evpp_choquet(g, kGini, x, theta);
      const double d = deductible(c);
      if (d > 0 && d < x.ess_sup()) {
        const double s = x.survival(d);
        const double slope = g.derivative(retained_deviation(kGini, x, Indemnity::stop_loss(d))) * kGini(s) - theta * s;
        worst_slope = std::max(worst_slope, std::abs(slope));
      }
      const auto sd = solve_evpp_sd(g, x, theta);
      const double dsd = deductible(sd);
      if (dsd > 0 && dsd < x.ess_sup()) {
        const auto w = x.truncated_moments(dsd);
        const double sigma = std::sqrt(w.variance());
        const double s = x.survival(dsd);
        const double slope = g.derivative(sigma) * s * (dsd - w.w1) / sigma - theta * s;
        worst_slope = std::max(worst_slope, std::abs(slope));
      }
      const double mean = x.bounded() ? x.ess_sup() / 2 : 10.0;
      const double gini = x.bounded() ? x.ess_sup() / 6 : 5.0;
      worst_end = std::max(worst_end, std::abs(objective(g, kGiniD, x, Indemnity::full_insurance(), ev) -
                                               (1 + theta) * mean));
      worst_end = std::max(worst_end, std::abs(objective(g, kGiniD, x, Indemnity::no_insurance(), ev) -
                                               (g(gini) + mean)));
    }
  }
  o.require(worst_slope <= 1e-6, "|F'(d*)| = " + num(worst_slope));
  o.require(worst_end <= 1e-8, "endpoint error " + num(worst_end));
  if (o.pass) o.detail = "max |F'(d*)| " + num(worst_slope) + ", endpoint error " + num(worst_end);
  return o;
}

Outcome lambda2_recovery() {
  Outcome o;
  const auto g9 = PenaltyFunction::linear_quadratic(0.9, 0.5);
  const auto g3 = PenaltyFunction::linear_quadratic(0.5, 0.3);
  double worst = 0;
  for (const auto& x : {kUniform, kExp}) {
    const auto var = solve_var_premium(g9, kGini, x, 0.8);
    const auto bv = solve_budget_var_es(g9, kGini, x, 0.8, var.premium + 1.0, PremiumKind::VaR);
    const auto& tv = bv.contract.thresholds();
    worst = std::max({worst, std::abs(tv[0]), std::abs(tv[1] - var.contract.thresholds()[0]),
                      std::abs(tv[2] - var.contract.thresholds()[1])});
    o.require(bv.multipliers && bv.multipliers->lambda2 == 0.0, "VaR lambda2 not zero");
    for (double p : {0.2, 0.5}) {
      const auto es = solve_es_premium(g3, kGini, x, p);
      const auto be = solve_budget_var_es(g3, kGini, x, p, es.premium + 1.0, PremiumKind::ES);
      const auto& te = be.contract.thresholds();
      const double d1 = es.contract.thresholds()[1];
      const double tail = std::isinf(d1) && std::isinf(te[2]) ? 0.0 : std::abs(te[2] - d1);
      worst = std::max({worst, std::abs(te[0]), std::abs(te[1] - es.contract.thresholds()[0]), tail});
      o.require(be.multipliers && be.multipliers->lambda2 == 0.0, "ES lambda2 not zero");
    }
  }
  o.require(worst <= 1e-6, "threshold mismatch " + num(worst));
  if (o.pass) o.detail = "largest threshold mismatch " + num(worst);
  return o;
}

}  // namespace

int main() {
  const struct {
    const char* id;
    const char* title;
    Outcome (*run)();
  } criteria[] = {
      {"AC1", "closed-form Gini values", closed_form_measures},
      {"AC2", "linear-penalty deductible and no-insurance region", example_one},
      {"AC3", "quadratic-penalty deductible and premium", budget_free_example},
      {"AC4", "budget binding and monotone deductible", budget_binding},
      {"AC5", "deductible shape across loss scale", figure_shapes},
      {"AC6", "ES-premium thresholds", es_premium_shape},
      {"AC7", "oracle search never beats the solvers", oracle_optimality},
      {"AC8", "deviation axioms and comonotonic split", deviation_axioms},
      {"AC9", "first-order condition and endpoint values", first_order_and_endpoints},
      {"AC10", "zero budget multiplier recovers VaR/ES solutions", lambda2_recovery},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double t = seconds_since(t0);
    std::printf("%s %-4s %-50s %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), t);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
