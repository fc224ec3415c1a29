#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "mdins/cli/config.hpp"
#include "mdins/contracts.hpp"
#include "mdins/measures.hpp"
#include "mdins/oracle.hpp"
#include "mdins/solvers.hpp"

namespace mdins::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitParse = 1,
  kExitSolve = 2,
  kExitSweepFailed = 3,
  kExitVerifyFailed = 4,
};

/// Nine significant digits, the fixed table format.
inline std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Dispatches on premium principle, deviation and budget.
inline OptimalContract solve_problem(const ExperimentConfig& cfg) {
  const auto& g = cfg.penalty;
  const auto& d = cfg.deviation;
  const auto& pr = cfg.premium;
  switch (pr.kind()) {
    case PremiumKind::ExpectedValue:
      if (cfg.budget) return solve_budget_evpp(g, d, cfg.loss, pr.loading(), *cfg.budget);
      return d.is_choquet() ? solve_evpp_choquet(g, d.distortion(), cfg.loss, pr.loading())
                            : solve_evpp_sd(g, cfg.loss, pr.loading());
    case PremiumKind::VaR:
    case PremiumKind::ES: {
      if (!d.is_choquet()) throw UnsupportedError("VaR and ES premiums need a Choquet deviation");
      if (cfg.budget) return solve_budget_var_es(g, d.distortion(), cfg.loss, pr.level(), *cfg.budget, pr.kind());
      return pr.kind() == PremiumKind::VaR ? solve_var_premium(g, d.distortion(), cfg.loss, pr.level())
                                           : solve_es_premium(g, d.distortion(), cfg.loss, pr.level());
    }
    default:
      throw UnsupportedError("no solver for premium principle " + pr.name());
  }
}

/// Column names of the thresholds the configured solver returns.
inline std::vector<std::string> threshold_columns(const ExperimentConfig& cfg) {
  if (cfg.premium.kind() == PremiumKind::ExpectedValue) return {"d"};
  if (cfg.budget) return {"d1", "d2", "d3"};
  return {"d_low", "d_high"};
}

inline void print_contract(const OptimalContract& c, std::ostream& out) {
  out << "form = " << c.contract.form_name() << '\n';
  out << "thresholds =";
  for (double t : c.contract.thresholds()) out << ' ' << fmt(t);
  out << '\n';
  out << "premium = " << fmt(c.premium) << '\n';
  out << "objective = " << fmt(c.objective_value) << '\n';
  out << "unique = " << (c.unique ? "true" : "false") << '\n';
  if (c.multipliers) {
    out << "lambda1 = " << fmt(c.multipliers->lambda1) << '\n';
    out << "lambda2 = " << fmt(c.multipliers->lambda2) << '\n';
  }
  out << "iterations = " << c.diagnostics.iterations << '\n';
  out << "residual = " << fmt(c.diagnostics.residual) << '\n';
  if (c.diagnostics.degenerate_tie) out << "degenerate_tie = true\n";
  for (const auto& note : c.diagnostics.notes) out << "note = " << note << '\n';
}

inline int cmd_solve(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    print_contract(solve_problem(cfg), out);
    return kExitOk;
  } catch (const std::exception& e) {
    err << "solve failed: " << e.what() << '\n';
    return kExitSolve;
  }
}

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  std::vector<double> thresholds;
  double premium = 0.0;
  double objective = 0.0;
  std::string error;
};

inline SweepRow sweep_step(const ExperimentConfig& cfg, double value) {
  SweepRow row;
  row.value = value;
  try {
    IniFile ini = cfg.source;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    ini.set(cfg.sweep->parameter, buf);
    const auto step_cfg = build_config(std::move(ini));
    const auto c = solve_problem(step_cfg);
    row.thresholds = c.contract.thresholds();
    row.premium = c.premium;
    row.objective = c.objective_value;
    row.ok = true;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// One CSV row per axis value; steps are solved on worker threads and
/// written in axis order.
inline int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err, unsigned threads = 0) {
  if (!cfg.sweep) {
    err << cfg.source.origin() << ": sweep needs a [sweep] section\n";
    return kExitParse;
  }
  const auto& axis = *cfg.sweep;
  std::vector<SweepRow> rows(static_cast<std::size_t>(axis.steps));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(axis.steps));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < rows.size(); i += threads) rows[i] = sweep_step(cfg, axis.value(static_cast<int>(i)));
      });
    }
  }

  const auto columns = threshold_columns(cfg);
  out << axis.parameter;
  for (const auto& c : columns) out << ',' << c;
  out << ",premium,objective\n";
  std::size_t failed = 0;
  for (const auto& row : rows) {
    out << fmt(row.value);
    if (row.ok) {
      for (std::size_t k = 0; k < columns.size(); ++k) {
        out << ',' << (k < row.thresholds.size() ? fmt(row.thresholds[k]) : "");
      }
      out << ',' << fmt(row.premium) << ',' << fmt(row.objective) << '\n';
    } else {
      ++failed;
      for (std::size_t k = 0; k < columns.size() + 2; ++k) out << ",error";
      out << '\n';
      err << axis.parameter << " = " << fmt(row.value) << ": " << row.error << '\n';
    }
  }
  return failed == rows.size() ? kExitSweepFailed : kExitOk;
}

inline int cmd_measures(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const double dev = evaluate(cfg.deviation, cfg.loss);
    out << "distribution = " << cfg.loss.describe() << '\n';
    out << "deviation = " << cfg.deviation.name() << '\n';
    out << "mean = " << fmt(cfg.loss.mean()) << '\n';
    out << "D = " << fmt(dev) << '\n';
    out << "MD_g = " << fmt(md_g(cfg.penalty, cfg.deviation, cfg.loss)) << '\n';
    for (double p : cfg.levels) {
      out << "VaR_" << fmt(p) << " = " << fmt(value_at_risk(cfg.loss, p)) << '\n';
      out << "ES_" << fmt(p) << " = " << fmt(expected_shortfall(cfg.loss, p)) << '\n';
    }
    if (cfg.penalty.is_linear_quadratic()) {
      out << "admissible = " << (check_monotonicity_constraint(cfg.penalty, cfg.deviation, cfg.loss) ? "true" : "false")
          << '\n';
    } else {
      out << "admissible = n/a\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "measures failed: " << e.what() << '\n';
    return kExitSolve;
  }
}

/// Solves the configured problem, then searches grid contracts three ways;
/// passes when none beats the solver by more than the tolerance plus the
/// grid's own evaluation error.
inline int cmd_verify(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  try {
    const auto solved = solve_problem(cfg);
    const auto problem = DiscretizedProblem::build(cfg.loss, cfg.deviation, cfg.premium, cfg.verify.cells);
    const double slack = discretization_slack(problem, cfg.penalty);
    const double tolerance = cfg.verify.tolerance + slack;
    const struct {
      const char* name;
      SearchStrategy strategy;
    } runs[] = {
        {"threshold_grid", SearchStrategy::threshold_grid()},
        {"random_lipschitz", SearchStrategy::random_lipschitz(cfg.verify.samples, seed)},
        {"coordinate_descent", SearchStrategy::coordinate_descent(cfg.verify.restarts, seed)},
    };
    out << "solver_objective = " << fmt(solved.objective_value) << '\n';
    out << "strategy,best_objective,gap,evaluated\n";
    double max_gap = -kInfinity;
    for (const auto& run : runs) {
      const auto best = search_contracts(problem, cfg.penalty, run.strategy, cfg.budget);
      const double gap = solved.objective_value - best.value;
      max_gap = std::max(max_gap, gap);
      out << run.name << ',' << fmt(best.value) << ',' << fmt(gap) << ',' << best.evaluated << '\n';
    }
    const bool pass = max_gap <= tolerance;
    out << "max_gap = " << fmt(max_gap) << '\n';
    out << "tolerance = " << fmt(tolerance) << '\n';
    out << "status = " << (pass ? "pass" : "fail") << '\n';
    return pass ? kExitOk : kExitVerifyFailed;
  } catch (const std::exception& e) {
    err << "verify failed: " << e.what() << '\n';
    return kExitSolve;
  }
}

}  // namespace mdins::cli
