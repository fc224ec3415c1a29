#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "mdins/cli/commands.hpp"

using namespace mdins::cli;

namespace {

const char* kExample1 = R"(
# Gini deviation, uniform loss, linear penalty
[distribution]
kind = uniform
upper = 10

[deviation]
kind = gini

[penalty]
alpha = 0.5
beta = 0

[premium]
kind = expected_value
loading = 0.2
)";

std::string with(const std::string& base, const std::string& extra) { return base + extra; }

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("mdins_" + name);
  std::ofstream(path) << text;
  return path;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const auto out = std::filesystem::temp_directory_path() / "mdins_cli_stdout.txt";
  const std::string cmd = std::string(MDINS_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WEXITSTATUS(status);
}

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Ini, ParsesSectionsAndComments) {
  std::istringstream in("[a]\nx = 1 # trailing\n; full comment\n\n[b]\ny=two\n");
  const auto ini = IniFile::parse(in);
  EXPECT_EQ(ini.number("a", "x"), 1.0);
  EXPECT_EQ(ini.text("b", "y"), "two");
  EXPECT_EQ(ini.line_of("b", "y"), 6);
}

TEST(Ini, ErrorsCarryLineNumbers) {
  auto fails_at = [](const std::string& text, const std::string& where) {
    try {
      parse_config(text, "cfg");
      ADD_FAILURE() << "no error for: " << text;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
    }
  };
  fails_at("x = 1\n", "cfg:1:");
  fails_at("[distribution]\nkind uniform\n", "cfg:2:");
  fails_at("[distribution]\nkind = uniform\nkind = exponential\n", "cfg:3: duplicate");
  fails_at(with(kExample1, "[premium2]\n"), "unknown section");
  fails_at("[distribution]\nkind = uniform\nlower = 5\nupper = 3\n[penalty]\nalpha=1\n[premium]\nloading=0.2\n",
           "cfg:4:");
  fails_at("[distribution]\nkind = gamma\n[penalty]\nalpha=1\n[premium]\nloading=0.2\n", "cfg:2: unknown distribution");
  fails_at("[distribution]\nkind = uniform\nupper = ten\n[penalty]\nalpha=1\n[premium]\nloading=0.2\n",
           "cfg:3: distribution.upper");
  fails_at("[distribution]\nkind = uniform\nupper = 10\n[penalty]\nalpha=0\nbeta=0\n[premium]\nloading=0.2\n",
           "cfg:5:");
  fails_at("[distribution]\nkind = uniform\nupper = 10\nshape = 2\n[penalty]\nalpha=1\n[premium]\nloading=0.2\n",
           "cfg:4: unknown key");
  fails_at(with(kExample1, "[sweep]\nparameter = nowhere.upper\nfrom = 1\nto = 2\nsteps = 3\n"), "sweep parameter");
  fails_at("[distribution]\nkind = uniform\nupper = 10\n[penalty]\nalpha=1\n[premium]\nloading=0.2\nbudget = -1\n",
           "cfg:8: budget");
}

TEST(Solve, ExampleOnePrintsDeductible) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_solve(parse_config(kExample1), out, err), kExitOk);
  EXPECT_NE(out.str().find("form = stop_loss"), std::string::npos);
  EXPECT_NE(out.str().find("thresholds = 4\n"), std::string::npos) << out.str();
}

TEST(Solve, HeavyTailWithStandardDeviationFails) {
  const auto cfg = parse_config(R"([distribution]
kind = pareto
tail = 1
[deviation]
kind = sd
[penalty]
alpha = 0.5
beta = 0.7
[premium]
loading = 0.2
)");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_solve(cfg, out, err), kExitSolve);
  EXPECT_NE(err.str().find("infinite second moment"), std::string::npos) << err.str();
}

TEST(Solve, LooseBudgetIsReported) {
  std::string text = kExample1;
  text.replace(text.find("beta = 0"), 8, "beta = 0.7");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_solve(parse_config(text + "budget = 3.6\n"), out, err), kExitOk);
  EXPECT_NE(out.str().find("constraint not binding"), std::string::npos);
  std::ostringstream out2;
  EXPECT_EQ(cmd_solve(parse_config(text + "budget = 2\n"), out2, err), kExitOk);
  EXPECT_NE(out2.str().find("constraint binding"), std::string::npos);
  EXPECT_NE(out2.str().find("premium = 2\n"), std::string::npos) << out2.str();
}

TEST(Sweep, UniformDeductibleShape) {
  const auto cfg = parse_config(with(kExample1, "[sweep]\nparameter = distribution.upper\nfrom = 1\nto = 10\nsteps = 50\n"));
  std::ostringstream out, err;
  EXPECT_EQ(cmd_sweep(cfg, out, err, 4), kExitOk);
  const auto rows = csv(out.str());
  ASSERT_EQ(rows.size(), 51u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"distribution.upper", "d", "premium", "objective"}));
  double prev = -1;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double b = std::stod(rows[i][0]), d = std::stod(rows[i][1]);
    EXPECT_GT(d, prev);
    EXPECT_LE(d, 0.4 * b + 1e-8);
    prev = d;
  }
}

TEST(Sweep, FailedStepsAreMarked) {
  const auto cfg = parse_config(with(kExample1, "[sweep]\nparameter = premium.loading\nfrom = -1\nto = 0.2\nsteps = 3\n"));
  std::ostringstream out, err;
  EXPECT_EQ(cmd_sweep(cfg, out, err, 2), kExitOk);
  const auto rows = csv(out.str());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[1][1], "error");
  EXPECT_NE(rows[3][1], "error");

  const auto bad = parse_config(with(kExample1, "[sweep]\nparameter = premium.loading\nfrom = -2\nto = -1\nsteps = 3\n"));
  std::ostringstream out2;
  EXPECT_EQ(cmd_sweep(bad, out2, err), kExitSweepFailed);
}

TEST(Sweep, OutputIsDeterministic) {
  const auto cfg = parse_config(with(kExample1, "[sweep]\nparameter = penalty.beta\nfrom = 0\nto = 1\nsteps = 9\n"));
  std::ostringstream a, b, err;
  cmd_sweep(cfg, a, err, 1);
  cmd_sweep(cfg, b, err, 3);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Measures, PrintsQuantities) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_measures(parse_config(with(kExample1, "[measures]\nlevels = 0.9\n")), out, err), kExitOk);
  EXPECT_NE(out.str().find("D = 1.66666667\n"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("VaR_0.9 = 9\n"), std::string::npos);
  EXPECT_NE(out.str().find("ES_0.9 = 9.5\n"), std::string::npos);
  EXPECT_NE(out.str().find("admissible = true"), std::string::npos);

  const auto constant = parse_config("[distribution]\nkind = empirical\nsamples = 3, 3, 3\n[penalty]\nalpha = 1\n"
                                     "[premium]\nloading = 0.1\n");
  std::ostringstream out2;
  EXPECT_EQ(cmd_measures(constant, out2, err), kExitOk);
  EXPECT_NE(out2.str().find("D = 0\n"), std::string::npos);
  EXPECT_NE(out2.str().find("MD_g = 3\n"), std::string::npos);
}

TEST(Verify, ExampleOnePasses) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(parse_config(kExample1), 0xC0FFEE, out, err), kExitOk) << out.str() << err.str();
  EXPECT_NE(out.str().find("status = pass"), std::string::npos);
}

TEST(Binary, ExitCodes) {
  const auto good = write_temp("good.ini", kExample1);
  std::string output;
  EXPECT_EQ(run_cli("solve " + good.string(), &output), 0);
  EXPECT_NE(output.find("thresholds = 4"), std::string::npos);

  const auto broken = write_temp("broken.ini", "[distribution]\nkind uniform\n");
  EXPECT_EQ(run_cli("solve " + broken.string(), &output), 1);
  EXPECT_NE(output.find(":2:"), std::string::npos) << output;

  const auto heavy = write_temp("heavy.ini", "[distribution]\nkind = pareto\ntail = 1\n[deviation]\nkind = sd\n"
                                             "[penalty]\nalpha = 0.5\n[premium]\nloading = 0.2\n");
  EXPECT_EQ(run_cli("solve " + heavy.string(), &output), 2);

  const auto sweep = write_temp("sweep.ini", with(kExample1, "[sweep]\nparameter = premium.loading\nfrom = -2\nto = -1\n"
                                                             "steps = 2\n"));
  EXPECT_EQ(run_cli("sweep " + sweep.string(), &output), 3);

  const auto strict = write_temp("strict.ini", with(kExample1, "[verify]\ntolerance = -1\n"));
  EXPECT_EQ(run_cli("verify " + strict.string(), &output), 4);

  const auto table = std::filesystem::temp_directory_path() / "mdins_table.csv";
  const auto sweep_ok = write_temp("sweep_ok.ini", with(kExample1, "[sweep]\nparameter = distribution.upper\nfrom = 1\n"
                                                                   "to = 10\nsteps = 4\n"));
  EXPECT_EQ(run_cli("sweep " + sweep_ok.string() + " --out " + table.string() + " --seed 7"), 0);
  std::ifstream in(table);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "distribution.upper,d,premium,objective");

  EXPECT_EQ(run_cli("bogus"), 1);
}
