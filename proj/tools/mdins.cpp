#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mdins/cli/commands.hpp"

namespace {

using namespace mdins::cli;

int run(const std::string& command, const std::string& path, std::uint64_t seed, const std::string& out_path) {
  ExperimentConfig cfg = [&] {
    try {
      return load_config(path);
    } catch (const ParseError& e) {
      std::cerr << "parse error: " << e.what() << '\n';
      std::exit(kExitParse);
    }
  }();
  const std::string target = out_path.empty() ? cfg.output : out_path;
  std::ofstream file;
  if (!target.empty()) {
    file.open(target);
    if (!file) {
      std::cerr << "cannot open output file '" << target << "'\n";
      return kExitParse;
    }
  }
  std::ostream& out = target.empty() ? std::cout : file;

  if (command == "solve") return cmd_solve(cfg, out, std::cerr);
  if (command == "sweep") return cmd_sweep(cfg, out, std::cerr);
  if (command == "measures") return cmd_measures(cfg, out, std::cerr);
  return cmd_verify(cfg, seed, out, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal insurance under mean-deviation preferences"};
  app.require_subcommand(1);
  std::string config;
  std::uint64_t seed = 0xC0FFEE;
  std::string out;

  for (const auto& [name, help] : {std::pair{"solve", "solve one problem and print the optimal contract"},
                                   std::pair{"sweep", "solve along the [sweep] axis and write a CSV table"},
                                   std::pair{"measures", "print deviation, MD_g, VaR/ES and admissibility"},
                                   std::pair{"verify", "check the solver against brute-force contract search"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "seed for randomized search");
    sub->add_option("--out", out, "write output to this path");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }
  return run(app.get_subcommands().front()->get_name(), config, seed, out);
}
