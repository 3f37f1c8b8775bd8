// quadshape: batch front end for the quadrature-surface shape library.
//
//   quadshape <command> [config] [--config path] [--out dir] [--dump-operators] [--quiet]
//
// Exit codes: 0 success, 1 I/O or usage failure, 2 invalid input, 3 numerical failure.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "quadshape/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quadrature-surface shape analysis: state solve, shape derivatives, Hessians, flows"};
  app.require_subcommand(1);

  std::string positional_config, config_flag;
  quadshape::cli::RunOptions opt;
  const std::map<std::string, std::string> about = {
      {"evaluate", "Solve the state; report J, u_nu and psi"},
      {"gradient", "Hadamard derivative and finite differences per direction, Riemannian gradient"},
      {"hessian", "Second-order forms per direction pair, by every route"},
      {"flow", "Armijo gradient descent in the G^A metric"},
      {"diagnose", "Curvature controls, stability eigenpairs, curvature normal derivative"},
      {"spectrum", "DtN and stability operator eigenvalues"}};

  for (const auto& name : quadshape::cli::commands()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("config_file", positional_config, "Run configuration file");
    sub->add_option("--config", config_flag, "Run configuration file");
    sub->add_option("--out", opt.out_dir, "Output directory (overrides [output] dir)");
    sub->add_flag("--dump-operators", opt.dump_operators, "Write single-layer, K' and DtN matrices as CSV");
    sub->add_flag("--quiet", opt.quiet, "Suppress progress messages");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : quadshape::cli::kExitValidation;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  if (!positional_config.empty() && !config_flag.empty() && positional_config != config_flag) {
    std::cerr << "validation error: config given twice with different paths\n";
    return quadshape::cli::kExitValidation;
  }
  const std::string config = config_flag.empty() ? positional_config : config_flag;
  if (config.empty()) {
    std::cerr << "validation error: a config file is required (positional or --config)\n";
    return quadshape::cli::kExitValidation;
  }
  return quadshape::cli::run(command, config, opt, std::cout, std::cerr);
}
