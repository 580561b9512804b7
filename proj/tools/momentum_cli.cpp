#include <iostream>

#include <CLI11.hpp>

#include "momentum/common.hpp"
#include "momentum/experiment.hpp"

namespace ex = momentum::experiment;

int main(int argc, char** argv) {
  CLI::App app{"Constant-momentum gradient method: runs, checks and experiments"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::size_t workers = momentum::default_workers();
  bool quiet = false;

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const ex::ExperimentConfig&, const ex::RunOptions&, std::ostream&);
  };
  const Command commands[] = {
      {"run", "run the iteration and check the certificate", ex::cmd_run},
      {"track", "compare iterates with the continuous flow over several step sizes", ex::cmd_track},
      {"saddle", "linearize at a critical point and run escape trials", ex::cmd_saddle},
      {"sweep", "grid over step size, momentum and seeds", ex::cmd_sweep},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("-c,--config", config, "experiment config (JSON)")->required();
    sub->add_option("-o,--out", out, "output directory (default $MOMENTUM_OUT_DIR or ./out)");
    sub->add_option("--seed", seed, "override the root seed");
    sub->add_option("--alpha", alpha, "override the step size")->check(CLI::PositiveNumber);
    sub->add_option("-j,--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("-q,--quiet", quiet, "suppress the summary");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  ex::Overrides overrides{seed, alpha};
  ex::ExperimentConfig cfg;
  try {
    cfg = ex::load_config(config, overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const ex::RunOptions opt{out, workers, quiet};
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) {
      const int code = commands[i].fn(cfg, opt, std::cerr);
      if (!quiet) std::cout << provenance_line(cfg).substr(2) << "\n";
      return code;
    }
  }
  return 1;
}
