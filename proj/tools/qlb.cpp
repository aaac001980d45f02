// Command line front end: simulate | refine | stability | check.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qlb/cli.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum lattice Boltzmann solver for the nonlinear Dirac equation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "qlb-out";
  std::uint64_t seed = 0;
  bool seed_set = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "path to a key = value config file")->required();
    sub->add_option("--out", out_dir, "output directory (created if missing)");
    sub->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
      seed_set = true;
    });
  };

  add_common(app.add_subcommand("simulate", "evolve initial data and write snapshots + charge"));
  add_common(app.add_subcommand("refine", "consistency and self-convergence studies"));
  add_common(app.add_subcommand("stability", "shift-stability functional traces"));
  add_common(app.add_subcommand("check", "randomized property battery"));

  CLI11_PARSE(app, argc, argv);

  try {
    const qlb::RunConfig cfg = qlb::parse_config(slurp(config_path));
    qlb::CliOptions opts;
    opts.out_dir = out_dir;
    if (seed_set) opts.seed = seed;
    const std::string cmd = app.get_subcommands().front()->get_name();
    return qlb::run_subcommand(cmd, cfg, opts, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
