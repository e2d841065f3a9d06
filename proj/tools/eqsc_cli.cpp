// eqsc: config-driven runs of the equivariant semiclassical checks.
//
//   eqsc <spectrum|orbits|weyl|rho|report> --config run.json [--output dir]
//        [--seed N] [--source analytic|galerkin] [--h-grid 0.1,0.05,...]

#include "eqsc/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

std::vector<double> parse_h_grid(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw eqsc::ValidationError("--h-grid: cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw eqsc::ValidationError("--h-grid: empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivariant semiclassical spectral checks"};
  app.require_subcommand(1);
  std::string config_path, output_dir, source, h_grid;
  long long seed = -1;
  for (const char* name : {"spectrum", "orbits", "weyl", "rho", "report"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--output", output_dir, "artifact directory (overrides output_dir)");
    sub->add_option("--seed", seed, "RNG seed (overrides seed)")->check(CLI::NonNegativeNumber);
    sub->add_option("--source", source, "spectrum source")->check(CLI::IsMember({"analytic", "galerkin"}));
    sub->add_option("--h-grid", h_grid, "comma-separated h values, descending");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << eqsc::error_record("validation", eqsc::exit_validation, e.what()) << std::endl;
    return eqsc::exit_validation;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  try {
    auto cfg = eqsc::load_run_config(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (seed >= 0) {
      cfg.seed = static_cast<unsigned long>(seed);
      cfg.weyl.l0.seed = cfg.seed;
    }
    if (!source.empty()) cfg.source = source;
    if (!h_grid.empty()) cfg.h_grid = parse_h_grid(h_grid);
    const auto artifacts = eqsc::run_subcommand(subcommand, cfg);
    eqsc::write_artifacts(artifacts, cfg.output_dir);
    std::cout << artifacts.summary;
    if (artifacts.violation) {
      std::cerr << eqsc::error_record("hypothesis", eqsc::exit_hypothesis, artifacts.violation->what(),
                                      artifacts.violation->subject())
                << std::endl;
      return eqsc::exit_hypothesis;
    }
    return eqsc::exit_ok;
  } catch (const eqsc::ValidationError& e) {
    std::cerr << eqsc::error_record("validation", eqsc::exit_validation, e.what()) << std::endl;
    return eqsc::exit_validation;
  } catch (const eqsc::HypothesisViolation& e) {
    std::cerr << eqsc::error_record("hypothesis", eqsc::exit_hypothesis, e.what(), e.subject()) << std::endl;
    return eqsc::exit_hypothesis;
  } catch (const eqsc::NumericalError& e) {
    std::cerr << eqsc::error_record("numerical", eqsc::exit_numerical, e.what()) << std::endl;
    return eqsc::exit_numerical;
  }
}
