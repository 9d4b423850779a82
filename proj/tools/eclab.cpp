// eclab command-line front end: run or validate scenario files and print the
// artifact format reference.  Exit codes: 0 contract satisfied, 1 validation
// failure (including a rejected gap hypothesis), 2 contract miss.
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "eclab/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"eclab: invariant eigencurrents of smooth torus endomorphisms"};
  app.require_subcommand(1);

  std::string scen_path;
  std::string out_dir;
  int jobs = 1;
  long long seed_override = -1;

  CLI::App* cmd_run = app.add_subcommand("run", "Run a scenario and write its artifacts");
  cmd_run->add_option("scenario", scen_path, "Scenario JSON file")->required();
  cmd_run->add_option("--out", out_dir, "Output directory (defaults to the scenario's \"out\")");
  cmd_run->add_option("--jobs", jobs, "Upper bound on the worker count (>= 1)");
  cmd_run->add_option("--seed", seed_override, "Override the scenario's seed");

  CLI::App* cmd_validate =
      app.add_subcommand("validate", "Validate a scenario file without running it");
  cmd_validate->add_option("scenario", scen_path, "Scenario JSON file")->required();

  CLI::App* cmd_formats = app.add_subcommand("formats", "Print the artifact format reference");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_formats->parsed()) {
      std::cout << eclab::formats_description();
      return 0;
    }
    if (cmd_validate->parsed()) {
      const eclab::Scenario s = eclab::load_scenario(scen_path);
      std::cout << "valid: " << s.experiment << " scenario, hash " << eclab::scenario_hash(s.raw)
                << "\n";
      return 0;
    }
    eclab::Scenario s = eclab::load_scenario(scen_path);
    if (seed_override >= 0) s.seed = static_cast<std::uint64_t>(seed_override);
    const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(s.out_dir)
                                                      : std::filesystem::path(out_dir);
    const eclab::RunArtifacts ra = eclab::run_scenario(s, out, jobs);
    if (ra.exit_code == 0) {
      std::cout << "ok: " << s.experiment << " -> " << out.string() << "\n";
    } else if (ra.exit_code == 1) {
      std::cerr << "validation error: " << ra.summary.value("validation_error", "(see summary)")
                << "\n";
    } else {
      std::cerr << "contract miss: see " << (out / "summary.json").string() << "\n";
    }
    return ra.exit_code;
  } catch (const eclab::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
