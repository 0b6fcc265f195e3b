// Command-line driver: simulate | build-library | localize | evaluate | report.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "semvo/errors.hpp"
#include "semvo/pipeline.hpp"
#include "semvo/run_config.hpp"

namespace {

semvo::RunConfig load_config(const std::string& config_path, std::optional<std::uint64_t> seed) {
  semvo::RunConfig config;
  if (!config_path.empty()) config = semvo::RunConfig::from_file(config_path);
  if (seed.has_value()) config.seed = *seed;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantic visual-odometry and mapping toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "run configuration JSON (defaults apply when omitted)");
  app.add_option("--seed", seed, "override the config seed");

  std::string sim_out = "dataset";
  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic drive dataset");
  sim->add_option("--out", sim_out, "output dataset directory");

  std::string bl_dataset;
  std::string bl_out = "library.jsonl";
  CLI::App* bl = app.add_subcommand("build-library", "assemble the benchmark element library");
  bl->add_option("dataset", bl_dataset, "mapping-pass dataset directory")->required();
  bl->add_option("--out", bl_out, "output library path");

  std::string loc_dataset;
  std::string loc_library;
  std::string loc_out = "localize";
  semvo::LocalizeOptions loc_options;
  CLI::App* loc = app.add_subcommand("localize", "run matching + windowed optimization");
  loc->add_option("dataset", loc_dataset, "drive dataset directory")->required();
  loc->add_option("library", loc_library, "benchmark library path")->required();
  loc->add_option("--out", loc_out, "output directory");
  loc->add_flag("--strip-ids", loc_options.strip_ids,
                "omit element ids from reported elements");

  std::string ev_dataset;
  std::string ev_localize;
  std::string ev_out = "eval";
  bool before_after = false;
  CLI::App* ev = app.add_subcommand("evaluate", "score reported elements and trajectories");
  ev->add_option("dataset", ev_dataset, "dataset directory with ground truth")->required();
  ev->add_option("localize", ev_localize, "localize output directory")->required();
  ev->add_option("--out", ev_out, "output directory");
  ev->add_flag("--before-after", before_after, "also evaluate the pre-optimization variant");

  std::string rep_dir;
  CLI::App* rep = app.add_subcommand("report", "render the metric table from report JSONs");
  rep->add_option("eval", rep_dir, "evaluate output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      semvo::cmd_simulate(load_config(config_path, seed), sim_out);
    } else if (bl->parsed()) {
      semvo::cmd_build_library(bl_dataset, bl_out, load_config(config_path, seed));
    } else if (loc->parsed()) {
      semvo::cmd_localize(loc_dataset, loc_library, load_config(config_path, seed), loc_out,
                          loc_options);
    } else if (ev->parsed()) {
      semvo::cmd_evaluate(ev_dataset, ev_localize, load_config(config_path, seed), ev_out,
                          before_after);
    } else if (rep->parsed()) {
      std::cout << semvo::cmd_report(rep_dir);
    }
  } catch (const semvo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const semvo::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const semvo::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const semvo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
