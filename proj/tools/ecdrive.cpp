#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ecdrive/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Edge-cloud collaborative motion planning experiments"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run every seed x mode episode of a config");
  run->add_option("config", run_config, "Experiment config (JSON)")->required();

  std::string pattern;
  std::string out_csv;
  auto* summarize =
      app.add_subcommand("summarize", "Check traces and tabulate their metrics");
  summarize->add_option("glob", pattern, "Trace file pattern")->required();
  summarize->add_option("--out", out_csv, "CSV output path")->required();

  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", validate_config, "Experiment config (JSON)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ecdrive::cli::kExitConfig;
  }

  if (*run) return ecdrive::cli::cmd_run(run_config, std::cout, std::cerr);
  if (*summarize) {
    return ecdrive::cli::cmd_summarize(pattern, out_csv, std::cout, std::cerr);
  }
  return ecdrive::cli::cmd_validate(validate_config, std::cout, std::cerr);
}
