#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lamestab/errors.hpp"
#include "lamestab/runner.hpp"

namespace {

void print_config_error(const lamestab::ConfigError& e, const std::string& path) {
  std::string where = path;
  if (e.line() > 0) where += fmt::format(":{}", e.line());
  if (!e.field().empty()) where += fmt::format(" [{}]", e.field());
  fmt::print(stderr, "config error: {}: {}\n", where, e.what());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability experiments for shear-modulus recovery from one interior displacement field"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool quiet = false;

  auto* run_cmd = app.add_subcommand("run", "Run every check in the config and write reports");
  run_cmd->add_option("config", config_path, "Experiment config (YAML)")->required()->check(CLI::ExistingFile);
  auto* out_opt = run_cmd->add_option("--output-dir", output_dir,
                                      "Report directory (default: config, then $LAMESTAB_OUTPUT_DIR)");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Override the config seed");
  run_cmd->add_option("--jobs,-j", jobs, "Experiments run concurrently")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--quiet,-q", quiet, "No progress output");

  auto* describe_cmd = app.add_subcommand("describe", "Print problem sizes and planned solves");
  describe_cmd->add_option("config", config_path, "Experiment config (YAML)")->required()->check(CLI::ExistingFile);
  auto* describe_out = describe_cmd->add_option("--output-dir", output_dir, "Report directory override");
  auto* describe_seed = describe_cmd->add_option("--seed", seed, "Override the config seed");

  CLI11_PARSE(app, argc, argv);

  lamestab::RunOptions options;
  options.jobs = jobs;
  options.verbose = !quiet;
  if (out_opt->count() > 0 || describe_out->count() > 0) options.output_dir = output_dir;
  if (seed_opt->count() > 0 || describe_seed->count() > 0) options.seed = seed;

  try {
    const auto config = lamestab::load_config(config_path);
    if (describe_cmd->parsed()) {
      std::cout << lamestab::format_plan(lamestab::describe(config, options));
      return 0;
    }
    const auto result = lamestab::run(config, options);
    for (const auto& e : result.experiments)
      fmt::print("{:<26} {}\n", e.id, e.pass ? "pass" : "FAIL");
    fmt::print("reports written to {}\n", result.output_dir);
    return result.exit_status;
  } catch (const lamestab::ConfigError& e) {
    print_config_error(e, config_path);
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
}
