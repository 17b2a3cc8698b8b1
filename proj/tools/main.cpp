#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "srkocl/error.hpp"
#include "srkocl/experiment.hpp"
#include "srkocl/fault.hpp"
#include "srkocl/verify.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int cmd_run(const std::string& config_path) {
  const auto cfg = srkocl::load_config(config_path);
  const auto threads = srkocl::scheduler_threads_from_env();
  const auto result = srkocl::run_experiment(cfg, threads);
  std::cout << srkocl::format_report(result.rows, srkocl::ReportFormat::table);
  std::cout << "wrote " << result.runs.size() << " run files to " << cfg.output_dir << "/runs\n";
  return 0;
}

int cmd_verify(const std::string& fault_name, std::size_t trials, std::uint64_t seed) {
  srkocl::verify::VerifyOptions options;
  options.grad_trials = trials;
  options.seed = seed;
  srkocl::fault::ScopedFault fault(srkocl::fault::parse(fault_name));
  const auto results = srkocl::verify::run_all(options);
  std::cout << srkocl::verify::format_results(results);
  const bool ok = srkocl::verify::all_passed(results);
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << (ok ? "all " + std::to_string(results.size()) + " checks passed\n"
                   : std::to_string(failed) + " of " + std::to_string(results.size()) + " checks failed\n");
  return ok ? 0 : kExitError;
}

int cmd_report(const std::string& dir, const std::string& format) {
  const auto rows = srkocl::read_report_rows(dir);
  std::cout << srkocl::format_report(rows, format == "csv" ? srkocl::ReportFormat::csv : srkocl::ReportFormat::table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srkocl: online continual learning with replay, pooled distillation and channel attention"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run every (variant, seed) pair of an experiment config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();

  std::string fault = "none";
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  auto* verify = app.add_subcommand("verify", "Run gradient checks and oracle suites");
  verify->add_option("--inject-fault", fault, "Deliberate defect for mutation testing")
      ->check(CLI::IsMember({"none", "conv2d-backward-sign"}));
  verify->add_option("--trials", trials, "Random shapes per differentiable op")->check(CLI::PositiveNumber);
  verify->add_option("--seed", seed, "Seed for the randomized checks");

  std::string dir, format = "table";
  auto* report = app.add_subcommand("report", "Summarize the run files in a results directory");
  report->add_option("--dir", dir, "Results directory")->required();
  report->add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*verify) return cmd_verify(fault, trials, seed);
    return cmd_report(dir, format);
  } catch (const srkocl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const srkocl::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
