#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srkocl/data.hpp"
#include "srkocl/metrics.hpp"
#include "srkocl/trainer.hpp"

namespace srkocl {

struct BenchmarkConfig {
  // "synthetic", "csv_labeled" or "raw_u8_images"
  std::string kind = "synthetic";
  std::size_t num_tasks = 5;
  std::size_t classes_per_task = 2;
  // synthetic only
  Shape dims = {8, 8, 3};
  std::size_t samples_per_class = 200;
  double separation = 0.25;
  double noise = 0.25;
  // file datasets only; without test_path each class is split 80/20
  std::string train_path;
  std::string test_path;
  std::optional<Shape> input_shape;
  bool ascending_classes = false;
  // Fixed benchmark seed; by default each run uses its own seed.
  std::optional<std::uint64_t> seed;

  bool operator==(const BenchmarkConfig&) const = default;
};

struct Variant {
  std::string name;
  bool replay = true;
  bool pod = true;
  bool eca = true;

  bool operator==(const Variant&) const = default;
};

// The three ablation rows: replay only, replay + distillation, everything.
Variant named_variant(std::string_view name);

struct ExperimentConfig {
  BenchmarkConfig benchmark;
  TrainConfig train;  // replay/pod/eca/seed are set per run from variants and seeds
  std::vector<Variant> variants = {named_variant("SRKOCL-Base"), named_variant("SRKOCL-POD"), named_variant("SRKOCL")};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string output_dir = "results";

  bool operator==(const ExperimentConfig&) const = default;
};

// JSON document -> config. Unknown keys and invalid values raise ConfigError
// naming the offending key.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Effective config with every default filled in; parses back to an equal config.
std::string config_to_json(const ExperimentConfig& cfg);

Benchmark make_benchmark(const BenchmarkConfig& cfg, std::uint64_t run_seed);
TrainConfig run_train_config(const ExperimentConfig& cfg, const Variant& variant, std::uint64_t seed);

struct RunRecord {
  std::string variant;
  std::size_t variant_index = 0;
  std::uint64_t seed = 0;
  AccuracyMatrix matrix;
  RunMetrics metrics;
  double seconds = 0.0;
};

struct ReportRow {
  std::string variant;
  RunSummary summary;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;  // variant-major, then seed order
  std::vector<ReportRow> rows;
};

// Runs every (variant, seed) pair, using up to `threads` concurrent runs, and
// writes under cfg.output_dir:
//   runs/<variant>_seed<k>.json  config echo, accuracy matrix, metrics
//   summary.csv, summary.json    one row per variant
//   effective_config.json
//   manifest.json                seeds, variants and wall-clock timings
// Everything except manifest.json is byte-identical across reruns.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t threads = 1);

// Thread count from SRKOCL_THREADS, defaulting to 1.
std::size_t scheduler_threads_from_env();

enum class ReportFormat { table, csv };

std::vector<ReportRow> read_report_rows(const std::filesystem::path& results_dir);
std::string format_report(const std::vector<ReportRow>& rows, ReportFormat format);

// Writes path via a temporary sibling and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace srkocl
