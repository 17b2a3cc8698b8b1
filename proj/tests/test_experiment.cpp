#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "srkocl/experiment.hpp"

using namespace srkocl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every output file except the timing manifest, keyed by relative path.
std::map<std::string, std::string> result_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

std::string tiny_config(const fs::path& out, const std::string& variants = R"(["SRKOCL-Base"])",
                        const std::string& seeds = "[0]", const std::string& train_extra = "") {
  return R"({
  "benchmark": {"num_tasks": 2, "classes_per_task": 2, "dims": [4, 4, 2], "samples_per_class": 6},
  "model": {"nf": 2, "num_stages": 2},
  "train": {"batch_size": 4, "replay_batch_size": 4, "per_task_budget": 4)" +
         train_extra + R"(},
  "variants": )" + variants +
         R"(,
  "seeds": )" + seeds +
         R"(,
  "output_dir": ")" + out.string() +
         "\"\n}\n";
}

class ExperimentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("srkocl_exp_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

}  // namespace

TEST_F(ExperimentTest, MinimalRun) {
  const auto out = dir_ / "res";
  const auto result = run_experiment(parse_config(tiny_config(out)));
  ASSERT_EQ(result.runs.size(), 1u);
  EXPECT_EQ(result.runs[0].matrix.size(), 2u);
  EXPECT_TRUE(fs::exists(out / "runs" / "SRKOCL-Base_seed0.json"));
  for (const char* f : {"summary.csv", "summary.json", "effective_config.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto csv = slurp(out / "summary.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "variant,runs,acc_mean,acc_std,fm_mean,fm_std,la_mean,la_std");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST_F(ExperimentTest, FifteenRunsThreeRows) {
  const auto out = dir_ / "res";
  const auto result =
      run_experiment(parse_config(tiny_config(out, R"(["SRKOCL-Base", "SRKOCL-POD", "SRKOCL"])", "[0, 1, 2, 3, 4]")));
  EXPECT_EQ(result.runs.size(), 15u);
  EXPECT_EQ(result.rows.size(), 3u);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(out / "runs")) files += e.path().extension() == ".json";
  EXPECT_EQ(files, 15u);
  const auto rows = read_report_rows(out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].variant, "SRKOCL-POD");
  EXPECT_EQ(rows[1].summary.runs, 5u);
}

TEST_F(ExperimentTest, RerunIsByteIdentical) {
  const auto cfg = parse_config(tiny_config(dir_ / "a", R"(["SRKOCL-Base", "SRKOCL"])", "[0, 1]"));
  run_experiment(cfg);
  const auto first = result_files(dir_ / "a");
  run_experiment(cfg);
  EXPECT_EQ(result_files(dir_ / "a"), first);
}

TEST_F(ExperimentTest, ParallelMatchesSequential) {
  auto cfg = parse_config(tiny_config(dir_ / "seq", R"(["SRKOCL-Base", "SRKOCL"])", "[0, 1, 2]"));
  run_experiment(cfg, 1);
  cfg.output_dir = (dir_ / "par").string();
  run_experiment(cfg, 3);
  auto seq = result_files(dir_ / "seq");
  auto par = result_files(dir_ / "par");
  // The config echo names its own output directory.
  seq.erase("effective_config.json");
  par.erase("effective_config.json");
  EXPECT_EQ(seq, par);
}

TEST_F(ExperimentTest, EffectiveConfigRoundTrip) {
  const auto cfg = parse_config(tiny_config(dir_ / "x", R"(["SRKOCL", {"name": "plain", "replay": false}])"));
  EXPECT_EQ(parse_config(config_to_json(cfg)), cfg);
  EXPECT_EQ(cfg.variants[1], (Variant{"plain", false, true, true}));
  const auto defaults = parse_config("{}");
  EXPECT_EQ(defaults.seeds.size(), 5u);
  EXPECT_EQ(defaults.variants.size(), 3u);
  EXPECT_EQ(parse_config(config_to_json(defaults)), defaults);
}

TEST_F(ExperimentTest, ConfigErrorsNameTheKey) {
  const auto key_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of(R"({"train": {"learning_rat": 0.1}})"), "train.learning_rat");
  EXPECT_EQ(key_of(R"({"train": {"learning_rate": -1}})"), "train.learning_rate");
  EXPECT_EQ(key_of(R"({"benchmark": {"kind": "mnist"}})"), "benchmark.kind");
  EXPECT_EQ(key_of(R"({"variants": ["SRKOCL-Turbo"]})"), "variants");
  EXPECT_EQ(key_of(R"({"seeds": [1, 1]})"), "seeds");
  EXPECT_EQ(key_of(R"({"model": {"num_stages": 9}})"), "model.num_stages");
  EXPECT_EQ(key_of("{not json"), "<document>");
}

TEST(Variants, Named) {
  EXPECT_EQ(named_variant("SRKOCL-Base"), (Variant{"SRKOCL-Base", true, false, false}));
  EXPECT_EQ(named_variant("SRKOCL-POD"), (Variant{"SRKOCL-POD", true, true, false}));
  EXPECT_EQ(named_variant("SRKOCL"), (Variant{"SRKOCL", true, true, true}));
}

TEST_F(ExperimentTest, NumericFailureWritesDiagnostics) {
  const auto out = dir_ / "res";
  const auto cfg = parse_config(tiny_config(out, R"(["SRKOCL-Base"])", "[0]", R"(, "learning_rate": 1e30)"));
  EXPECT_THROW(run_experiment(cfg), NumericError);
  const auto diag = slurp(out / "diagnostics.txt");
  EXPECT_NE(diag.find("SRKOCL-Base"), std::string::npos);
}

TEST_F(ExperimentTest, ReportSingleRow) {
  const auto out = dir_ / "res";
  run_experiment(parse_config(tiny_config(out)));
  const auto table = format_report(read_report_rows(out), ReportFormat::table);
  EXPECT_NE(table.find("FM(↓)"), std::string::npos);
  EXPECT_NE(table.find("ACC(↑)"), std::string::npos);
  EXPECT_NE(table.find(" ± "), std::string::npos);
  EXPECT_EQ(read_report_rows(out).size(), 1u);
  const auto csv = format_report(read_report_rows(out), ReportFormat::csv);
  EXPECT_EQ(csv, slurp(out / "summary.csv"));
}

TEST_F(ExperimentTest, ReportErrors) {
  const auto out = dir_ / "res";
  fs::create_directories(out / "runs");
  EXPECT_THROW(read_report_rows(out), Error);
  std::ofstream(out / "runs" / "broken.json")
      << R"({"variant": "SRKOCL", "variant_index": 0, "seed": 0, "metrics": {"acc": 0.5, "fm": 0.1}})";
  try {
    read_report_rows(out);
    FAIL() << "expected a parse error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("broken.json"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("metrics.la"), std::string::npos);
  }
}

TEST(Scheduler, ThreadsFromEnv) {
  ::unsetenv("SRKOCL_THREADS");
  EXPECT_EQ(scheduler_threads_from_env(), 1u);
  ::setenv("SRKOCL_THREADS", "4", 1);
  EXPECT_EQ(scheduler_threads_from_env(), 4u);
  ::setenv("SRKOCL_THREADS", "many", 1);
  EXPECT_THROW(scheduler_threads_from_env(), ConfigError);
  ::unsetenv("SRKOCL_THREADS");
}

#ifdef SRKOCL_CLI_PATH

namespace {

CliResult cli(const std::string& args, const fs::path& scratch) {
  const auto out = scratch / "stdout.txt";
  const auto err = scratch / "stderr.txt";
  const std::string cmd = std::string("\"") + SRKOCL_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace

TEST_F(ExperimentTest, CliRunAndReport) {
  const auto cfg = write("c.json", tiny_config(dir_ / "res"));
  const auto run = cli("run --config " + cfg.string(), dir_);
  ASSERT_EQ(run.code, 0) << run.err;
  EXPECT_NE(run.out.find("SRKOCL-Base"), std::string::npos);
  const auto report = cli("report --dir " + (dir_ / "res").string(), dir_);
  EXPECT_EQ(report.code, 0);
  EXPECT_NE(report.out.find("FM(↓)"), std::string::npos);
  const auto csv = cli("report --format csv --dir " + (dir_ / "res").string(), dir_);
  EXPECT_EQ(csv.out, slurp(dir_ / "res" / "summary.csv"));
}

TEST_F(ExperimentTest, CliUnknownKeyExitsTwo) {
  const auto cfg = write("bad.json", R"({"train": {"batchsize": 3}})");
  const auto r = cli("run --config " + cfg.string(), dir_);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("train.batchsize"), std::string::npos);
  EXPECT_EQ(cli("run", dir_).code, 2);
  EXPECT_EQ(cli("frobnicate", dir_).code, 2);
}

TEST_F(ExperimentTest, CliNumericFailureExitsThree) {
  const auto out = dir_ / "res";
  const auto cfg = write("lr.json", tiny_config(out, R"(["SRKOCL-Base"])", "[0]", R"(, "learning_rate": 1e30)"));
  const auto r = cli("run --config " + cfg.string(), dir_);
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(fs::exists(out / "diagnostics.txt"));
}

TEST_F(ExperimentTest, CliReportMissingField) {
  fs::create_directories(dir_ / "res" / "runs");
  std::ofstream(dir_ / "res" / "runs" / "x_seed0.json") << R"({"variant": "x", "metrics": {"acc": 1, "fm": 0}})";
  const auto r = cli("report --dir " + (dir_ / "res").string(), dir_);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("x_seed0.json"), std::string::npos);
}

TEST_F(ExperimentTest, CliVerify) {
  const auto ok = cli("verify --trials 2", dir_);
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("PASS  grad/conv2d"), std::string::npos);
  EXPECT_NE(ok.out.find("max_rel_err="), std::string::npos);
  const auto bad = cli("verify --trials 2 --inject-fault conv2d-backward-sign", dir_);
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("FAIL  grad/conv2d"), std::string::npos);
}

#endif
