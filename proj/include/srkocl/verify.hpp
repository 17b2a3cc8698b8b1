#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Self-checks run by the `verify` command: gradient checks against central
// differences, independent oracles for the kernel-size rule and pooled
// embeddings, memory invariants, and the metric definitions.
namespace srkocl::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  std::optional<double> max_error;
};

struct VerifyOptions {
  // Randomized shapes per differentiable op.
  std::size_t grad_trials = 10;
  double grad_rtol = 1e-4;
  double grad_eps = 1e-6;
  std::size_t pod_tensors = 200;
  std::size_t memory_streams = 1000;
  std::size_t sampling_draws = 10000;
  double sampling_tolerance = 0.02;
  std::uint64_t seed = 0;
};

// One result per op, float64 throughout.
std::vector<CheckResult> check_gradients(const VerifyOptions& options = {});
CheckResult check_kernel_size_rule();
std::vector<CheckResult> check_pod(const VerifyOptions& options = {});
std::vector<CheckResult> check_memory(const VerifyOptions& options = {});
CheckResult check_metrics();

std::vector<CheckResult> run_all(const VerifyOptions& options = {});

bool all_passed(const std::vector<CheckResult>& results);
// One "PASS name ..." / "FAIL name ..." line per check.
std::string format_results(const std::vector<CheckResult>& results);

}  // namespace srkocl::verify
