#pragma once

#include <optional>
#include <span>
#include <vector>

namespace srkocl {

// R[i][j]: accuracy on task j's test set after training through task i.
class AccuracyMatrix {
 public:
  explicit AccuracyMatrix(std::size_t num_tasks = 0);
  explicit AccuracyMatrix(std::vector<std::vector<double>> rows);

  std::size_t size() const { return n_; }
  double at(std::size_t i, std::size_t j) const { return values_.at(i * n_ + j); }
  void set(std::size_t i, std::size_t j, double accuracy);
  std::vector<std::vector<double>> rows() const;

  bool operator==(const AccuracyMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<double> values_;
};

// Mean of the final row.
double acc(const AccuracyMatrix& r);

// Mean over j < T of (max_{j <= l < T} R[l][j]) - R[T][j]. Needs T >= 2.
double fm(const AccuracyMatrix& r);

// Mean of the diagonal.
double la(const AccuracyMatrix& r);

struct RunMetrics {
  double acc = 0.0;
  std::optional<double> fm;  // absent for single-task runs
  double la = 0.0;

  bool operator==(const RunMetrics&) const = default;
};

RunMetrics compute_metrics(const AccuracyMatrix& r);

struct MetricStats {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) deviation; 0 for a single value
  std::vector<double> values;
};

MetricStats mean_std(std::span<const double> values);

struct RunSummary {
  MetricStats acc;
  std::optional<MetricStats> fm;
  MetricStats la;
  std::size_t runs = 0;
};

RunSummary summarize(std::span<const RunMetrics> runs);

}  // namespace srkocl
