#include "srkocl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "srkocl/error.hpp"

namespace srkocl {

AccuracyMatrix::AccuracyMatrix(std::size_t num_tasks) : n_(num_tasks), values_(num_tasks * num_tasks, 0.0) {}

AccuracyMatrix::AccuracyMatrix(std::vector<std::vector<double>> rows) : AccuracyMatrix(rows.size()) {
  for (std::size_t i = 0; i < n_; ++i) {
    if (rows[i].size() != n_) throw ShapeError("accuracy matrix must be square");
    for (std::size_t j = 0; j < n_; ++j) set(i, j, rows[i][j]);
  }
}

void AccuracyMatrix::set(std::size_t i, std::size_t j, double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw ValueError("accuracy " + std::to_string(accuracy) + " outside [0, 1]");
  }
  values_.at(i * n_ + j) = accuracy;
}

std::vector<std::vector<double>> AccuracyMatrix::rows() const {
  std::vector<std::vector<double>> out(n_, std::vector<double>(n_));
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) out[i][j] = at(i, j);
  }
  return out;
}

double acc(const AccuracyMatrix& r) {
  const std::size_t T = r.size();
  if (T == 0) throw ValueError("acc: empty accuracy matrix");
  double total = 0.0;
  for (std::size_t j = 0; j < T; ++j) total += r.at(T - 1, j);
  return total / static_cast<double>(T);
}

double fm(const AccuracyMatrix& r) {
  const std::size_t T = r.size();
  if (T < 2) throw ValueError("fm: forgetting is undefined for fewer than two tasks");
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < T; ++j) {
    double best = r.at(j, j);
    for (std::size_t l = j + 1; l + 1 < T; ++l) best = std::max(best, r.at(l, j));
    total += best - r.at(T - 1, j);
  }
  return total / static_cast<double>(T - 1);
}

double la(const AccuracyMatrix& r) {
  const std::size_t T = r.size();
  if (T == 0) throw ValueError("la: empty accuracy matrix");
  double total = 0.0;
  for (std::size_t i = 0; i < T; ++i) total += r.at(i, i);
  return total / static_cast<double>(T);
}

RunMetrics compute_metrics(const AccuracyMatrix& r) {
  RunMetrics m;
  m.acc = acc(r);
  m.la = la(r);
  if (r.size() >= 2) m.fm = fm(r);
  return m;
}

MetricStats mean_std(std::span<const double> values) {
  if (values.empty()) throw ValueError("mean_std: no values");
  MetricStats s;
  s.values.assign(values.begin(), values.end());
  // Sorted summation makes the result independent of run order.
  std::vector<double> sorted = s.values;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;
  s.mean = total / static_cast<double>(sorted.size());
  if (sorted.size() > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(sorted.size() - 1));
  }
  return s;
}

RunSummary summarize(std::span<const RunMetrics> runs) {
  if (runs.empty()) throw ValueError("summarize: no runs");
  std::vector<double> a, f, l;
  bool all_fm = true;
  for (const auto& r : runs) {
    a.push_back(r.acc);
    l.push_back(r.la);
    if (r.fm) {
      f.push_back(*r.fm);
    } else {
      all_fm = false;
    }
  }
  RunSummary s;
  s.runs = runs.size();
  s.acc = mean_std(a);
  s.la = mean_std(l);
  if (all_fm) s.fm = mean_std(f);
  return s;
}

}  // namespace srkocl
