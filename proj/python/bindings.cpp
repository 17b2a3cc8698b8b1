#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "srkocl/eca.hpp"
#include "srkocl/error.hpp"
#include "srkocl/experiment.hpp"
#include "srkocl/fault.hpp"
#include "srkocl/metrics.hpp"
#include "srkocl/pod.hpp"
#include "srkocl/verify.hpp"

namespace py = pybind11;
using srkocl::Tensor;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor<double> to_tensor(const Array& a) {
  srkocl::Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor<double>(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor<double>& t) {
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

srkocl::AccuracyMatrix to_matrix(const std::vector<std::vector<double>>& rows) { return srkocl::AccuracyMatrix(rows); }

py::dict metrics_dict(const srkocl::RunMetrics& m) {
  py::dict d;
  d["acc"] = m.acc;
  d["fm"] = m.fm ? py::cast(*m.fm) : py::none();
  d["la"] = m.la;
  return d;
}

py::dict stats_dict(const srkocl::MetricStats& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["std"] = s.std;
  d["values"] = s.values;
  return d;
}

py::dict summary_dict(const srkocl::RunSummary& s) {
  py::dict d;
  d["acc"] = stats_dict(s.acc);
  d["fm"] = s.fm ? py::object(stats_dict(*s.fm)) : py::none();
  d["la"] = stats_dict(s.la);
  d["runs"] = s.runs;
  return d;
}

srkocl::StageFeatures<double> to_stages(const std::vector<Array>& arrays) {
  std::vector<Tensor<double>> out;
  for (const auto& a : arrays) out.push_back(to_tensor(a));
  return out;
}

py::tuple examples_arrays(const std::vector<srkocl::Example>& examples, const srkocl::Shape& shape) {
  std::vector<py::ssize_t> dims = {static_cast<py::ssize_t>(examples.size())};
  for (auto d : shape) dims.push_back(static_cast<py::ssize_t>(d));
  py::array_t<float> x(dims);
  py::array_t<std::int64_t> y(static_cast<py::ssize_t>(examples.size()));
  float* px = x.mutable_data();
  auto* py_ = y.mutable_data();
  const std::size_t dim = srkocl::numel(shape);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    std::copy(examples[i].pixels.begin(), examples[i].pixels.end(), px + i * dim);
    py_[i] = static_cast<std::int64_t>(examples[i].label);
  }
  return py::make_tuple(x, y);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "srkocl native core";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const srkocl::ShapeError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const srkocl::ValueError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });
  py::register_exception<srkocl::FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<srkocl::NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<srkocl::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("kernel_size_rule", &srkocl::kernel_size_rule, py::arg("channels"), py::arg("lam") = 2.0, py::arg("b") = 1.0,
        "Odd 1D attention kernel length for a channel count.");

  m.def(
      "pod_embed", [](const Array& z) { return to_array(srkocl::pod_embed(to_tensor(z))); }, py::arg("z"),
      "(H + W) x C pooled embedding of an H x W x C map.");

  m.def(
      "pod_loss",
      [](const std::vector<Array>& current, const std::vector<Array>& previous) {
        return srkocl::pod_loss<double>(to_stages(current), to_stages(previous)).item();
      },
      py::arg("current"), py::arg("previous"));

  m.def(
      "eca_forward",
      [](const Array& z, const Array& weights) {
        const Tensor<double> zt = to_tensor(z);
        if (zt.rank() != 3) throw srkocl::ShapeError("eca_forward: expected an H x W x C map");
        srkocl::EcaBlock<double> block;
        block.channels = zt.dim(2);
        block.weights = to_tensor(weights);
        block.kernel_size = block.weights.numel();
        return to_array(srkocl::eca_forward(zt, block));
      },
      py::arg("z"), py::arg("weights"), "Channel attention with an explicit kernel.");

  m.def(
      "acc", [](const std::vector<std::vector<double>>& r) { return srkocl::acc(to_matrix(r)); }, py::arg("matrix"));
  m.def(
      "fm", [](const std::vector<std::vector<double>>& r) { return srkocl::fm(to_matrix(r)); }, py::arg("matrix"));
  m.def(
      "la", [](const std::vector<std::vector<double>>& r) { return srkocl::la(to_matrix(r)); }, py::arg("matrix"));
  m.def(
      "compute_metrics",
      [](const std::vector<std::vector<double>>& r) { return metrics_dict(srkocl::compute_metrics(to_matrix(r))); },
      py::arg("matrix"));
  m.def(
      "summarize",
      [](const std::vector<py::dict>& runs) {
        std::vector<srkocl::RunMetrics> ms;
        for (const auto& d : runs) {
          srkocl::RunMetrics r;
          r.acc = d["acc"].cast<double>();
          r.la = d["la"].cast<double>();
          if (d.contains("fm") && !d["fm"].is_none()) r.fm = d["fm"].cast<double>();
          ms.push_back(r);
        }
        return summary_dict(srkocl::summarize(ms));
      },
      py::arg("runs"), "Mean and sample std of per-run metric dicts.");

  m.def(
      "synthetic_suite",
      [](std::size_t num_tasks, std::size_t classes_per_task, std::vector<std::size_t> dims,
         std::size_t samples_per_class, double separation, double noise, std::uint64_t seed) {
        srkocl::SyntheticSpec spec;
        spec.num_tasks = num_tasks;
        spec.classes_per_task = classes_per_task;
        spec.dims = dims;
        spec.samples_per_class = samples_per_class;
        spec.separation = separation;
        spec.noise = noise;
        spec.seed = seed;
        const auto bench = srkocl::synthetic_suite(spec);
        py::list tasks;
        for (const auto& t : bench.tasks) {
          py::dict d;
          d["task_id"] = t.task_id;
          d["class_ids"] = t.class_ids;
          d["train"] = examples_arrays(t.train, bench.input_shape);
          d["test"] = examples_arrays(t.test, bench.input_shape);
          tasks.append(d);
        }
        return tasks;
      },
      py::arg("num_tasks") = 5, py::arg("classes_per_task") = 2, py::arg("dims") = std::vector<std::size_t>{8, 8, 3},
      py::arg("samples_per_class") = 100, py::arg("separation") = 0.25, py::arg("noise") = 0.25, py::arg("seed") = 0,
      "Seeded split-task suite; each task is a dict with (x, y) train and test arrays.");

  m.def(
      "effective_config", [](const std::string& text) { return srkocl::config_to_json(srkocl::parse_config(text)); },
      py::arg("config_json"), "Parses a config and returns it with every default filled in.");

  m.def(
      "run_experiment",
      [](const std::string& text, std::size_t threads) {
        const auto cfg = srkocl::parse_config(text);
        srkocl::ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = srkocl::run_experiment(cfg, threads);
        }
        py::list runs, rows;
        for (const auto& r : result.runs) {
          py::dict d;
          d["variant"] = r.variant;
          d["seed"] = r.seed;
          d["matrix"] = r.matrix.rows();
          d["metrics"] = metrics_dict(r.metrics);
          runs.append(d);
        }
        for (const auto& row : result.rows) {
          py::dict d = summary_dict(row.summary);
          d["variant"] = row.variant;
          rows.append(d);
        }
        py::dict out;
        out["runs"] = runs;
        out["rows"] = rows;
        return out;
      },
      py::arg("config_json"), py::arg("threads") = 1, "Runs every (variant, seed) pair and writes the result files.");

  m.def(
      "read_report",
      [](const std::filesystem::path& dir, const std::string& format) {
        if (format != "table" && format != "csv") throw srkocl::ValueError("format must be 'table' or 'csv'");
        return srkocl::format_report(srkocl::read_report_rows(dir),
                                     format == "csv" ? srkocl::ReportFormat::csv : srkocl::ReportFormat::table);
      },
      py::arg("results_dir"), py::arg("format") = "table");

  m.def(
      "verify",
      [](std::size_t trials, std::uint64_t seed, const std::string& fault) {
        srkocl::verify::VerifyOptions options;
        options.grad_trials = trials;
        options.seed = seed;
        std::vector<srkocl::verify::CheckResult> results;
        {
          py::gil_scoped_release release;
          srkocl::fault::ScopedFault scoped(srkocl::fault::parse(fault));
          results = srkocl::verify::run_all(options);
        }
        py::list out;
        for (const auto& r : results) {
          py::dict d;
          d["name"] = r.name;
          d["passed"] = r.passed;
          d["detail"] = r.detail;
          d["max_error"] = r.max_error ? py::cast(*r.max_error) : py::none();
          out.append(d);
        }
        return out;
      },
      py::arg("trials") = 10, py::arg("seed") = 0, py::arg("fault") = "none",
      "Runs the gradient and oracle checks; one dict per check.");
}
