#include "srkocl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace srkocl {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Variant named_variant(std::string_view name) {
  if (name == "SRKOCL-Base") return {std::string(name), true, false, false};
  if (name == "SRKOCL-POD") return {std::string(name), true, true, false};
  if (name == "SRKOCL") return {std::string(name), true, true, true};
  throw ConfigError("variants", "unknown variant '" + std::string(name) +
                                    "' (use SRKOCL-Base, SRKOCL-POD, SRKOCL or an object)");
}

namespace {

// Reads fields off one JSON object and rejects any key it did not consume.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) throw ConfigError(key_path(key), "expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }

  void read(const std::string& key, std::uint64_t& out, bool) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) throw ConfigError(key_path(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
      out = v->get<double>();
    }
  }

  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void read_shape(const std::string& key, Shape& out) {
    if (const json* v = find(key)) out = parse_shape(*v, key_path(key));
  }

  void read_optional_shape(const std::string& key, std::optional<Shape>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else {
        out = parse_shape(*v, key_path(key));
      }
    }
  }

  void read_optional_seed(const std::string& key, std::optional<std::uint64_t>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      std::uint64_t s = 0;
      read(key, s, true);
      out = s;
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
    }
  }

 private:
  static Shape parse_shape(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(where, "expected [H, W, C]");
    Shape s;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() <= 0) throw ConfigError(where, "extents must be positive integers");
      s.push_back(e.get<std::size_t>());
    }
    return s;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

void validate(const ExperimentConfig& cfg) {
  const auto& b = cfg.benchmark;
  require(b.kind == "synthetic" || b.kind == "csv_labeled" || b.kind == "raw_u8_images", "benchmark.kind",
          "expected synthetic, csv_labeled or raw_u8_images");
  require(b.num_tasks >= 1, "benchmark.num_tasks", "must be at least 1");
  require(b.classes_per_task >= 1, "benchmark.classes_per_task", "must be at least 1");
  if (b.kind == "synthetic") {
    require(b.samples_per_class >= 1, "benchmark.samples_per_class", "must be at least 1");
    require(b.separation >= 0.0 && std::isfinite(b.separation), "benchmark.separation", "must be non-negative");
    require(b.noise >= 0.0 && std::isfinite(b.noise), "benchmark.noise", "must be non-negative");
  } else {
    require(!b.train_path.empty(), "benchmark.train_path", "required for file datasets");
  }

  const auto& t = cfg.train;
  require(t.batch_size >= 1, "train.batch_size", "must be at least 1");
  require(t.replay_batch_size >= 1, "train.replay_batch_size", "must be at least 1");
  require(t.learning_rate > 0.0 && std::isfinite(t.learning_rate), "train.learning_rate", "must be positive");
  require(t.momentum >= 0.0 && t.momentum < 1.0, "train.momentum", "must lie in [0, 1)");
  require(t.weight_decay >= 0.0, "train.weight_decay", "must be non-negative");
  require(t.grad_clip_norm >= 0.0 && std::isfinite(t.grad_clip_norm), "train.grad_clip_norm",
          "must be non-negative (0 disables clipping)");
  require(t.pod_weight >= 0.0 && std::isfinite(t.pod_weight), "train.pod_weight", "must be non-negative");
  const bool any_replay =
      std::any_of(cfg.variants.begin(), cfg.variants.end(), [](const Variant& v) { return v.replay; });
  require(!any_replay || t.per_task_budget >= b.classes_per_task, "train.per_task_budget",
          "must be at least classes_per_task when replay is enabled");
  require(t.nf >= 1, "model.nf", "must be at least 1");
  require(t.num_stages >= 1 && t.num_stages <= 4, "model.num_stages", "must be in 1..4");
  require(t.eca.lambda > 0.0 && std::isfinite(t.eca.lambda), "model.eca_lambda", "must be positive");
  require(std::isfinite(t.eca.b), "model.eca_b", "must be finite");
  if (b.kind == "synthetic") {
    const std::size_t min_extent = std::size_t{1} << (t.num_stages - 1);
    require(b.dims[0] >= min_extent && b.dims[1] >= min_extent, "benchmark.dims",
            "spatial extent too small for " + std::to_string(t.num_stages) + " stages");
  }

  require(!cfg.variants.empty(), "variants", "at least one variant is required");
  std::set<std::string> names;
  for (const auto& v : cfg.variants) {
    require(!v.name.empty(), "variants", "variant names must be non-empty");
    require(names.insert(v.name).second, "variants", "duplicate variant '" + v.name + "'");
  }
  require(!cfg.seeds.empty(), "seeds", "at least one seed is required");
  require(std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() == cfg.seeds.size(), "seeds",
          "seeds must be distinct");
  require(!cfg.output_dir.empty(), "output_dir", "must be non-empty");
}

ordered_json shape_json(const Shape& s) { return ordered_json(s); }

ordered_json benchmark_json(const BenchmarkConfig& b) {
  ordered_json j;
  j["kind"] = b.kind;
  j["num_tasks"] = b.num_tasks;
  j["classes_per_task"] = b.classes_per_task;
  j["dims"] = shape_json(b.dims);
  j["samples_per_class"] = b.samples_per_class;
  j["separation"] = b.separation;
  j["noise"] = b.noise;
  j["train_path"] = b.train_path;
  j["test_path"] = b.test_path;
  j["input_shape"] = b.input_shape ? shape_json(*b.input_shape) : ordered_json(nullptr);
  j["ascending_classes"] = b.ascending_classes;
  j["seed"] = b.seed ? ordered_json(*b.seed) : ordered_json(nullptr);
  return j;
}

ordered_json model_json(const TrainConfig& t) {
  ordered_json j;
  j["nf"] = t.nf;
  j["num_stages"] = t.num_stages;
  j["eca_lambda"] = t.eca.lambda;
  j["eca_b"] = t.eca.b;
  return j;
}

ordered_json train_json(const TrainConfig& t) {
  ordered_json j;
  j["batch_size"] = t.batch_size;
  j["replay_batch_size"] = t.replay_batch_size;
  j["learning_rate"] = t.learning_rate;
  j["momentum"] = t.momentum;
  j["weight_decay"] = t.weight_decay;
  j["grad_clip_norm"] = t.grad_clip_norm;
  j["per_task_budget"] = t.per_task_budget;
  j["pod_weight"] = t.pod_weight;
  j["precision"] = std::string(to_string(t.precision));
  return j;
}

ordered_json variant_json(const Variant& v) {
  ordered_json j;
  j["name"] = v.name;
  j["replay"] = v.replay;
  j["pod"] = v.pod;
  j["eca"] = v.eca;
  return j;
}

ordered_json config_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["benchmark"] = benchmark_json(cfg.benchmark);
  j["model"] = model_json(cfg.train);
  j["train"] = train_json(cfg.train);
  j["variants"] = ordered_json::array();
  for (const auto& v : cfg.variants) j["variants"].push_back(variant_json(v));
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  return j;
}

std::string file_stem(const Variant& v, std::uint64_t seed) {
  std::string stem;
  for (char c : v.name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-';
    stem += ok ? c : '-';
  }
  return stem + "_seed" + std::to_string(seed);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

std::string pad(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

std::string csv_rows(const std::vector<ReportRow>& rows) {
  std::string out = "variant,runs,acc_mean,acc_std,fm_mean,fm_std,la_mean,la_std\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    out += r.variant + "," + std::to_string(s.runs) + "," + fixed(s.acc.mean, 6) + "," + fixed(s.acc.std, 6) + ",";
    out += s.fm ? fixed(s.fm->mean, 6) + "," + fixed(s.fm->std, 6) : std::string(",");
    out += "," + fixed(s.la.mean, 6) + "," + fixed(s.la.std, 6) + "\n";
  }
  return out;
}

ordered_json summary_json(const std::vector<ReportRow>& rows) {
  ordered_json j = ordered_json::array();
  auto stats = [](const MetricStats& m) {
    ordered_json s;
    s["mean"] = m.mean;
    s["std"] = m.std;
    s["values"] = m.values;
    return s;
  };
  for (const auto& r : rows) {
    ordered_json e;
    e["variant"] = r.variant;
    e["runs"] = r.summary.runs;
    e["acc"] = stats(r.summary.acc);
    e["fm"] = r.summary.fm ? stats(*r.summary.fm) : ordered_json(nullptr);
    e["la"] = stats(r.summary.la);
    j.push_back(e);
  }
  return j;
}

std::vector<ReportRow> summarize_rows(const std::vector<RunRecord>& runs) {
  std::map<std::size_t, std::pair<std::string, std::vector<RunMetrics>>> grouped;
  for (const auto& r : runs) {
    auto& g = grouped[r.variant_index];
    if (g.second.empty()) {
      g.first = r.variant;
    } else if (g.first != r.variant) {
      throw FormatError("runs disagree on the name of variant " + std::to_string(r.variant_index));
    }
    g.second.push_back(r.metrics);
  }
  std::vector<ReportRow> rows;
  for (const auto& [index, g] : grouped) rows.push_back({g.first, summarize(g.second)});
  return rows;
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  ObjectReader top(root, "");

  if (const json* b = top.find("benchmark")) {
    ObjectReader r(*b, "benchmark");
    auto& bc = cfg.benchmark;
    r.read("kind", bc.kind);
    r.read("num_tasks", bc.num_tasks);
    r.read("classes_per_task", bc.classes_per_task);
    r.read_shape("dims", bc.dims);
    r.read("samples_per_class", bc.samples_per_class);
    r.read("separation", bc.separation);
    r.read("noise", bc.noise);
    r.read("train_path", bc.train_path);
    r.read("test_path", bc.test_path);
    r.read_optional_shape("input_shape", bc.input_shape);
    r.read("ascending_classes", bc.ascending_classes);
    r.read_optional_seed("seed", bc.seed);
    r.finish();
  }
  if (const json* m = top.find("model")) {
    ObjectReader r(*m, "model");
    r.read("nf", cfg.train.nf);
    r.read("num_stages", cfg.train.num_stages);
    r.read("eca_lambda", cfg.train.eca.lambda);
    r.read("eca_b", cfg.train.eca.b);
    r.finish();
  }
  if (const json* t = top.find("train")) {
    ObjectReader r(*t, "train");
    auto& tc = cfg.train;
    r.read("batch_size", tc.batch_size);
    r.read("replay_batch_size", tc.replay_batch_size);
    r.read("learning_rate", tc.learning_rate);
    r.read("momentum", tc.momentum);
    r.read("weight_decay", tc.weight_decay);
    r.read("grad_clip_norm", tc.grad_clip_norm);
    r.read("per_task_budget", tc.per_task_budget);
    r.read("pod_weight", tc.pod_weight);
    std::string precision(to_string(tc.precision));
    r.read("precision", precision);
    try {
      tc.precision = parse_precision(precision);
    } catch (const ValueError& e) {
      throw ConfigError("train.precision", e.what());
    }
    r.finish();
  }
  if (const json* vs = top.find("variants")) {
    if (!vs->is_array()) throw ConfigError("variants", "expected an array");
    cfg.variants.clear();
    for (std::size_t i = 0; i < vs->size(); ++i) {
      const json& v = (*vs)[i];
      if (v.is_string()) {
        cfg.variants.push_back(named_variant(v.get<std::string>()));
        continue;
      }
      ObjectReader r(v, "variants[" + std::to_string(i) + "]");
      Variant custom;
      r.read("name", custom.name);
      r.read("replay", custom.replay);
      r.read("pod", custom.pod);
      r.read("eca", custom.eca);
      r.finish();
      cfg.variants.push_back(std::move(custom));
    }
  }
  if (const json* s = top.find("seeds")) {
    if (!s->is_array()) throw ConfigError("seeds", "expected an array of non-negative integers");
    cfg.seeds.clear();
    for (const auto& e : *s) {
      if (!e.is_number_integer() || e.get<long long>() < 0) {
        throw ConfigError("seeds", "expected an array of non-negative integers");
      }
      cfg.seeds.push_back(e.get<std::uint64_t>());
    }
  }
  top.read("output_dir", cfg.output_dir);
  top.finish();
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

Benchmark make_benchmark(const BenchmarkConfig& b, std::uint64_t run_seed) {
  const std::uint64_t seed = b.seed.value_or(run_seed);
  if (b.kind == "synthetic") {
    SyntheticSpec spec;
    spec.num_tasks = b.num_tasks;
    spec.classes_per_task = b.classes_per_task;
    spec.dims = b.dims;
    spec.samples_per_class = b.samples_per_class;
    spec.separation = b.separation;
    spec.noise = b.noise;
    spec.seed = seed;
    return synthetic_suite(spec);
  }
  const auto format = parse_dataset_format(b.kind);
  LoadOptions options;
  options.input_shape = b.input_shape;
  const auto order = b.ascending_classes ? ClassOrder::ascending : ClassOrder::shuffled;
  const Dataset train = load_dataset(b.train_path, format, options);
  if (b.test_path.empty()) return split_benchmark(train, b.num_tasks, b.classes_per_task, seed, order);
  options.num_classes = train.num_classes;
  const Dataset test = load_dataset(b.test_path, format, options);
  return split_benchmark(train, test, b.num_tasks, b.classes_per_task, seed, order);
}

TrainConfig run_train_config(const ExperimentConfig& cfg, const Variant& variant, std::uint64_t seed) {
  TrainConfig t = cfg.train;
  t.replay_enabled = variant.replay;
  t.pod_enabled = variant.pod;
  t.eca_enabled = variant.eca;
  t.seed = seed;
  return t;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::size_t scheduler_threads_from_env() {
  const char* raw = std::getenv("SRKOCL_THREADS");
  if (!raw || !*raw) return 1;
  char* end = nullptr;
  const long n = std::strtol(raw, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("SRKOCL_THREADS", "expected a positive integer");
  return static_cast<std::size_t>(n);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t threads) {
  validate(cfg);
  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir / "runs");
  write_file_atomic(out_dir / "effective_config.json", config_to_json(cfg));

  std::map<std::uint64_t, Benchmark> benchmarks;
  for (auto seed : cfg.seeds) benchmarks.emplace(seed, make_benchmark(cfg.benchmark, seed));

  ExperimentResult result;
  for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
    for (auto seed : cfg.seeds) {
      RunRecord rec;
      rec.variant = cfg.variants[vi].name;
      rec.variant_index = vi;
      rec.seed = seed;
      result.runs.push_back(std::move(rec));
    }
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(result.runs.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < result.runs.size(); i = next++) {
      RunRecord& rec = result.runs[i];
      try {
        const Variant& variant = cfg.variants[rec.variant_index];
        const TrainConfig tc = run_train_config(cfg, variant, rec.seed);
        const auto start = std::chrono::steady_clock::now();
        rec.matrix = run_benchmark(benchmarks.at(rec.seed), tc);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rec.metrics = compute_metrics(rec.matrix);

        ordered_json doc;
        doc["variant"] = rec.variant;
        doc["variant_index"] = rec.variant_index;
        doc["seed"] = rec.seed;
        ordered_json run_cfg;
        run_cfg["benchmark"] = benchmark_json(cfg.benchmark);
        run_cfg["model"] = model_json(tc);
        run_cfg["train"] = train_json(tc);
        run_cfg["variant"] = variant_json(variant);
        doc["config"] = run_cfg;
        doc["matrix"] = rec.matrix.rows();
        ordered_json metrics;
        metrics["acc"] = rec.metrics.acc;
        metrics["fm"] = rec.metrics.fm ? ordered_json(*rec.metrics.fm) : ordered_json(nullptr);
        metrics["la"] = rec.metrics.la;
        doc["metrics"] = metrics;
        write_file_atomic(out_dir / "runs" / (file_stem(variant, rec.seed) + ".json"), doc.dump(2) + "\n");
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, result.runs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const NumericError& e) {
      const auto& rec = result.runs[i];
      write_file_atomic(out_dir / "diagnostics.txt", "numerical failure in variant " + rec.variant + ", seed " +
                                                          std::to_string(rec.seed) + ":\n" + e.what() + "\n");
      throw;
    }
  }

  result.rows = summarize_rows(result.runs);
  write_file_atomic(out_dir / "summary.csv", csv_rows(result.rows));
  write_file_atomic(out_dir / "summary.json", summary_json(result.rows).dump(2) + "\n");

  ordered_json manifest;
  manifest["variants"] = ordered_json::array();
  for (const auto& v : cfg.variants) manifest["variants"].push_back(v.name);
  manifest["seeds"] = cfg.seeds;
  manifest["threads"] = n_threads;
  ordered_json timings = ordered_json::array();
  double total = 0.0;
  for (const auto& rec : result.runs) {
    ordered_json t;
    t["variant"] = rec.variant;
    t["seed"] = rec.seed;
    t["seconds"] = rec.seconds;
    timings.push_back(t);
    total += rec.seconds;
  }
  manifest["timings"] = timings;
  manifest["total_run_seconds"] = total;
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

std::vector<ReportRow> read_report_rows(const std::filesystem::path& results_dir) {
  namespace fs = std::filesystem;
  const fs::path runs_dir = fs::is_directory(results_dir / "runs") ? results_dir / "runs" : results_dir;
  if (!fs::is_directory(runs_dir)) throw Error("not a results directory: " + results_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(runs_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no run files in " + results_dir.string());

  std::vector<RunRecord> runs;
  for (const auto& file : files) {
    const std::string where = file.string();
    std::ifstream in(file);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw FormatError(where + ": invalid JSON (" + e.what() + ")");
    }
    auto field = [&](const json& obj, const char* key, const char* path) -> const json& {
      if (!obj.is_object() || !obj.contains(key)) throw FormatError(where + ": missing field '" + path + "'");
      return obj.at(key);
    };
    auto number = [&](const json& obj, const char* key, const char* path) {
      const json& v = field(obj, key, path);
      if (!v.is_number()) throw FormatError(where + ": field '" + path + "' is not a number");
      return v.get<double>();
    };
    RunRecord rec;
    const json& variant = field(doc, "variant", "variant");
    if (!variant.is_string()) throw FormatError(where + ": field 'variant' is not a string");
    rec.variant = variant.get<std::string>();
    rec.variant_index = static_cast<std::size_t>(number(doc, "variant_index", "variant_index"));
    rec.seed = static_cast<std::uint64_t>(number(doc, "seed", "seed"));
    const json& metrics = field(doc, "metrics", "metrics");
    rec.metrics.acc = number(metrics, "acc", "metrics.acc");
    const json& fm_v = field(metrics, "fm", "metrics.fm");
    if (!fm_v.is_null()) {
      if (!fm_v.is_number()) throw FormatError(where + ": field 'metrics.fm' is not a number");
      rec.metrics.fm = fm_v.get<double>();
    }
    rec.metrics.la = number(metrics, "la", "metrics.la");
    runs.push_back(std::move(rec));
  }
  return summarize_rows(runs);
}

std::string format_report(const std::vector<ReportRow>& rows, ReportFormat format) {
  if (format == ReportFormat::csv) return csv_rows(rows);
  const std::vector<std::string> header = {"Method", "Runs", "ACC(↑)", "FM(↓)", "LA(↑)"};
  std::vector<std::vector<std::string>> cells;
  auto ms = [](const MetricStats& m) { return fixed(m.mean, 4) + " ± " + fixed(m.std, 4); };
  for (const auto& r : rows) {
    cells.push_back({r.variant, std::to_string(r.summary.runs), ms(r.summary.acc),
                     r.summary.fm ? ms(*r.summary.fm) : std::string("n/a"), ms(r.summary.la)});
  }
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    widths[c] = display_width(header[c]);
    for (const auto& row : cells) widths[c] = std::max(widths[c], display_width(row[c]));
  }
  auto line = [&](const std::vector<std::string>& row) {
    std::string s;
    for (std::size_t c = 0; c < row.size(); ++c) {
      s += c + 1 < row.size() ? pad(row[c], widths[c] + 2) : row[c];
    }
    return s + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : widths) total += w + 2;
  out += std::string(total - 2, '-') + "\n";
  for (const auto& row : cells) out += line(row);
  return out;
}

}  // namespace srkocl
