#include "srkocl/verify.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <deque>
#include <exception>
#include <functional>
#include <map>

#include "srkocl/backbone.hpp"
#include "srkocl/eca.hpp"
#include "srkocl/gradcheck.hpp"
#include "srkocl/memory.hpp"
#include "srkocl/metrics.hpp"
#include "srkocl/ops.hpp"
#include "srkocl/pod.hpp"
#include "srkocl/random.hpp"
#include "srkocl/trainer.hpp"

namespace srkocl::verify {

namespace {

using D = double;
using T64 = Tensor<D>;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); }

T64 random_tensor(Rng& rng, const Shape& shape, double lo = -1.0, double hi = 1.0) {
  std::vector<D> v(numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return T64(shape, std::move(v));
}

// Values bounded away from zero so relu kinks stay outside the difference stencil.
T64 away_from_zero(Rng& rng, const Shape& shape) {
  std::vector<D> v(numel(shape));
  for (auto& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.05, 1.0);
  return T64(shape, std::move(v));
}

// Random linear functional of y, so every output coordinate contributes.
T64 project(const T64& y, const T64& r) { return ops::sum(ops::mul(y, r)); }

using Trial = std::function<GradCheckReport(Rng&, double eps)>;

CheckResult grad_result(const std::string& op, std::uint64_t tag, const VerifyOptions& opt, const Trial& trial) {
  CheckResult res;
  res.name = "grad/" + op;
  Rng rng(derive_seed(opt.seed, 100 + tag));
  double worst = 0.0;
  std::size_t coords = 0;
  try {
    for (std::size_t t = 0; t < opt.grad_trials; ++t) {
      const auto r = trial(rng, opt.grad_eps);
      worst = std::max(worst, r.max_relative_error);
      coords += r.coordinates;
    }
  } catch (const std::exception& e) {
    res.passed = false;
    res.detail = std::string("error: ") + e.what();
    return res;
  }
  res.max_error = worst;
  res.passed = worst <= opt.grad_rtol;
  res.detail = "max_rel_err=" + sci(worst) + " over " + std::to_string(opt.grad_trials) + " shapes, " +
               std::to_string(coords) + " coordinates";
  return res;
}

GradCheckReport check(const std::function<T64()>& f, std::vector<T64> params, double eps) {
  return grad_check_params<D>(f, params, eps);
}

GradCheckReport trial_conv2d(Rng& rng, double eps) {
  const std::size_t k = rng.uniform() < 0.5 ? 1 : 3;
  const std::size_t stride = pick(rng, 1, 2), pad = pick(rng, 0, 1);
  const std::size_t lo = k > 2 * pad ? k - 2 * pad : 1;
  const std::size_t H = pick(rng, lo, 6), W = pick(rng, lo, 6), cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
  T64 x = random_tensor(rng, {H, W, cin}), K = random_tensor(rng, {k, k, cin, cout});
  const T64 probe = ops::conv2d(x, K, stride, pad);
  const T64 r = random_tensor(rng, probe.shape());
  return check([&] { return project(ops::conv2d(x, K, stride, pad), r); }, {x, K}, eps);
}

GradCheckReport trial_conv1d(Rng& rng, double eps) {
  const std::size_t C = pick(rng, 1, 12), k = 2 * pick(rng, 0, 3) + 1;
  T64 x = random_tensor(rng, {C}), w = random_tensor(rng, {k});
  const T64 r = random_tensor(rng, {C});
  return check([&] { return project(ops::conv1d(x, w), r); }, {x, w}, eps);
}

GradCheckReport trial_linear(Rng& rng, double eps) {
  const std::size_t n = pick(rng, 1, 8), m = pick(rng, 1, 8);
  T64 x = random_tensor(rng, {n}), W = random_tensor(rng, {n, m}), b = random_tensor(rng, {m});
  const T64 r = random_tensor(rng, {m});
  return check([&] { return project(ops::linear(x, W, b), r); }, {x, W, b}, eps);
}

GradCheckReport trial_activation(Rng& rng, double eps, ops::Activation kind) {
  const Shape s = {pick(rng, 1, 4), pick(rng, 1, 4), pick(rng, 1, 4)};
  T64 x = kind == ops::Activation::relu ? away_from_zero(rng, s) : random_tensor(rng, s, -3.0, 3.0);
  const T64 r = random_tensor(rng, s);
  return check([&] { return project(ops::activation(kind, x), r); }, {x}, eps);
}

GradCheckReport trial_gap(Rng& rng, double eps) {
  T64 x = random_tensor(rng, {pick(rng, 1, 5), pick(rng, 1, 5), pick(rng, 1, 4)});
  const T64 r = random_tensor(rng, {x.dim(2)});
  return check([&] { return project(ops::global_avg_pool(x), r); }, {x}, eps);
}

GradCheckReport trial_softmax_ce(Rng& rng, double eps) {
  const std::size_t C = pick(rng, 2, 8), target = pick(rng, 0, C - 1);
  T64 z = random_tensor(rng, {C}, -3.0, 3.0);
  return check([&] { return ops::softmax_cross_entropy(z, target); }, {z}, eps);
}

GradCheckReport trial_scale_channels(Rng& rng, double eps) {
  const std::size_t C = pick(rng, 1, 5);
  T64 z = random_tensor(rng, {pick(rng, 1, 4), pick(rng, 1, 4), C}), s = random_tensor(rng, {C});
  const T64 r = random_tensor(rng, z.shape());
  return check([&] { return project(ops::scale_channels(z, s), r); }, {z, s}, eps);
}

GradCheckReport trial_eca(Rng& rng, double eps) {
  const std::size_t C = pick(rng, 1, 64);
  auto block = EcaBlock<D>::create(C, EcaParams{}, rng, 0.5);
  T64 z = random_tensor(rng, {pick(rng, 1, 3), pick(rng, 1, 3), C});
  const T64 r = random_tensor(rng, z.shape());
  return check([&] { return project(eca_forward(z, block), r); }, {z, block.weights}, eps);
}

GradCheckReport trial_pod_embed(Rng& rng, double eps) {
  T64 z = random_tensor(rng, {pick(rng, 1, 5), pick(rng, 1, 5), pick(rng, 1, 4)});
  const T64 r = random_tensor(rng, {z.dim(0) + z.dim(1), z.dim(2)});
  return check([&] { return project(pod_embed(z), r); }, {z}, eps);
}

GradCheckReport trial_pod_loss(Rng& rng, double eps) {
  const std::size_t L = pick(rng, 1, 3);
  StageFeatures<D> cur, prev;
  for (std::size_t l = 0; l < L; ++l) {
    const Shape s = {pick(rng, 1, 4), pick(rng, 1, 4), pick(rng, 1, 4)};
    cur.push_back(random_tensor(rng, s));
    prev.push_back(random_tensor(rng, s));
  }
  return check([&] { return pod_loss(cur, prev); }, cur, eps);
}

// Full objective through a two-stage toy backbone, distillation included.
GradCheckReport trial_loss_total(Rng& rng, double eps) {
  ModelSpec spec;
  spec.nf = 2;
  spec.num_stages = 2;
  spec.num_tasks = 2;
  spec.classes_per_task = pick(rng, 2, 3);
  spec.input_shape = {pick(rng, 2, 4), pick(rng, 2, 4), 3};
  spec.eca_enabled = rng.uniform() < 0.75;
  spec.seed = rng.next_u64();
  auto model = Model<D>::build(spec);
  const auto prev = model.snapshot();
  for (auto& p : model.parameters()) {
    for (auto& v : p.mutable_values()) v += 0.1 * rng.normal();
  }
  std::vector<Sample<D>> batch;
  for (std::size_t i = 0, n = pick(rng, 1, 3); i < n; ++i) {
    batch.push_back({random_tensor(rng, spec.input_shape, 0.0, 1.0), pick(rng, 0, spec.classes_per_task - 1),
                     pick(rng, 0, spec.num_tasks - 1)});
  }
  TrainConfig cfg;
  cfg.pod_weight = rng.uniform(0.5, 2.0);
  return check([&] { return loss_total<D>(model, &prev, batch, cfg); }, model.parameters(), eps);
}

// Nearest odd integer by exhaustive search over the admissible odd lengths,
// ties to the smaller candidate.
std::size_t brute_force_kernel_size(std::size_t C, double lambda, double b) {
  const double target = std::abs(std::log2(static_cast<double>(C)) / lambda + b / lambda);
  std::size_t best = 1;
  double best_dist = std::abs(1.0 - target);
  for (std::size_t k = 3; k <= C; k += 2) {
    const double dist = std::abs(static_cast<double>(k) - target);
    if (dist < best_dist) {
      best = k;
      best_dist = dist;
    }
  }
  return best;
}

T64 naive_embed(const T64& z) {
  const std::size_t H = z.dim(0), W = z.dim(1), C = z.dim(2);
  const auto x = z.values();
  std::vector<D> out((H + W) * C);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t c = 0; c < C; ++c) {
      D s = 0;
      for (std::size_t w = 0; w < W; ++w) s += x[(h * W + w) * C + c];
      out[h * C + c] = s / static_cast<D>(W);
    }
  }
  for (std::size_t w = 0; w < W; ++w) {
    for (std::size_t c = 0; c < C; ++c) {
      D s = 0;
      for (std::size_t h = 0; h < H; ++h) s += x[(h * W + w) * C + c];
      out[(H + w) * C + c] = s / static_cast<D>(H);
    }
  }
  return T64({H + W, C}, std::move(out));
}

StageFeatures<D> random_stages(Rng& rng, const std::vector<Shape>& shapes) {
  StageFeatures<D> out;
  for (const auto& s : shapes) out.push_back(random_tensor(rng, s));
  return out;
}

StageFeatures<D> scaled(const StageFeatures<D>& f, double a) {
  StageFeatures<D> out;
  NoGradGuard guard;
  for (const auto& t : f) out.push_back(ops::scale(t, a));
  return out;
}

}  // namespace

std::vector<CheckResult> check_gradients(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  out.push_back(grad_result("conv2d", 1, opt, trial_conv2d));
  out.push_back(grad_result("conv1d", 2, opt, trial_conv1d));
  out.push_back(grad_result("linear", 3, opt, trial_linear));
  out.push_back(grad_result("relu", 4, opt, [](Rng& r, double e) { return trial_activation(r, e, ops::Activation::relu); }));
  out.push_back(
      grad_result("sigmoid", 5, opt, [](Rng& r, double e) { return trial_activation(r, e, ops::Activation::sigmoid); }));
  out.push_back(grad_result("global_avg_pool", 6, opt, trial_gap));
  out.push_back(grad_result("softmax_cross_entropy", 7, opt, trial_softmax_ce));
  out.push_back(grad_result("scale_channels", 8, opt, trial_scale_channels));
  out.push_back(grad_result("eca_forward", 9, opt, trial_eca));
  out.push_back(grad_result("pod_embed", 10, opt, trial_pod_embed));
  out.push_back(grad_result("pod_loss", 11, opt, trial_pod_loss));
  out.push_back(grad_result("loss_total", 12, opt, trial_loss_total));
  return out;
}

CheckResult check_kernel_size_rule() {
  CheckResult res;
  res.name = "eca/kernel_size_rule";
  std::size_t mismatches = 0;
  std::string first;
  for (std::size_t C = 1; C <= 1024; ++C) {
    const std::size_t got = kernel_size_rule(C, 2.0, 1.0), want = brute_force_kernel_size(C, 2.0, 1.0);
    if (got != want) {
      if (mismatches++ == 0) first = "C=" + std::to_string(C) + " got " + std::to_string(got) + " want " + std::to_string(want);
    }
  }
  const bool spots = kernel_size_rule(64) == 3 && kernel_size_rule(512) == 5;
  res.passed = mismatches == 0 && spots;
  res.detail = mismatches == 0 ? "C=1..1024 agree; C=64 -> " + std::to_string(kernel_size_rule(64)) + ", C=512 -> " +
                                     std::to_string(kernel_size_rule(512))
                               : std::to_string(mismatches) + " mismatches, first " + first;
  return res;
}

std::vector<CheckResult> check_pod(const VerifyOptions& opt) {
  Rng rng(derive_seed(opt.seed, 31));
  std::vector<CheckResult> out;

  CheckResult embed{"pod/embed_oracle", true, "", 0.0};
  std::size_t bad = 0;
  for (std::size_t i = 0; i < opt.pod_tensors; ++i) {
    const T64 z = random_tensor(rng, {pick(rng, 1, 8), pick(rng, 1, 8), pick(rng, 1, 6)}, -2.0, 2.0);
    const T64 got = pod_embed(z), want = naive_embed(z);
    if (got.shape() != want.shape() || !std::equal(got.values().begin(), got.values().end(), want.values().begin())) {
      ++bad;
    }
  }
  embed.passed = bad == 0;
  embed.detail = std::to_string(opt.pod_tensors - bad) + "/" + std::to_string(opt.pod_tensors) + " bit-exact";
  out.push_back(embed);

  CheckResult self{"pod/loss_self_zero", true, "", 0.0};
  CheckResult homog{"pod/quadratic_homogeneity", true, "", 0.0};
  double worst_self = 0.0, worst_homog = 0.0;
  for (std::size_t i = 0; i < opt.pod_tensors; ++i) {
    std::vector<Shape> shapes;
    for (std::size_t l = 0, L = pick(rng, 1, 4); l < L; ++l) shapes.push_back({pick(rng, 1, 6), pick(rng, 1, 6), pick(rng, 1, 5)});
    const auto f = random_stages(rng, shapes), g = random_stages(rng, shapes);
    worst_self = std::max(worst_self, std::abs(pod_loss(f, f).item()));
    const double a = rng.uniform(0.25, 4.0);
    const double base = pod_loss(f, g).item(), lhs = pod_loss(scaled(f, a), scaled(g, a)).item();
    worst_homog = std::max(worst_homog, std::abs(lhs - a * a * base) / std::max(a * a * base, DBL_MIN));
  }
  self.passed = worst_self == 0.0;
  self.max_error = worst_self;
  self.detail = "max |pod_loss(f, f)| = " + sci(worst_self);
  homog.max_error = worst_homog;
  homog.passed = worst_homog <= 1e3 * DBL_EPSILON;
  homog.detail = "max rel |L(af, ag) - a^2 L(f, g)| = " + sci(worst_homog);
  out.push_back(self);
  out.push_back(homog);
  return out;
}

std::vector<CheckResult> check_memory(const VerifyOptions& opt) {
  Rng rng(derive_seed(opt.seed, 41));
  std::vector<CheckResult> out;
  std::size_t budget_viol = 0, balance_viol = 0, recency_viol = 0;
  std::string first;
  double id = 0.0;
  for (std::size_t s = 0; s < opt.memory_streams; ++s) {
    const std::size_t cpt = pick(rng, 1, 5), budget = pick(rng, cpt, 30), tasks = pick(rng, 1, 3);
    EpisodicMemory<D> mem(budget, cpt, rng.next_u64());
    std::map<std::pair<std::size_t, std::size_t>, std::deque<double>> written;
    for (std::size_t t = 0; t < tasks; ++t) {
      const std::size_t batches = pick(rng, 1, 12);
      for (std::size_t b = 0; b < batches; ++b) {
        std::vector<Sample<D>> batch;
        // Skewed label draws stress the balance invariant.
        const std::size_t favourite = pick(rng, 0, cpt - 1);
        for (std::size_t i = 0, n = pick(rng, 1, 10); i < n; ++i) {
          const std::size_t label = rng.uniform() < 0.6 ? favourite : pick(rng, 0, cpt - 1);
          batch.push_back({T64({1}, {id}), label, t});
          written[{t, label}].push_back(id);
          id += 1.0;
        }
        mem.write_batch(t, batch);
        for (std::size_t tt = 0; tt <= t; ++tt) {
          if (mem.task_size(tt) > budget) ++budget_viol;
          std::size_t lo = budget, hi = 0;
          for (std::size_t c = 0; c < cpt; ++c) {
            lo = std::min(lo, mem.quota(c));
            hi = std::max(hi, mem.quota(c));
            const auto& hist = written[{tt, c}];
            const std::size_t keep = std::min(hist.size(), mem.quota(c));
            const auto entries = mem.class_entries(tt, c);
            bool ok = entries.size() == keep;
            for (std::size_t i = 0; ok && i < keep; ++i) {
              ok = entries[i].input.item() == hist[hist.size() - keep + i] && entries[i].label == c &&
                   entries[i].task_id == tt;
            }
            if (!ok) {
              if (recency_viol++ == 0) first = "stream " + std::to_string(s) + " task " + std::to_string(tt) + " class " + std::to_string(c);
            }
          }
          std::size_t total = 0;
          for (std::size_t c = 0; c < cpt; ++c) total += mem.quota(c);
          if (hi - lo > 1 || total != budget) ++balance_viol;
        }
      }
    }
  }
  const std::string streams = " over " + std::to_string(opt.memory_streams) + " streams";
  out.push_back({"memory/budget", budget_viol == 0, std::to_string(budget_viol) + " violations" + streams, std::nullopt});
  out.push_back({"memory/balance", balance_viol == 0, std::to_string(balance_viol) + " violations" + streams, std::nullopt});
  out.push_back({"memory/recency", recency_viol == 0,
                 std::to_string(recency_viol) + " violations" + streams + (first.empty() ? "" : ", first at " + first),
                 std::nullopt});

  // n = 1 draws from a 4-entry memory, then n = 10 draws from 40 entries.
  auto uniformity = [&](const std::string& name, std::size_t budget, std::size_t draw, std::uint64_t tag) {
    const std::size_t cpt = 2;
    EpisodicMemory<D> mem(budget, cpt, derive_seed(opt.seed, tag));
    std::size_t entries = 0;
    for (std::size_t t = 0; t < 2; ++t) {
      std::vector<Sample<D>> batch;
      for (std::size_t i = 0; i < budget; ++i) batch.push_back({T64({1}, {static_cast<D>(entries++)}), i % cpt, t});
      mem.write_batch(t, batch);
    }
    std::vector<std::size_t> hits(entries, 0);
    for (std::size_t d = 0; d < opt.sampling_draws; ++d) {
      for (const auto& smp : mem.sample(draw, 2).samples) ++hits.at(static_cast<std::size_t>(smp.input.item()));
    }
    const double expected = static_cast<double>(draw) / static_cast<double>(entries);
    double worst = 0.0;
    for (auto h : hits) worst = std::max(worst, std::abs(static_cast<double>(h) / opt.sampling_draws - expected));
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu entries, n=%zu: max |freq - %.3f| = %.3e over %zu draws", entries, draw,
                  expected, worst, opt.sampling_draws);
    out.push_back({name, worst <= opt.sampling_tolerance, buf, worst});
  };
  uniformity("memory/sampling_uniformity", 2, 1, 42);
  uniformity("memory/sampling_inclusion", 20, 10, 43);
  return out;
}

CheckResult check_metrics() {
  const AccuracyMatrix r({{0.9, 0.0}, {0.7, 0.8}});
  const double a = acc(r), f = fm(r), l = la(r);
  const bool ok = a == (0.7 + 0.8) / 2.0 && f == 0.9 - 0.7 && l == (0.9 + 0.8) / 2.0;
  char buf[128];
  std::snprintf(buf, sizeof buf, "acc=%.17g fm=%.17g la=%.17g", a, f, l);
  return {"metrics/oracle", ok, buf, std::nullopt};
}

std::vector<CheckResult> run_all(const VerifyOptions& options) {
  auto out = check_gradients(options);
  out.push_back(check_kernel_size_rule());
  for (auto& r : check_pod(options)) out.push_back(std::move(r));
  for (auto& r : check_memory(options)) out.push_back(std::move(r));
  out.push_back(check_metrics());
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

std::string format_results(const std::vector<CheckResult>& results) {
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  std::string out;
  for (const auto& r : results) {
    out += (r.passed ? "PASS  " : "FAIL  ") + r.name + std::string(width - r.name.size() + 2, ' ') + r.detail + "\n";
  }
  return out;
}

}  // namespace srkocl::verify
