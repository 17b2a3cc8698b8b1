#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <vector>

#include "srkocl/backbone.hpp"
#include "srkocl/gradcheck.hpp"
#include "srkocl/ops.hpp"
#include "srkocl/optim.hpp"
#include "srkocl/trainer.hpp"

using namespace srkocl;
using T64 = Tensor<double>;
using Model64 = Model<double>;

namespace {

ModelSpec small_spec(std::uint64_t seed = 7) {
  ModelSpec s;
  s.nf = 4;
  s.num_tasks = 3;
  s.classes_per_task = 2;
  s.input_shape = {8, 8, 3};
  s.seed = seed;
  return s;
}

T64 input(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = rng.uniform();
  return T64(shape, v);
}

std::vector<std::vector<double>> all_values(const Model64& m) {
  std::vector<std::vector<double>> out;
  for (const auto& p : m.parameters()) out.emplace_back(p.values().begin(), p.values().end());
  return out;
}

std::vector<double> vals(const T64& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST(Backbone, SeedDeterminism) {
  EXPECT_EQ(all_values(Model64::build(small_spec(7))), all_values(Model64::build(small_spec(7))));
  EXPECT_NE(all_values(Model64::build(small_spec(7))), all_values(Model64::build(small_spec(8))));
}

TEST(Backbone, StageWidths) {
  ModelSpec s;
  s.nf = 20;
  s.input_shape = {32, 32, 3};
  const auto m = Model<float>::build(s);
  EXPECT_EQ(m.stage_widths(), (std::vector<std::size_t>{20, 40, 80, 160}));
  const auto out = m.forward(Tensor<float>::full({32, 32, 3}, 0.5f), 0);
  ASSERT_EQ(out.stage_features.size(), 4u);
  EXPECT_EQ(out.stage_features[0].shape(), (Shape{32, 32, 20}));
  EXPECT_EQ(out.stage_features[3].shape(), (Shape{4, 4, 160}));
}

TEST(Backbone, EveryConvHasMatchingAttention) {
  ModelSpec s;
  s.nf = 20;
  s.input_shape = {32, 32, 3};
  const auto m = Model<float>::build(s);
  const auto convs = m.conv_layers();
  EXPECT_EQ(m.eca_count(), convs.size());
  bool saw160 = false;
  for (const auto* c : convs) {
    ASSERT_TRUE(c->eca.has_value()) << c->name;
    EXPECT_EQ(c->eca->channels, c->out_channels()) << c->name;
    EXPECT_EQ(c->eca->kernel_size, kernel_size_rule(c->out_channels())) << c->name;
    EXPECT_EQ(c->eca->weights.numel(), c->eca->kernel_size) << c->name;
    if (c->out_channels() == 160) {
      saw160 = true;
      EXPECT_EQ(c->eca->kernel_size, 5u);
    }
  }
  EXPECT_TRUE(saw160);
}

TEST(Backbone, EcaDisabledHasNoBlocks) {
  auto s = small_spec();
  s.eca_enabled = false;
  EXPECT_EQ(Model64::build(s).eca_count(), 0u);
}

TEST(Backbone, LogitsPerHead) {
  auto s = small_spec();
  s.classes_per_task = 5;
  const auto m = Model64::build(s);
  const auto x = input(s.input_shape, 1);
  for (std::size_t t = 0; t < s.num_tasks; ++t) EXPECT_EQ(m.forward(x, t).logits.numel(), 5u);
  EXPECT_THROW(m.forward(x, 3), ValueError);
  EXPECT_THROW(m.forward(T64::zeros({8, 8, 1}), 0), ShapeError);
}

TEST(Backbone, HeadsAreDisjoint) {
  const auto m = Model64::build(small_spec());
  std::set<const void*> ids;
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_TRUE(ids.insert(m.head(t).weight.id()).second);
    EXPECT_TRUE(ids.insert(m.head(t).bias.id()).second);
  }
}

TEST(Backbone, UnitGatesMatchPlainNetwork) {
  auto with = small_spec();
  auto without = with;
  without.eca_enabled = false;
  const auto a = Model64::build(with);
  const auto b = Model64::build(without);
  const auto x = input(with.input_shape, 2);
  ForwardOptions unit;
  unit.unit_eca_gates = true;
  EXPECT_EQ(vals(a.forward(x, 1, unit).logits), vals(b.forward(x, 1).logits));
  EXPECT_NE(vals(a.forward(x, 1).logits), vals(b.forward(x, 1).logits));
}

TEST(Backbone, SampledGradientCheck) {
  auto s = small_spec();
  s.num_stages = 2;
  const auto m = Model64::build(s);
  auto params = m.parameters();
  const auto x = input(s.input_shape, 3);
  const auto report = grad_check_params<double>(
      [&] { return ops::softmax_cross_entropy(m.forward(x, 0).logits, 1); }, params, 1e-6, 0.01, 5);
  EXPECT_GE(report.coordinates, params.size());
  EXPECT_LT(report.max_relative_error, 1e-4);
}

TEST(Backbone, SnapshotSharesNothing) {
  const auto m = Model64::build(small_spec());
  const auto snap = m.snapshot();
  EXPECT_TRUE(snap.frozen());
  const auto a = m.parameters();
  const auto b = snap.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NE(a[i].id(), b[i].id());
    EXPECT_FALSE(b[i].requires_grad());
  }
}

TEST(Backbone, SnapshotEqualsLiveModel) {
  const auto m = Model64::build(small_spec());
  const auto snap = m.snapshot();
  const auto x = input({8, 8, 3}, 4);
  const auto live = m.forward(x, 2);
  const auto frozen = snap.forward(x, 2);
  EXPECT_EQ(vals(live.logits), vals(frozen.logits));
  EXPECT_EQ(pod_loss(live.stage_features, frozen.stage_features).item(), 0.0);
}

TEST(Backbone, SnapshotSurvivesTraining) {
  auto m = Model64::build(small_spec());
  const auto snap = m.snapshot();
  const auto before = all_values(snap);
  SgdConfig cfg;
  cfg.precision = Precision::f64;
  Sgd<double> opt(cfg);
  for (std::size_t step = 0; step < 100; ++step) {
    const std::vector<Sample<double>> batch = {{input({8, 8, 3}, 100 + step), step % 2, step % 3}};
    m.zero_grad();
    backward(loss_pre<double>(m, batch));
    auto params = m.parameters();
    opt.step(params);
  }
  EXPECT_EQ(all_values(snap), before);
  EXPECT_NE(all_values(m), before);
}

TEST(Backbone, CheckpointRoundTrip) {
  const auto m = Model64::build(small_spec());
  std::stringstream ss;
  m.save(ss);
  const auto loaded = Model64::load(ss);
  EXPECT_EQ(loaded.spec(), m.spec());
  EXPECT_EQ(all_values(loaded), all_values(m));
  const auto x = input({8, 8, 3}, 5);
  EXPECT_EQ(vals(loaded.forward(x, 0).logits), vals(m.forward(x, 0).logits));

  std::stringstream bad("garbage");
  EXPECT_THROW(Model64::load(bad), FormatError);
  std::stringstream wrong;
  m.save(wrong);
  EXPECT_THROW(Model<float>::load(wrong), FormatError);
}

TEST(Backbone, InvalidSpecs) {
  auto s = small_spec();
  s.nf = 0;
  EXPECT_THROW(Model64::build(s), ValueError);
  s = small_spec();
  s.num_stages = 5;
  EXPECT_THROW(Model64::build(s), ValueError);
  s = small_spec();
  s.input_shape = {4, 4, 3};  // four stages halve three times
  EXPECT_THROW(Model64::build(s), ShapeError);
}
