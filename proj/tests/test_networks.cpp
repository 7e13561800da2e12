// Copyright 2026 The DKN Filtering Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "dkn/filtering.hpp"
#include "dkn/networks.hpp"
#include "dkn/ops.hpp"
#include "test_util.hpp"

namespace dkn {
namespace {

using testing::random_tensor;

TEST(ShapeChain, DknTowerLayerByLayer) {
  const std::vector<ConvSpec> tower = dkn_config().tower(3);
  const std::vector<Shape> chain = stack_shape_chain(tower, {3, 51, 51});
  const std::vector<Shape> expected{{3, 51, 51},  {32, 45, 45}, {32, 22, 22},
                                    {64, 18, 18}, {64, 9, 9},   {128, 5, 5},
                                    {128, 3, 3},  {128, 1, 1}};
  EXPECT_EQ(chain, expected);
}

TEST(ShapeChain, FdknTowerOnTheResampledGrid) {
  const std::vector<ConvSpec> tower = fdkn_config().tower(3);
  EXPECT_EQ(tower.front().in_channels, 48);
  const std::vector<Shape> chain = stack_shape_chain(tower, {48, 13, 13});
  const std::vector<int> extents{13, 11, 9, 7, 5, 3, 1};
  ASSERT_EQ(chain.size(), extents.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    EXPECT_EQ(chain[i][1], extents[i]);
    EXPECT_EQ(chain[i][2], extents[i]);
  }
  EXPECT_EQ(chain.back()[0], 128);
}

TEST(ShapeChain, RejectsWrongInputs) {
  const std::vector<ConvSpec> tower = dkn_config().tower(3);
  EXPECT_THROW(stack_shape_chain(tower, {1, 51, 51}), ShapeError);
  EXPECT_THROW(stack_shape_chain(tower, {3, 20, 20}), ShapeError);
}

TEST(ReceptiveField, ComputedFromTheTowers) {
  EXPECT_EQ(dkn_config().receptive_field(), 51);
  EXPECT_EQ(fdkn_config().receptive_field(), 13);
  const std::vector<ConvSpec> single{{1, 1, 3, 1, false}};
  EXPECT_EQ(receptive_field_extent(single), 3);
  EXPECT_EQ(stack_stride(dkn_config().tower(1)), 4);
  EXPECT_EQ(stack_stride(fdkn_config().tower(1)), 1);
  // An input of exactly one receptive field yields one output cell.
  EXPECT_EQ(stack_output_extent(dkn_config().tower(1), 51), 1);
  EXPECT_EQ(stack_output_extent(fdkn_config().tower(1), 13), 1);
}

TEST(ParameterCount, FeatureTowersMatchTheReportedSizes) {
  const KernelNetwork<float> dkn(dkn_config(), 1);
  const KernelNetwork<float> fdkn(fdkn_config(), 1);
  EXPECT_EQ(dkn.feature_parameter_count(), 1151104u);
  EXPECT_EQ(fdkn.feature_parameter_count(), 591616u);
  EXPECT_EQ(dkn.parameter_count(), 1158070u);
  EXPECT_EQ(fdkn.parameter_count(), 703072u);
  EXPECT_LT(std::abs(dkn.feature_parameter_count() / 1.1e6 - 1), 0.05);
  EXPECT_LT(std::abs(fdkn.feature_parameter_count() / 0.6e6 - 1), 0.05);
}

TEST(ParameterCount, FrozenOffsetsDropTheOffsetHeads) {
  ModelConfig c = dkn_config();
  c.learn_offsets = false;
  const KernelNetwork<float> m(c, 1);
  EXPECT_EQ(m.parameter_count(), 1158070u - 2u * (18u * 128u + 18u));
}

TEST(ModelConfig, TextRoundTripAndValidation) {
  ModelConfig c = fdkn_config();
  c.kernel_size = 5;
  c.window = 9;
  c.border = BorderMode::kZero;
  c.learn_offsets = false;
  const ModelConfig back = model_config_from_text(model_config_to_text(c));
  EXPECT_EQ(model_config_to_text(back), model_config_to_text(c));
  EXPECT_THROW(model_config_from_text("arch=dkn\nbogus=1\n"), ShapeError);
  EXPECT_THROW(model_config_from_text("arch=cnn\n"), ShapeError);
  ModelConfig bad = dkn_config();
  bad.kernel_size = 4;
  EXPECT_THROW(bad.validate(), ShapeError);
  bad = dkn_config();
  bad.window = 1;
  EXPECT_THROW(bad.validate(), ShapeError);
  bad = dkn_config();
  bad.residual = false;  // constraint still mean_subtract
  EXPECT_THROW(bad.validate(), ShapeError);
  bad = dkn_config();
  bad.channels.pop_back();
  EXPECT_THROW(KernelNetwork<float>(bad, 1), ShapeError);
}

TEST(KernelNetwork, InitializationIsSeeded) {
  KernelNetwork<float> a(dkn_config(), 5), b(dkn_config(), 5), c(dkn_config(), 6);
  const auto pa = a.store().parameters(), pb = b.store().parameters(),
             pc = c.store().parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name, pb[i]->name);
    EXPECT_EQ(pa[i]->value, pb[i]->value);
    any_diff = any_diff || !(pa[i]->value == pc[i]->value);
  }
  EXPECT_TRUE(any_diff);
  EXPECT_EQ(pa.front()->name, "guidance.conv1.weight");
}

TEST(KernelNetwork, OffsetsStartJustOffTheRegularGrid) {
  for (const ModelConfig& c : {dkn_config(), fdkn_config()}) {
    KernelNetwork<double> m(c, 4);
    const int n = c.arch == Arch::kDkn ? 51 : 52;
    Graph<double> g(false);
    const Var<double> g_in = g.constant(m.prepare_input(random_tensor<double>({3, n, n}, 5, 0, 1)));
    const Var<double> t_in = g.constant(m.prepare_input(random_tensor<double>({1, n, n}, 6, 0, 1)));
    const FieldVars<double> field = m.predict(g_in, t_in, NormMode::kEval);
    ASSERT_GT(field.offsets.value().size(), 0u);
    double largest = 0;
    std::size_t nonzero = 0;
    for (double v : field.offsets.value().values()) {
      largest = std::max(largest, std::abs(v));
      nonzero += v != 0.0;
    }
    EXPECT_LT(largest, 0.25);
    EXPECT_EQ(nonzero, field.offsets.value().size());
  }
}

TEST(KernelNetwork, DknFeaturesOn51Patch) {
  KernelNetwork<double> m(dkn_config(), 1);
  Graph<double> g(false);
  std::vector<Shape> trace;
  const TwoStreamFeatures<double> f =
      m.features(g.constant(random_tensor<double>({3, 51, 51}, 2, 0, 1)),
                 g.constant(random_tensor<double>({1, 51, 51}, 3, 0, 1)),
                 NormMode::kEval, &trace);
  EXPECT_EQ(f.guidance.shape(), (Shape{128, 1, 1}));
  EXPECT_EQ(f.target.shape(), (Shape{128, 1, 1}));
  ASSERT_EQ(trace.size(), 8u);
  EXPECT_EQ(trace[2], (Shape{32, 22, 22}));
}

TEST(KernelNetwork, ZeroInputZeroBiasGivesZeroFeatures) {
  KernelNetwork<double> m(dkn_config(), 1);
  Graph<double> g(false);
  const TwoStreamFeatures<double> f =
      m.features(g.constant(TensorD(Shape{3, 51, 51})),
                 g.constant(TensorD(Shape{1, 51, 51})), NormMode::kEval);
  for (double v : f.guidance.value().values()) EXPECT_EQ(v, 0.0);
  for (double v : f.target.value().values()) EXPECT_EQ(v, 0.0);
}

class HeadTest : public ::testing::TestWithParam<bool> {};

TEST_P(HeadTest, ConstraintHoldsForRandomFeatures) {
  const bool residual = GetParam();
  ModelConfig c = dkn_config();
  c.residual = residual;
  c.constraint = residual ? KernelConstraint::kMeanSubtract
                          : KernelConstraint::kL1Normalize;
  KernelNetwork<double> m(c, 1);
  Graph<double> g(false);
  const TwoStreamFeatures<double> f{
      g.constant(random_tensor<double>({128, 4, 5}, 4, -3, 3)),
      g.constant(random_tensor<double>({128, 4, 5}, 5, -3, 3))};
  const TensorD w = m.weight_head(f).value();
  ASSERT_EQ(w.shape(), (Shape{9, 4, 5}));
  EXPECT_LT(max_constraint_violation(w, c.constraint), 1e-12);
  if (!residual) {
    for (double v : w.values()) EXPECT_GT(v, 0.0);
  }
  EXPECT_EQ(m.offset_head(f).shape(), (Shape{18, 4, 5}));
}

INSTANTIATE_TEST_SUITE_P(Modes, HeadTest, ::testing::Values(true, false));

TEST(KernelNetwork, HalfSigmoidsGiveQuarterThenZero) {
  KernelNetwork<double> m(dkn_config(), 1);
  for (const char* s : {"guidance", "target"})
    m.store().find(std::string(s) + ".weight_head.weight")->value.fill(0);
  Graph<double> g(false);
  const TwoStreamFeatures<double> f{
      g.constant(random_tensor<double>({128, 2, 2}, 6)),
      g.constant(random_tensor<double>({128, 2, 2}, 7))};
  for (double v : m.weight_head(f).value().values()) EXPECT_EQ(v, 0.0);
  ModelConfig plain = dkn_config();
  plain.residual = false;
  plain.constraint = KernelConstraint::kL1Normalize;
  KernelNetwork<double> p(plain, 1);
  for (const char* s : {"guidance", "target"})
    p.store().find(std::string(s) + ".weight_head.weight")->value.fill(0);
  for (double v : p.weight_head(f).value().values()) EXPECT_DOUBLE_EQ(v, 1.0 / 9);
}

TEST(KernelNetwork, OffsetHeadIsTheProductOfTheStreams) {
  KernelNetwork<double> m(dkn_config(), 1);
  Graph<double> g(false);
  const TwoStreamFeatures<double> f{
      g.constant(random_tensor<double>({128, 2, 3}, 8)),
      g.constant(random_tensor<double>({128, 2, 3}, 9))};
  // Guidance stream emits all ones.
  m.store().find("guidance.offset_head.weight")->value.fill(0);
  m.store().find("guidance.offset_head.bias")->value.fill(1);
  const TensorD with_ones = m.offset_head(f).value();
  m.store().find("guidance.offset_head.bias")->value.fill(0);
  for (double v : m.offset_head(f).value().values()) EXPECT_EQ(v, 0.0);
  // Target stream alone.
  Parameter<double>* tw = m.store().find("target.offset_head.weight");
  Parameter<double>* tb = m.store().find("target.offset_head.bias");
  const TensorD t = conv2d(f.target, g.constant(tw->value), g.constant(tb->value)).value();
  EXPECT_LT(max_abs_diff(with_ones, t), 1e-15);
}

TEST(KernelNetwork, FrozenOffsetsAreZero) {
  ModelConfig c = dkn_config();
  c.learn_offsets = false;
  KernelNetwork<double> m(c, 1);
  EXPECT_EQ(m.store().find("guidance.offset_head.weight"), nullptr);
  Graph<double> g(false);
  const FieldVars<double> fv =
      m.predict(g.constant(random_tensor<double>({3, 55, 55}, 1, 0, 1)),
                g.constant(random_tensor<double>({1, 55, 55}, 2, 0, 1)),
                NormMode::kEval);
  EXPECT_EQ(fv.offsets.shape(), (Shape{18, 2, 2}));
  for (double v : fv.offsets.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(KernelNetwork, SingleStreamVariants) {
  for (bool guidance : {true, false}) {
    ModelConfig c = dkn_config();
    c.use_guidance = guidance;
    c.use_target = !guidance;
    KernelNetwork<double> m(c, 1);
    EXPECT_EQ(m.store().find("guidance.conv1.weight") != nullptr, guidance);
    Graph<double> g(false);
    const FieldVars<double> fv =
        m.predict(g.constant(random_tensor<double>({3, 51, 51}, 1, 0, 1)),
                  g.constant(random_tensor<double>({1, 51, 51}, 2, 0, 1)),
                  NormMode::kEval);
    EXPECT_LT(max_constraint_violation(fv.weights.value(), c.constraint), 1e-12);
  }
}

TEST(KernelNetwork, FdknOnePassCoversEverySubpixel) {
  KernelNetwork<double> m(fdkn_config(), 1);
  Graph<double> g(false);
  // 64x64 output plus 24 pixels of context on each side.
  const int extent = 64 + 2 * 24;
  const FieldVars<double> fv = m.predict(
      g.constant(m.prepare_input(random_tensor<double>({3, extent, extent}, 3, 0, 1))),
      g.constant(m.prepare_input(random_tensor<double>({1, extent, extent}, 4, 0, 1))),
      NormMode::kEval);
  EXPECT_EQ(fv.weights.shape(), (Shape{9, 64, 64}));
  EXPECT_EQ(fv.offsets.shape(), (Shape{18, 64, 64}));
  EXPECT_LT(max_constraint_violation(fv.weights.value(), KernelConstraint::kMeanSubtract),
            1e-12);
  EXPECT_EQ(m.forward_passes(), 1u);
  EXPECT_THROW(m.prepare_input(TensorD(Shape{1, 30, 32})), ShapeError);
}

TEST(KernelNetwork, BrokenMeanSubtractionHookViolatesTheConstraint) {
  KernelNetwork<double> m(dkn_config(), 1);
  Graph<double> g(false);
  const TwoStreamFeatures<double> f{
      g.constant(random_tensor<double>({128, 2, 2}, 10)),
      g.constant(random_tensor<double>({128, 2, 2}, 11))};
  fault::set_broken_mean_subtraction(true);
  const TensorD broken = m.weight_head(f).value();
  fault::set_broken_mean_subtraction(false);
  EXPECT_GT(max_constraint_violation(broken, KernelConstraint::kMeanSubtract), 1e-2);
  EXPECT_LT(max_constraint_violation(m.weight_head(f).value(),
                                     KernelConstraint::kMeanSubtract),
            1e-12);
}

}  // namespace
}  // namespace dkn
