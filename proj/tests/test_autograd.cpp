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

#include "dkn/autograd.hpp"
#include "dkn/gradcheck.hpp"
#include "dkn/ops.hpp"
#include "test_util.hpp"

namespace dkn {
namespace {

TEST(Tensor, ShapeAndIndexing) {
  TensorF t(Shape{2, 3, 4}, 1.5f);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.dim(-1), 4);
  t.at(1, 2, 3) = 7;
  EXPECT_EQ(t[23], 7);
  EXPECT_EQ(shape_str(t.shape()), "[2x3x4]");
}

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(TensorF(Shape{2, -1}), ShapeError);
  EXPECT_THROW(TensorF(Shape{2, 2}, std::vector<float>(3)), ShapeError);
  EXPECT_THROW(TensorF(Shape{2, 2}).reshaped(Shape{3}), ShapeError);
  TensorF a(Shape{2}), b(Shape{3});
  EXPECT_THROW(a += b, ShapeError);
}

TEST(Tensor, CastAndFiniteness) {
  TensorD d(Shape{2}, std::vector<double>{1.25, -2});
  EXPECT_EQ(d.cast<float>()[0], 1.25f);
  EXPECT_TRUE(d.all_finite());
  d[1] = std::nan("");
  EXPECT_FALSE(d.all_finite());
}

TEST(Autograd, GradientOfWeightedSumIsInput) {
  Graph<double> g;
  const TensorD x = testing::random_tensor<double>({5}, 1);
  Var<double> w = g.input(testing::random_tensor<double>({5}, 2));
  g.backward(sum(mul(w, g.constant(x))));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(w.grad()[i], x[i]);
}

TEST(Autograd, DisconnectedParameterKeepsZeroGradient) {
  Parameter<double> used("used", TensorD(Shape{3}, 2.0));
  Parameter<double> unused("unused", TensorD(Shape{3}, 2.0));
  Graph<double> g;
  Var<double> u = g.parameter(used);
  g.parameter(unused);
  g.backward(sum(u));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(used.grad[i], 1.0);
    EXPECT_EQ(unused.grad[i], 0.0);
  }
}

TEST(Autograd, ParameterGradientsAccumulateAcrossGraphs) {
  Parameter<double> p("p", TensorD(Shape{2}, 1.0));
  for (int i = 0; i < 2; ++i) {
    Graph<double> g;
    g.backward(sum(g.parameter(p)));
  }
  EXPECT_EQ(p.grad[0], 2.0);
  p.zero_grad();
  EXPECT_EQ(p.grad[0], 0.0);
}

TEST(Autograd, RejectsNonScalarRootAndSecondBackward) {
  Graph<double> g;
  Var<double> x = g.input(TensorD(Shape{2}, 1.0));
  EXPECT_THROW(g.backward(x), ShapeError);
  Var<double> s = sum(x);
  g.backward(s);
  EXPECT_THROW(g.backward(s), ShapeError);
}

TEST(Autograd, RejectsOperandsFromDifferentGraphs) {
  Graph<double> a, b;
  Var<double> x = a.input(TensorD(Shape{2}, 1.0));
  Var<double> y = b.input(TensorD(Shape{2}, 1.0));
  EXPECT_THROW(mul(x, y), ShapeError);
}

TEST(Autograd, NonFiniteValuesAreNumericalErrors) {
  Graph<double> g;
  Var<double> x = g.input(TensorD(Shape{1}, 1e300));
  EXPECT_THROW(mul(x, x), NumericalError);
}

TEST(Autograd, InferenceGraphRecordsNoGradients) {
  Graph<double> g(false);
  Var<double> x = g.input(TensorD(Shape{2}, 1.0));
  EXPECT_FALSE(x.requires_grad());
  EXPECT_FALSE(sum(x).requires_grad());
}

TEST(GradCheck, LinearFunctionIsExact) {
  const GradCheckResult r = check_gradients(
      [](Graph<double>& g, const std::vector<Var<double>>& v) {
        return sum(mul(v[0], g.constant(TensorD(Shape{3}, {2.0, -1.0, 0.5}))));
      },
      {testing::random_tensor<double>({3}, 4)});
  EXPECT_LT(r.max_rel_error, 1e-10);
  EXPECT_EQ(r.checked, 3u);
}

TEST(GradCheck, QuadraticAtThree) {
  Graph<double> g;
  Var<double> x = g.input(TensorD(Shape{1}, 3.0));
  g.backward(sum(mul(x, x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
  const GradCheckResult r = check_gradients(
      [](Graph<double>&, const std::vector<Var<double>>& v) {
        return sum(mul(v[0], v[0]));
      },
      {TensorD(Shape{1}, 3.0)});
  EXPECT_LT(r.max_abs_error, 1e-6);
}

TEST(GradCheck, DetectsAWrongGradient) {
  // relu'(0) is taken as 0; at exactly 0 the central difference reports 0.5.
  GradCheckOptions o;
  o.refine_kinks = false;
  const GradCheckResult r = check_gradients(
      [](Graph<double>&, const std::vector<Var<double>>& v) {
        return sum(relu(v[0]));
      },
      {TensorD(Shape{1}, 0.0)}, o);
  EXPECT_GT(r.max_rel_error, 0.4);
}

TEST(GradCheck, CompositeConvReluSum) {
  const TensorD x = testing::random_tensor<double>({2, 5, 5}, 5);
  const TensorD w = testing::random_tensor<double>({3, 2, 3, 3}, 6);
  const TensorD b = testing::random_tensor<double>({3}, 7);
  const GradCheckResult r = check_gradients(
      [](Graph<double>&, const std::vector<Var<double>>& v) {
        return sum(relu(conv2d(v[0], v[1], v[2], 1, 1)));
      },
      {x, w, b});
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(GradCheck, EveryPrimitiveBelowTolerance) {
  for (const NamedGradCheck& c : check_primitive_gradients(3)) {
    EXPECT_LT(c.result.max_rel_error, 1e-4) << c.name << ": " << c.result.worst;
    EXPECT_GT(c.result.checked, 0u) << c.name;
    EXPECT_EQ(c.result.refined, 0u) << c.name;
  }
}

TEST(GradCheck, KinkRefinementRecoversTheOneSidedDerivative) {
  // |x| sampled 1e-5 from its kink: at h = 1e-4 the central difference is
  // 0.1, refinement brings it to the true slope 1.
  const GradCheckResult r = check_gradients(
      [](Graph<double>&, const std::vector<Var<double>>& v) {
        return l1_loss(v[0], TensorD(Shape{1}, 0.0));
      },
      {TensorD(Shape{1}, 1e-5)});
  EXPECT_EQ(r.refined, 1u);
  EXPECT_LT(r.max_rel_error, 1e-6) << r.worst;
}

}  // namespace
}  // namespace dkn
