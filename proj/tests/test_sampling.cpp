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

#include <random>

#include "dkn/sampling.hpp"

namespace dkn {
namespace {

TEST(BilinearKernel, TentValues) {
  EXPECT_NEAR(bilinear_g(1.3, 1.0), 0.7, 1e-12);
  EXPECT_EQ(bilinear_g(2.5, 1.0), 0.0);
  for (double x : {-3.25, 0.0, 7.5}) EXPECT_EQ(bilinear_g(x, x), 1.0);
}

TEST(SampleBilinear, IntegerPositionIsExact) {
  std::vector<double> img(6 * 8);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = 0.37 * i;
  const PlaneView<double> v{img.data(), 8, 6};
  EXPECT_EQ(sample_bilinear(v, Point<double>{3, 5}), v.at(5, 3));
}

TEST(SampleBilinear, HandExamples) {
  const std::vector<double> img{0, 1, 2, 3};
  const PlaneView<double> v{img.data(), 2, 2};
  EXPECT_DOUBLE_EQ(sample_bilinear(v, Point<double>{0.5, 0.5}), 1.5);
  const std::vector<double> row{0, 4};
  EXPECT_DOUBLE_EQ(sample_bilinear(PlaneView<double>{row.data(), 1, 2},
                                   Point<double>{0.25, 0}),
                   1.0);
}

TEST(SampleBilinear, BorderClampsAndZeroPads) {
  const std::vector<double> img{1, 2, 3, 4};
  const PlaneView<double> v{img.data(), 2, 2};
  EXPECT_EQ(sample_bilinear(v, Point<double>{-3, 0}, BorderMode::kBorder), 1.0);
  EXPECT_EQ(sample_bilinear(v, Point<double>{5, 5}, BorderMode::kBorder), 4.0);
  EXPECT_EQ(sample_bilinear(v, Point<double>{-3, 0}, BorderMode::kZero), 0.0);
  EXPECT_DOUBLE_EQ(sample_bilinear(v, Point<double>{-0.5, 0}, BorderMode::kZero), 0.5);
}

TEST(SampleBackward, HandExample) {
  const std::vector<double> img{0, 1, 2, 3};
  const PlaneView<double> v{img.data(), 2, 2};
  const SampleGrad<double> g = sample_backward(v, Point<double>{0.5, 0.5}, 1.0);
  EXPECT_DOUBLE_EQ(g.position.x, 1.0);
  EXPECT_DOUBLE_EQ(g.position.y, 2.0);
  for (const auto& c : g.image) {
    EXPECT_TRUE(c.valid);
    EXPECT_DOUBLE_EQ(c.grad, 0.25);
  }
}

TEST(SampleBackward, IntegerPositionRoutesToOneCorner) {
  const std::vector<double> img{0, 1, 2, 3, 4, 5, 6, 7, 8};
  const PlaneView<double> v{img.data(), 3, 3};
  const SampleGrad<double> g = sample_backward(v, Point<double>{1, 1}, 2.0);
  double total = 0;
  int nonzero = 0;
  for (const auto& c : g.image) {
    if (!c.valid || c.grad == 0) continue;
    total += c.grad;
    ++nonzero;
    EXPECT_EQ(c.y, 1);
    EXPECT_EQ(c.x, 1);
  }
  EXPECT_EQ(nonzero, 1);
  EXPECT_EQ(total, 2.0);
}

TEST(SampleBackward, MatchesFiniteDifferencesAwayFromIntegers) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> img(7 * 9);
  for (double& x : img) x = u(rng);
  const PlaneView<double> v{img.data(), 7, 9};
  const double h = 1e-4;
  for (BorderMode mode : {BorderMode::kBorder, BorderMode::kZero}) {
    for (int trial = 0; trial < 200; ++trial) {
      // Fractional parts stay >= 1e-3 away from integers.
      auto coord = [&](int n) {
        std::uniform_int_distribution<int> whole(-1, n - 1);
        return whole(rng) + 1e-3 + (1 - 2e-3) * u(rng);
      };
      const Point<double> s{coord(9), coord(7)};
      const SampleGrad<double> g = sample_backward(v, s, 1.0, mode);
      const double nx = (sample_bilinear(v, {s.x + h, s.y}, mode) -
                         sample_bilinear(v, {s.x - h, s.y}, mode)) / (2 * h);
      const double ny = (sample_bilinear(v, {s.x, s.y + h}, mode) -
                         sample_bilinear(v, {s.x, s.y - h}, mode)) / (2 * h);
      auto rel = [](double a, double n) {
        return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
      };
      EXPECT_LT(rel(g.position.x, nx), 1e-4) << s.x << "," << s.y;
      EXPECT_LT(rel(g.position.y, ny), 1e-4) << s.x << "," << s.y;
    }
  }
}

TEST(ClampOffset, ZeroOffsetKeepsRegularGrid) {
  const std::vector<double> zeros(18, 0.0);
  const Point<double> p{20, 30};
  const auto s = clamp_offsets<double>(p, 3, zeros, 15);
  for (int q = 0; q < 9; ++q) {
    const Point<int> t = kernel_tap(q, 3);
    EXPECT_EQ(s[q].s.x, p.x + t.x);
    EXPECT_EQ(s[q].s.y, p.y + t.y);
    EXPECT_FALSE(s[q].clamped_x || s[q].clamped_y);
  }
}

TEST(ClampOffset, WindowBoundary) {
  const Point<double> p{10, 10};
  const ClampedPosition<double> far =
      clamp_offset(p, p, Point<double>{100, 0}, 15);
  EXPECT_EQ(far.s.x, p.x + 7);
  EXPECT_TRUE(far.clamped_x);
  const ClampedPosition<double> left =
      clamp_offset(p, Point<double>{p.x - 1, p.y}, Point<double>{-6.5, 0}, 15);
  EXPECT_EQ(left.s.x, p.x - 7);
  EXPECT_TRUE(left.clamped_x);
  EXPECT_THROW(clamp_offset(p, p, Point<double>{}, 4), ShapeError);
}

TEST(KernelTap, RowMajorOrder) {
  EXPECT_EQ(kernel_tap(0, 3).x, -1);
  EXPECT_EQ(kernel_tap(0, 3).y, -1);
  EXPECT_EQ(kernel_tap(4, 3).x, 0);
  EXPECT_EQ(kernel_tap(4, 3).y, 0);
  EXPECT_EQ(kernel_tap(5, 3).x, 1);
  EXPECT_EQ(kernel_tap(5, 3).y, 0);
}

}  // namespace
}  // namespace dkn
