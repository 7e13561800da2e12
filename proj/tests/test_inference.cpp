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

#include <set>

#include "dkn/inference.hpp"
#include "dkn/resample.hpp"
#include "test_util.hpp"

namespace dkn {
namespace {

using testing::random_tensor;

template <typename T>
void expect_stitch_matches_naive(std::uint64_t seed, int h, int w, double tol) {
  KernelNetwork<T> m(dkn_config(), seed);
  const Tensor<T> g = random_tensor<T>({3, h, w}, seed + 100, 0, 1);
  const Tensor<T> t = random_tensor<T>({1, h, w}, seed + 200, 0, 1);
  const InferenceResult<T> fast = infer_shift_and_stitch(m, g, t);
  const InferenceResult<T> naive = infer_naive_per_pixel(m, g, t);
  EXPECT_EQ(fast.forward_passes, 16u);
  EXPECT_EQ(naive.forward_passes, static_cast<std::size_t>(h) * w);
  EXPECT_LT(max_abs_diff(fast.output, naive.output), tol);
}

TEST(ShiftAndStitch, MatchesPerPixelOracleFloat) {
  expect_stitch_matches_naive<float>(1, 16, 16, 1e-5);
  expect_stitch_matches_naive<float>(2, 12, 20, 1e-5);
}

TEST(ShiftAndStitch, MatchesPerPixelOracleDouble) {
  expect_stitch_matches_naive<double>(3, 16, 16, 1e-10);
}

TEST(ShiftAndStitch, MatchesOracleInPlainModeWithZeroBorder) {
  ModelConfig c = dkn_config();
  c.residual = false;
  c.constraint = KernelConstraint::kL1Normalize;
  c.border = BorderMode::kZero;
  KernelNetwork<double> m(c, 4);
  const TensorD g = random_tensor<double>({3, 8, 12}, 5, 0, 1);
  const TensorD t = random_tensor<double>({1, 8, 12}, 6, 0, 1);
  EXPECT_LT(max_abs_diff(infer_shift_and_stitch(m, g, t).output,
                         infer_naive_per_pixel(m, g, t).output),
            1e-10);
}

TEST(ShiftAndStitch, RequiresMultiplesOfFour) {
  KernelNetwork<float> m(dkn_config(), 1);
  EXPECT_THROW(infer_shift_and_stitch(m, TensorF(Shape{3, 10, 12}),
                                      TensorF(Shape{1, 10, 12})),
               ShapeError);
}

TEST(ShiftAndStitch, CoversEveryPixelOnce) {
  std::vector<TensorF> buffers;
  for (int b = 0; b < 16; ++b) {
    TensorF t(Shape{1, 3, 5});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(b * 100 + i);
    buffers.push_back(t);
  }
  const TensorF out = stitch_phases(buffers, 4);
  const std::set<float> seen(out.values().begin(), out.values().end());
  EXPECT_EQ(seen.size(), out.size());
  EXPECT_EQ(out.size(), 16u * 15u);
}

TEST(Infer, PadsOddExtentsAndCropsBack) {
  KernelNetwork<float> m(dkn_config(), 7);
  const TensorF g = random_tensor<float>({3, 14, 17}, 8, 0, 1);
  const TensorF t = random_tensor<float>({1, 14, 17}, 9, 0, 1);
  const InferenceResult<float> r = infer(m, g, t);
  EXPECT_EQ(r.output.shape(), t.shape());
  EXPECT_EQ(r.pad_bottom, 2);
  EXPECT_EQ(r.pad_right, 3);
  const InferenceResult<float> padded = infer_shift_and_stitch(
      m, pad_reflect_bottom_right(g, 2, 3), pad_reflect_bottom_right(t, 2, 3));
  EXPECT_EQ(r.output, crop(padded.output, 0, 0, 14, 17));
}

TEST(Infer, FdknRunsOnePass) {
  KernelNetwork<float> m(fdkn_config(), 1);
  const TensorF g = random_tensor<float>({3, 32, 28}, 2, 0, 1);
  const TensorF t = random_tensor<float>({1, 32, 28}, 3, 0, 1);
  const InferenceResult<float> r = infer(m, g, t);
  EXPECT_EQ(r.forward_passes, 1u);
  EXPECT_EQ(r.output.shape(), t.shape());
  EXPECT_EQ(r.pad_bottom + r.pad_right, 0);
  EXPECT_THROW(infer_shift_and_stitch(m, g, t), ShapeError);
}

TEST(Infer, FdknIsTranslationConsistentOnAlignedCrops) {
  // Away from the crop border, a 4-aligned crop sees the same inputs as
  // the full image.
  KernelNetwork<double> m(fdkn_config(), 3);
  const TensorD g = random_tensor<double>({3, 112, 112}, 4, 0, 1);
  const TensorD t = random_tensor<double>({1, 112, 112}, 5, 0, 1);
  const TensorD full = infer(m, g, t).output;
  const TensorD part = infer(m, crop(g, 8, 12, 80, 76), crop(t, 8, 12, 80, 76)).output;
  // A pixel's receptive field reaches 6 cells (27 pixels) away; samples
  // reach 7 pixels.
  const int m0 = 28;
  double worst = 0;
  for (int y = m0; y < 80 - m0; ++y)
    for (int x = m0; x < 76 - m0; ++x)
      worst = std::max(worst, std::abs(part.at(0, y, x) - full.at(0, y + 8, x + 12)));
  EXPECT_LT(worst, 1e-12);
}

TEST(Infer, ZeroResidualWeightsReturnTheTarget) {
  KernelNetwork<float> m(dkn_config(), 1);
  for (const char* s : {"guidance", "target"})
    m.store().find(std::string(s) + ".weight_head.weight")->value.fill(0);
  const TensorF t = random_tensor<float>({1, 16, 16}, 2, 0, 1);
  EXPECT_EQ(infer(m, random_tensor<float>({3, 16, 16}, 3, 0, 1), t).output, t);
}

TEST(Infer, RejectsMismatchedPairs) {
  KernelNetwork<float> m(dkn_config(), 1);
  EXPECT_THROW(infer(m, TensorF(Shape{3, 16, 16}), TensorF(Shape{1, 16, 12})), ShapeError);
  EXPECT_THROW(infer(m, TensorF(Shape{1, 16, 16}), TensorF(Shape{1, 16, 16})), ShapeError);
  EXPECT_THROW(infer(m, TensorF(Shape{3, 16, 16}), TensorF(Shape{2, 16, 16})), ShapeError);
}

TEST(NetworkFilter, AdaptsAModelToTheFilterInterface) {
  KernelNetwork<float> m(dkn_config(), 1);
  NetworkFilter<float> f(m);
  EXPECT_EQ(f.guidance_channels(), 3);
  const TensorF g = random_tensor<float>({3, 8, 8}, 1, 0, 1);
  const TensorF t = random_tensor<float>({1, 8, 8}, 2, 0, 1);
  EXPECT_EQ(f.filter(g, t), infer(m, g, t).output);
}

}  // namespace
}  // namespace dkn
