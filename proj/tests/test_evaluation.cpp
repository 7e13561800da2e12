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
#include <random>
#include <sstream>

#include "dkn/check.hpp"
#include "dkn/evaluation.hpp"
#include "test_util.hpp"

namespace dkn {
namespace {

ModelConfig tiny_dkn() {
  ModelConfig c = dkn_config();
  c.channels.assign(c.channels.size(), 4);
  return c;
}

TEST(Rmse, Examples) {
  const TensorF a(Shape{1, 4, 4}, 0.3f);
  EXPECT_EQ(rmse(a, a, Scaling::kRange255), 0.0);
  const TensorF b(Shape{1, 4, 4}, 2.0f), z(Shape{1, 4, 4});
  EXPECT_NEAR(rmse(b, z, Scaling::kCentimeters), 200.0, 1e-9);
  EXPECT_NEAR(rmse(b, z, Scaling::kRange255), 510.0, 1e-9);
}

TEST(Rmse, GaussianErrorGivesItsStandardDeviation) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.02);
  TensorF pred(Shape{1, 500, 500}), gt(Shape{1, 500, 500}, 0.5f);
  for (std::size_t i = 0; i < pred.size(); ++i)
    pred[i] = static_cast<float>(0.5 + n(rng));
  EXPECT_NEAR(rmse(pred, gt, Scaling::kRange255), 0.02 * 255, 0.02 * 0.02 * 255);
}

TEST(Rmse, MaskSelectsPixels) {
  TensorF pred(Shape{1, 1, 4}, {0, 1, 0, 0});
  const TensorF gt(Shape{1, 1, 4});
  const TensorF mask(Shape{1, 1, 4}, {1, 0, 1, 1});
  EXPECT_EQ(rmse(pred, gt, Scaling::kCentimeters, &mask), 0.0);
  const TensorF empty(Shape{1, 1, 4});
  EXPECT_THROW(rmse(pred, gt, Scaling::kCentimeters, &empty), DataError);
  const TensorF wrong(Shape{1, 1, 3}, 1.0f);
  EXPECT_THROW(rmse(pred, gt, Scaling::kCentimeters, &wrong), ShapeError);
  EXPECT_THROW(rmse(pred, TensorF(Shape{1, 4, 1}), Scaling::kCentimeters), ShapeError);
}

TEST(Scaling, NamesAndFactors) {
  for (Scaling s : {Scaling::kCentimeters, Scaling::kRange255})
    EXPECT_EQ(parse_scaling(scaling_name(s)), s);
  EXPECT_EQ(scaling_factor(Scaling::kCentimeters), 100.0);
  EXPECT_EQ(scaling_factor(Scaling::kRange255), 255.0);
  EXPECT_THROW(parse_scaling("metres"), ShapeError);
}

TEST(Benchmark, IdentityModelMatchesTheBaseline) {
  KernelNetwork<float> m(tiny_dkn(), 1);
  for (const char* s : {"guidance", "target"})
    m.store().find(std::string(s) + ".weight_head.weight")->value.fill(0);
  std::vector<SamplePair> pairs;
  for (const RgbdImage& img : make_synthetic_dataset(3, 32, 2))
    pairs.push_back(make_training_pair(img.rgb, img.depth, {}, 1));
  const EvalReport r = benchmark(m, pairs, Scaling::kRange255, {"a", "b"});
  ASSERT_EQ(r.images.size(), 3u);
  for (const ImageResult& i : r.images) {
    EXPECT_EQ(i.rmse, i.baseline_rmse);
    EXPECT_GT(i.baseline_rmse, 0);
    EXPECT_EQ(i.forward_passes, 16u);
  }
  EXPECT_EQ(r.images[1].name, "b");
  EXPECT_EQ(r.images[2].name, "image_2");
  EXPECT_EQ(r.improvement(), 0.0);
  EXPECT_EQ(r.arch, "dkn");
}

TEST(Benchmark, MeansAndReportsAgree) {
  KernelNetwork<float> m(tiny_dkn(), 4);
  std::vector<SamplePair> pairs;
  for (const RgbdImage& img : make_synthetic_dataset(3, 30, 5))
    pairs.push_back(make_training_pair(img.rgb, img.depth,
                                       {Protocol::kNearestRb, 2, 0.001}, 2));
  const EvalReport r = benchmark(m, pairs, Scaling::kCentimeters);
  double mean = 0, base = 0;
  for (const ImageResult& i : r.images) {
    mean += i.rmse / 3;
    base += i.baseline_rmse / 3;
    EXPECT_EQ(i.pad_bottom, 2);  // 30 -> 32
    EXPECT_EQ(i.pad_right, 2);
  }
  EXPECT_NEAR(r.mean_rmse, mean, 1e-12);
  EXPECT_NEAR(r.mean_baseline_rmse, base, 1e-12);
  EXPECT_NEAR(r.improvement(), 1 - mean / base, 1e-12);
  EXPECT_EQ(r.degradation.protocol, Protocol::kNearestRb);

  const std::string kv = r.to_key_values();
  for (const char* key : {"arch=dkn\n", "protocol=nearest_rb\n", "scale=2\n",
                          "scaling=centimeters\n", "bicubic_kernel=keys_a-0.5\n",
                          "images=3\n", "image.2.pad=2,2\n"})
    EXPECT_NE(kv.find(key), std::string::npos) << key;
  std::istringstream lines(kv);
  double parsed = -1;
  for (std::string line; std::getline(lines, line);)
    if (line.rfind("mean_rmse=", 0) == 0) parsed = std::stod(line.substr(10));
  EXPECT_NEAR(parsed, r.mean_rmse, 1e-6 * r.mean_rmse);

  const std::string text = r.to_text();
  EXPECT_NE(text.find("image_0"), std::string::npos);
  EXPECT_NE(text.find("over 3 images"), std::string::npos);
  EXPECT_NE(text.find("padded +2/+2"), std::string::npos);
}

TEST(Benchmark, EmptyPairList) {
  KernelNetwork<float> m(tiny_dkn(), 1);
  const EvalReport r = benchmark(m, {}, Scaling::kRange255);
  EXPECT_TRUE(r.images.empty());
  EXPECT_EQ(r.improvement(), 0.0);
}

}  // namespace
}  // namespace dkn
