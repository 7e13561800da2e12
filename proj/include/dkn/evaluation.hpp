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

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dkn/dataset.hpp"
#include "dkn/networks.hpp"

namespace dkn {

/// Value scaling applied before the error is measured: depth in metres to
/// centimetres (x100) or normalised values to [0, 255] (x255).
enum class Scaling { kCentimeters, kRange255 };

std::string_view scaling_name(Scaling s);
Scaling parse_scaling(std::string_view s);
double scaling_factor(Scaling s);

/// sqrt(mean((factor * (pred - gt))^2)) over pixels where `mask` (if given,
/// 1 x H x W) is non-zero. Throws DataError on an empty mask.
double rmse(const TensorF& pred, const TensorF& gt, Scaling scaling,
            const TensorF* mask = nullptr);

struct ImageResult {
  std::string name;
  double rmse = 0;
  double baseline_rmse = 0;  // the degraded input against ground truth
  double seconds = 0;
  std::size_t forward_passes = 0;
  int pad_bottom = 0, pad_right = 0;
};

struct EvalReport {
  std::string arch;
  Scaling scaling = Scaling::kRange255;
  Degradation degradation;
  std::vector<ImageResult> images;
  double mean_rmse = 0;
  double mean_baseline_rmse = 0;
  double mean_seconds = 0;

  /// Relative improvement over the degraded input, 1 - mean / baseline.
  double improvement() const;
  std::string to_text() const;
  std::string to_key_values() const;
};

/// Runs dense inference on every pair and scores it against ground truth.
/// Padding added to reach a multiple of 4 is cropped before scoring.
EvalReport benchmark(KernelNetwork<float>& model,
                     const std::vector<SamplePair>& pairs, Scaling scaling,
                     const std::vector<std::string>& names = {});

}  // namespace dkn
