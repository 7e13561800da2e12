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

// Explicit weighted averages over deformably sampled neighbours.
//
// For every output pixel p the field supplies k*k weights K and 2k*k
// offsets. Tap q (row-major over the k x k grid centred on p) is sampled
// at s(q) = q + offset(q), restricted to the d x d window around p, with
// bilinear interpolation. The residual form returns f_p + sum K f_s(q); the
// plain form returns sum K f_s(q).

#pragma once

#include <string_view>

#include "dkn/autograd.hpp"
#include "dkn/sampling.hpp"
#include "dkn/tensor.hpp"

namespace dkn {

/// Maps field cell (i, j) to image pixel (origin_y + stride*i,
/// origin_x + stride*j). Stride 1 with zero origin covers the full image.
struct FieldGeometry {
  int origin_y = 0;
  int origin_x = 0;
  int stride = 1;
};

struct SamplerConfig {
  int kernel_size = 3;
  int window = 15;
  BorderMode border = BorderMode::kBorder;
};

enum class KernelConstraint { kMeanSubtract, kL1Normalize };

inline std::string_view constraint_name(KernelConstraint c) {
  return c == KernelConstraint::kMeanSubtract ? "mean_subtract"
                                              : "l1_normalize";
}

template <typename T>
struct KernelField {
  int kernel_size = 3;
  Tensor<T> weights;  // k^2 x h x w
  Tensor<T> offsets;  // 2k^2 x h x w, (dx, dy) per tap
  FieldGeometry geometry;

  int taps() const { return kernel_size * kernel_size; }
};

/// Largest per-pixel deviation of sum(K) from 0 (mean subtraction) or 1
/// (L1 normalisation).
template <typename T>
T max_constraint_violation(const Tensor<T>& weights, KernelConstraint c);

/// Forward evaluation of the weighted average. `target` is 1 x H x W.
template <typename T>
Tensor<T> deformable_average(const Tensor<T>& target, const Tensor<T>& weights,
                             const Tensor<T>& offsets,
                             const FieldGeometry& geometry,
                             const SamplerConfig& config, bool residual);

/// Differentiable version: gradients flow to the target image, the weights
/// and the offsets. Offsets clamped by the window or the image border get
/// zero gradient in the clamped coordinate.
template <typename T>
Var<T> deformable_average(Var<T> target, Var<T> weights, Var<T> offsets,
                          const FieldGeometry& geometry,
                          const SamplerConfig& config, bool residual);

/// f_p + sum K f_s(q). Throws NumericalError when a kernel sum deviates
/// from 0 by more than 1e-4.
template <typename T>
Tensor<T> weighted_average_residual(const Tensor<T>& target,
                                    const KernelField<T>& field,
                                    int window = 15,
                                    BorderMode border = BorderMode::kBorder);

/// sum K f_s(q). Throws NumericalError when a kernel sum deviates from 1 by
/// more than 1e-4.
template <typename T>
Tensor<T> weighted_average_plain(const Tensor<T>& target,
                                 const KernelField<T>& field, int window = 15,
                                 BorderMode border = BorderMode::kBorder);

/// Anything that maps (guidance C x H x W, target 1 x H x W) to a filtered
/// 1 x H x W image.
template <typename T>
class JointFilter {
 public:
  virtual ~JointFilter() = default;
  virtual Tensor<T> filter(const Tensor<T>& guidance,
                           const Tensor<T>& target) = 0;
  /// Channels expected in the guidance image.
  virtual int guidance_channels() const = 0;
};

/// Self-guided repeated filtering: each channel of `image` is filtered on
/// its own, using the channel (replicated to the guidance channel count) as
/// guidance and as target, and the result is fed back `iterations` times.
template <typename T>
Tensor<T> iterative_filter(const Tensor<T>& image, JointFilter<T>& model,
                           int iterations);

}  // namespace dkn
