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

#include "dkn/autograd.hpp"
#include "dkn/tensor.hpp"

namespace dkn {

/// Output extent of a convolution along one axis.
inline int conv_out_extent(int in, int kernel, int stride, int padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

/// Cross-correlation (no kernel flip). `input` is C_in x H x W or
/// N x C_in x H x W, `weight` is C_out x C_in x kh x kw, `bias` is C_out.
template <typename T>
Var<T> conv2d(Var<T> input, Var<T> weight, Var<T> bias, int stride = 1,
              int padding = 0);

template <typename T>
Var<T> relu(Var<T> x);

template <typename T>
Var<T> sigmoid(Var<T> x);

template <typename T>
struct BatchNormStats {
  explicit BatchNormStats(int channels = 0)
      : running_mean(Shape{channels}, T(0)),
        running_var(Shape{channels}, T(1)) {}
  Tensor<T> running_mean;
  Tensor<T> running_var;
};

enum class NormMode { kTrain, kEval };

/// Per-channel batch normalisation over every non-channel axis. Train mode
/// normalises by batch statistics (biased variance) and blends the unbiased
/// variance into `stats` with `momentum`; eval mode uses `stats`.
template <typename T>
Var<T> batchnorm(Var<T> x, Var<T> gamma, Var<T> beta, BatchNormStats<T>& stats,
                 NormMode mode, T momentum = T(0.1), T epsilon = T(1e-5));

template <typename T>
Var<T> mul(Var<T> a, Var<T> b);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

/// Sum of all elements, as a 1-element tensor.
template <typename T>
Var<T> sum(Var<T> x);

/// Subtracts, at every pixel of a C x H x W tensor, the mean over C.
template <typename T>
Var<T> channel_mean_subtract(Var<T> x);

/// Divides, at every pixel of a C x H x W tensor, by the sum of |x| over C.
template <typename T>
Var<T> channel_l1_normalize(Var<T> x);

/// r^2*C x H x W -> C x rH x rW; inverse of pixel_unshuffle.
template <typename T>
Var<T> pixel_shuffle(Var<T> x, int r);

template <typename T>
Var<T> pixel_unshuffle(Var<T> x, int r);

/// Sum of absolute differences against a fixed target; subgradient 0 at ties.
template <typename T>
Var<T> l1_loss(Var<T> pred, const Tensor<T>& target);

}  // namespace dkn
