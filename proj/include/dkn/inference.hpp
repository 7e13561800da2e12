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

// Dense inference.
//
// DKN features have stride s = 4, so one pass yields kernels for every
// fourth pixel. Running the network on the s*s inputs shifted by (x, y)
// and interleaving the per-shift outputs gives every pixel exactly the
// kernel it would get from a pass over its own receptive field. Pixels
// outside the image read as zero in both schemes.
//
// FDKN predicts all kernels in one pass over the unshuffled input.

#pragma once

#include <cstddef>

#include "dkn/filtering.hpp"
#include "dkn/networks.hpp"

namespace dkn {

template <typename T>
struct InferenceResult {
  Tensor<T> output;  // 1 x H x W
  std::size_t forward_passes = 0;
  int pad_bottom = 0;  // reflect padding added to reach a multiple of the stride
  int pad_right = 0;
};

/// DKN dense inference. Extents must be multiples of the network stride.
template <typename T>
InferenceResult<T> infer_shift_and_stitch(KernelNetwork<T>& model,
                                          const Tensor<T>& guidance,
                                          const Tensor<T>& target);

/// FDKN dense inference. Extents must be multiples of the resample stride.
template <typename T>
InferenceResult<T> infer_single_pass(KernelNetwork<T>& model,
                                     const Tensor<T>& guidance,
                                     const Tensor<T>& target);

/// Picks the scheme for the model's architecture, reflect-pads the bottom
/// and right edges to a multiple of 4 and crops the result back.
template <typename T>
InferenceResult<T> infer(KernelNetwork<T>& model, const Tensor<T>& guidance,
                         const Tensor<T>& target);

/// Reference: runs the DKN towers on the receptive-field window of every
/// pixel separately (H*W passes). Slow; for verification only.
template <typename T>
InferenceResult<T> infer_naive_per_pixel(KernelNetwork<T>& model,
                                         const Tensor<T>& guidance,
                                         const Tensor<T>& target);

/// Adapts a network to the JointFilter interface.
template <typename T>
class NetworkFilter : public JointFilter<T> {
 public:
  explicit NetworkFilter(KernelNetwork<T>& model) : model_(model) {}
  Tensor<T> filter(const Tensor<T>& guidance,
                   const Tensor<T>& target) override {
    return infer(model_, guidance, target).output;
  }
  int guidance_channels() const override {
    return model_.config().guidance_channels;
  }

 private:
  KernelNetwork<T>& model_;
};

}  // namespace dkn
