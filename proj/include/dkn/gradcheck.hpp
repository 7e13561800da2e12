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

// Central finite-difference checks of reverse-mode gradients (64-bit).

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dkn/autograd.hpp"
#include "dkn/networks.hpp"

namespace dkn {

struct GradCheckResult {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::size_t checked = 0;
  std::size_t refined = 0;  // entries re-differenced with a smaller step
  std::string worst;  // "<input>[<index>]: analytic a, numeric n"
};

struct GradCheckOptions {
  double step = 1e-4;
  // When the one-sided quotients (f(x+h) - f(x)) / h and (f(x) - f(x-h)) / h
  // disagree, [x - h, x + h] straddles a kink (ReLU, bilinear cell edge,
  // clamp) and the central difference is not an oracle there. The step is
  // then divided by 10, down to min_step, before comparing.
  bool refine_kinks = true;
  double min_step = 1e-7;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  // Elements checked per input; 0 checks all of them. A subset is drawn
  // uniformly with `seed`.
  std::size_t max_per_input = 0;
  std::uint64_t seed = 7;
};

/// A scalar-valued function of leaf variables built on the given graph.
using ScalarFn =
    std::function<Var<double>(Graph<double>&, const std::vector<Var<double>>&)>;

/// Compares d fn / d inputs from one backward pass with central
/// differences (f(x + h) - f(x - h)) / 2h. Every selected entry is compared.
GradCheckResult check_gradients(const ScalarFn& fn,
                                const std::vector<TensorD>& inputs,
                                const GradCheckOptions& options = {});

/// Same, for gradients that reach parameters bound with Graph::parameter.
/// `fn` must bind every parameter in `params` itself.
GradCheckResult check_parameter_gradients(
    const std::function<Var<double>(Graph<double>&)>& fn,
    const std::vector<Parameter<double>*>& params,
    const GradCheckOptions& options = {});

struct NamedGradCheck {
  std::string name;
  GradCheckResult result;
};

/// Checks every differentiable primitive on small random operands. Inputs
/// are drawn away from kinks (ReLU at 0, integer bilinear positions, L1 at
/// equality) where central differences are meaningless.
std::vector<NamedGradCheck> check_primitive_gradients(std::uint64_t seed);

/// Checks the complete DKN chain -- both feature towers, weight and offset
/// heads, deformable sampler, weighted average and L1 loss -- on one
/// extent x extent toy pair (one output pixel at extent 51), against both
/// image inputs and up to `per_tensor` entries of every parameter tensor.
GradCheckResult check_dkn_stack_gradients(const ModelConfig& config,
                                          std::uint64_t seed,
                                          std::size_t per_tensor = 6,
                                          double step = 1e-4);

}  // namespace dkn
