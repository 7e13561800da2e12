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


#include "dkn/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>

#include "dkn/gradcheck.hpp"
#include "dkn/inference.hpp"
#include "dkn/resample.hpp"

namespace dkn {
namespace {

TensorD uniform_tensor(const Shape& shape, std::mt19937_64& rng, double lo,
                       double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  TensorD t(shape);
  for (double& v : t.values()) v = u(rng);
  return t;
}

TensorF uniform_tensor_f(const Shape& shape, std::mt19937_64& rng) {
  return uniform_tensor(shape, rng, 0, 1).cast<float>();
}

SelfTestCheck bounded(std::string name, double value, double bound) {
  SelfTestCheck c{std::move(name), value < bound, ""};
  c.detail = detail::concat(value, " < ", bound);
  return c;
}

// Worst kernel-sum violation of the weight head over random features.
SelfTestCheck constraint_check(bool residual, std::uint64_t seed) {
  ModelConfig c = dkn_config();
  c.residual = residual;
  c.constraint = residual ? KernelConstraint::kMeanSubtract : KernelConstraint::kL1Normalize;
  KernelNetwork<double> m(c, seed);
  std::mt19937_64 rng(seed);
  double worst = 0;
  bool positive = true;
  for (int trial = 0; trial < 4; ++trial) {
    Graph<double> g(false);
    const TwoStreamFeatures<double> f{
        g.constant(uniform_tensor({128, 8, 8}, rng, -3, 3)),
        g.constant(uniform_tensor({128, 8, 8}, rng, -3, 3))};
    const TensorD w = m.weight_head(f).value();
    worst = std::max(worst, max_constraint_violation(w, c.constraint));
    if (!residual)
      positive = positive && std::all_of(w.values().begin(), w.values().end(),
                                         [](double v) { return v > 0; });
  }
  SelfTestCheck r = bounded(
      detail::concat(constraint_name(c.constraint), " constraint (",
                     residual ? "residual" : "plain", " kernels)"),
      worst, 1e-5);
  if (!positive) {
    r.passed = false;
    r.detail += "; non-positive plain weight";
  }
  return r;
}

SelfTestCheck shuffle_check(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  bool exact = true;
  for (int r : {2, 4}) {
    const TensorF x = uniform_tensor_f({3, 8 * r, 4 * r}, rng);
    exact = exact && pixel_shuffle(pixel_unshuffle(x, r), r) == x;
  }
  return {"pixel shuffle / unshuffle round trip", exact,
          exact ? "bit-exact for r = 2, 4" : "round trip differs"};
}

SelfTestCheck receptive_field_check() {
  const int d = dkn_config().receptive_field(), f = fdkn_config().receptive_field();
  return {"receptive fields", d == 51 && f == 13,
          detail::concat("dkn ", d, " (51), fdkn ", f, " (13)")};
}

SelfTestCheck stitch_check(std::uint64_t seed) {
  ModelConfig c = dkn_config();
  c.channels.assign(c.channels.size(), 4);
  KernelNetwork<float> m(c, seed);
  std::mt19937_64 rng(seed);
  const TensorF g = uniform_tensor_f({3, 12, 12}, rng);
  const TensorF t = uniform_tensor_f({1, 12, 12}, rng);
  const InferenceResult<float> fast = infer_shift_and_stitch(m, g, t);
  const InferenceResult<float> slow = infer_naive_per_pixel(m, g, t);
  SelfTestCheck r = bounded("shift-and-stitch equals per-pixel inference",
                            max_abs_diff(fast.output, slow.output), 1e-5);
  if (fast.forward_passes != 16) {
    r.passed = false;
    r.detail += detail::concat("; ", fast.forward_passes, " passes (16)");
  }
  return r;
}

SelfTestCheck single_pass_check(std::uint64_t seed) {
  ModelConfig c = fdkn_config();
  c.channels.assign(c.channels.size(), 4);
  KernelNetwork<float> m(c, seed);
  std::mt19937_64 rng(seed);
  const auto r = infer(m, uniform_tensor_f({3, 16, 16}, rng),
                       uniform_tensor_f({1, 16, 16}, rng));
  return {"fdkn dense inference in one pass", r.forward_passes == 1,
          detail::concat(r.forward_passes, " passes (1)")};
}

SelfTestCheck gradient_check(std::uint64_t seed) {
  double worst = 0;
  std::string name;
  for (const NamedGradCheck& c : check_primitive_gradients(seed)) {
    if (c.result.max_rel_error >= worst) {
      worst = c.result.max_rel_error;
      name = c.name;
    }
  }
  SelfTestCheck r = bounded("primitive gradients", worst, 1e-4);
  r.detail += " (worst: " + name + ")";
  return r;
}

}  // namespace

std::vector<SelfTestCheck> run_self_test(std::uint64_t seed) {
  const std::vector<std::pair<std::string, std::function<SelfTestCheck()>>> checks = {
      {"residual kernel constraint", [&] { return constraint_check(true, seed); }},
      {"plain kernel constraint", [&] { return constraint_check(false, seed); }},
      {"pixel shuffle round trip", [&] { return shuffle_check(seed); }},
      {"receptive fields", receptive_field_check},
      {"shift-and-stitch", [&] { return stitch_check(seed); }},
      {"fdkn single pass", [&] { return single_pass_check(seed); }},
      {"primitive gradients", [&] { return gradient_check(seed); }},
  };
  std::vector<SelfTestCheck> out;
  for (const auto& [name, check] : checks) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("error: ") + e.what()});
    }
  }
  return out;
}

}  // namespace dkn
