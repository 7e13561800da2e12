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

// Optimisation: Adam, step-decay learning rate, and the crop-based
// training loop.
//
// Each iteration draws one training pair and one crop. A DKN crop is the
// zero-filled window of n x n stride-4 output pixels plus half a receptive
// field on every side; an FDKN crop is aligned to the 4-pixel resampling
// grid and yields 4m x 4m outputs. The kernels are applied to the full
// target image, so the sampler sees exactly what it sees at inference.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dkn/dataset.hpp"
#include "dkn/networks.hpp"

namespace dkn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam. Moments live per parameter, in store order.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(const std::vector<Parameter<float>*>& params, double lr);
  void step(const std::vector<Parameter<double>*>& params, double lr);

  std::int64_t timestep() const { return t_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void restore(std::int64_t t, std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v);

 private:
  template <typename T>
  void step_impl(const std::vector<Parameter<T>*>& params, double lr);

  AdamConfig config_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// base / factor^floor(iteration / every). `every` <= 0 disables decay.
double learning_rate(std::int64_t iteration, double base, std::int64_t every,
                     double factor = 5.0);

/// Crop size used when TrainConfig::crop_outputs is 0: 24 for DKN (the
/// largest that fits 96 x 96 images), 16 for FDKN.
int default_crop_outputs(Arch arch);

struct TrainConfig {
  std::int64_t iterations = 2000;
  double lr = 1e-3;
  std::int64_t decay_every = 0;  // 0: iterations / 4
  double decay_factor = 5.0;
  std::uint64_t seed = 1;
  // DKN: n x n stride-4 outputs; FDKN: 4n x 4n pixels. 0 picks the
  // architecture default.
  int crop_outputs = 0;
  int log_every = 100;
  // Random flips and 90-degree rotations of each training pair.
  bool augment = true;
  AdamConfig adam;

  std::int64_t resolved_decay_every() const;
  void validate() const;
};

struct TrainLog {
  std::int64_t iteration = 0;
  double loss = 0;          // mean over the last log_every iterations
  double lr = 0;
};

struct TrainResult {
  std::int64_t iterations_done = 0;
  std::vector<double> losses;  // per iteration, per-output-pixel L1
  std::vector<TrainLog> log;
  bool diverged = false;
  std::string error;  // why training stopped early
};

/// Trains `model` in place. On a non-finite loss or gradient the offending
/// step is not applied, so the model keeps the last good parameters.
TrainResult train(KernelNetwork<float>& model,
                  const std::vector<SamplePair>& pairs,
                  const TrainConfig& config, Adam& optimizer,
                  const std::function<void(const TrainLog&)>& on_log = {});

/// Gradients for one crop; exposed for tests. Returns the summed L1 loss.
/// (top, left) is the first output pixel.
double train_step_gradients(KernelNetwork<float>& model, const SamplePair& pair,
                            int top, int left, int crop_outputs);

}  // namespace dkn
