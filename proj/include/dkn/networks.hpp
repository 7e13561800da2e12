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

// Two-stream kernel prediction networks.
//
// Both architectures run one convolutional tower on the guidance image and
// one on the target image. Each tower ends in two 1x1 heads; per-stream
// weight logits go through a sigmoid and are multiplied, then constrained
// (zero-sum with the residual connection, unit L1 norm without it). Offset
// outputs are multiplied raw.
//
//   DKN   towers see the full-resolution image; two stride-2 layers make the
//         field stride 4 and inference uses shift-and-stitch.
//   FDKN  towers see the stride-4 pixel-unshuffled image through six 3x3
//         layers; heads emit 16 sub-pixel copies of every kernel, which
//         pixel_shuffle recomposes at full resolution in a single pass.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dkn/autograd.hpp"
#include "dkn/filtering.hpp"
#include "dkn/ops.hpp"
#include "dkn/parameters.hpp"

namespace dkn {

/// One Conv(-BN)-ReLU layer without padding.
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  bool batchnorm = false;
};

/// Spatial extent after the stack for a square input of extent `in`.
int stack_output_extent(std::span<const ConvSpec> stack, int in);

/// C x H x W shape after every layer, input first.
std::vector<Shape> stack_shape_chain(std::span<const ConvSpec> stack,
                                     const Shape& input);

/// Standard composition r += (k - 1) * jump, jump *= stride.
int receptive_field_extent(std::span<const ConvSpec> stack);

/// Product of the layer strides.
int stack_stride(std::span<const ConvSpec> stack);

/// Smallest odd window, centred on one output feature, that contains its
/// receptive field (an even extent covers one pixel more on one side).
int centered_receptive_field(std::span<const ConvSpec> stack);

enum class Arch { kDkn, kFdkn };

std::string_view arch_name(Arch a);
Arch parse_arch(std::string_view s);

struct ModelConfig {
  Arch arch = Arch::kDkn;
  int kernel_size = 3;
  int window = 15;
  bool residual = true;
  KernelConstraint constraint = KernelConstraint::kMeanSubtract;
  std::vector<int> channels;  // tower widths; 7 entries (DKN) or 6 (FDKN)
  int guidance_channels = 3;
  int resample_stride = 4;  // FDKN only
  BorderMode border = BorderMode::kBorder;
  // Ablations. A disabled stream contributes the multiplicative identity.
  bool use_guidance = true;
  bool use_target = true;
  bool learn_offsets = true;

  /// Throws ShapeError describing the first violated invariant.
  void validate() const;

  int taps() const { return kernel_size * kernel_size; }
  /// Kernels emitted per network output cell: 1 (DKN) or r^2 (FDKN).
  int subpixels() const;
  /// Layer stack of one tower fed with `in_channels` image channels.
  std::vector<ConvSpec> tower(int image_channels) const;
  /// Centred receptive field on the network input grid: 51 (DKN) or 13
  /// resampled pixels (FDKN) with the default widths.
  int receptive_field() const;
  SamplerConfig sampler() const { return {kernel_size, window, border}; }
};

ModelConfig dkn_config();
ModelConfig fdkn_config();

/// Writes/reads "key=value" lines; unknown keys are rejected by the parser.
std::string model_config_to_text(const ModelConfig& c);
ModelConfig model_config_from_text(std::string_view text);

template <typename T>
struct TwoStreamFeatures {
  Var<T> guidance;  // invalid when the stream is disabled
  Var<T> target;
};

template <typename T>
struct FieldVars {
  Var<T> weights;  // k^2 x h x w, constrained
  Var<T> offsets;  // 2k^2 x h x w
};

template <typename T>
class KernelNetwork {
 public:
  /// Parameters are drawn from a generator seeded with `seed`, in
  /// registration order (guidance tower, guidance heads, target tower,
  /// target heads).
  KernelNetwork(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore<T>& store() { return store_; }
  const ParameterStore<T>& store() const { return store_; }

  std::size_t parameter_count() const { return store_.count(); }
  /// Parameters of the two towers only (heads excluded).
  std::size_t feature_parameter_count() const;

  /// Network input for a full-resolution image: the image itself (DKN) or
  /// its stride-r pixel unshuffle (FDKN).
  Tensor<T> prepare_input(const Tensor<T>& image) const;

  /// Runs the towers. `trace`, when given, receives the guidance tower
  /// shape chain (or the target one when guidance is disabled).
  TwoStreamFeatures<T> features(Var<T> guidance, Var<T> target, NormMode mode,
                                std::vector<Shape>* trace = nullptr);
  Var<T> weight_head(const TwoStreamFeatures<T>& f);
  Var<T> offset_head(const TwoStreamFeatures<T>& f);

  /// Towers + heads on prepared inputs. The field has one cell per output
  /// feature (DKN) or per full-resolution pixel (FDKN).
  FieldVars<T> predict(Var<T> guidance, Var<T> target, NormMode mode);

  /// Number of predict() calls since construction.
  std::size_t forward_passes() const { return forward_passes_; }

 private:
  struct Layer {
    ConvSpec spec;
    Parameter<T>* weight = nullptr;
    Parameter<T>* bias = nullptr;
    Parameter<T>* gamma = nullptr;
    Parameter<T>* beta = nullptr;
    BatchNormStats<T>* stats = nullptr;
  };
  struct Stream {
    std::vector<Layer> layers;
    Parameter<T>* weight_w = nullptr;
    Parameter<T>* weight_b = nullptr;
    Parameter<T>* offset_w = nullptr;
    Parameter<T>* offset_b = nullptr;
  };

  void build_stream(Stream& s, const std::string& prefix, int image_channels,
                    std::mt19937_64& rng);
  Var<T> run_tower(Stream& s, Var<T> x, NormMode mode,
                   std::vector<Shape>* trace);
  Var<T> head(Var<T> feat, Parameter<T>* w, Parameter<T>* b);

  ModelConfig config_;
  ParameterStore<T> store_;
  Stream guidance_;
  Stream target_;
  std::size_t forward_passes_ = 0;
};

namespace fault {
/// Test hook: when set, the residual weight head skips mean subtraction so
/// the self-test can prove that the constraint check fires.
void set_broken_mean_subtraction(bool broken);
bool broken_mean_subtraction();
}  // namespace fault

}  // namespace dkn
