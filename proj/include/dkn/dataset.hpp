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

// Degradation pipelines and the synthetic RGB-D generator.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dkn/tensor.hpp"

namespace dkn {

/// Keys cubic convolution kernel with a = -0.5.
double keys_cubic(double x);

/// Separable bicubic resampling of a C x H x W image (pixel centres
/// aligned, 4 taps per axis, edge pixels repeated outside the image). The
/// same kernel is used for shrinking and enlarging; there is no
/// anti-alias widening.
TensorF bicubic_resize(const TensorF& image, int out_h, int out_w);

/// output(i, j) = input(s*i + s-1, s*j + s-1).
TensorF nearest_downsample_rb(const TensorF& image, int s);

/// Adds i.i.d. N(0, variance) noise drawn from a generator seeded with
/// `seed`, then clamps to [0, 1].
TensorF add_gaussian_noise(const TensorF& image, double variance,
                           std::uint64_t seed);

enum class Protocol { kBicubic, kNearestRb };

std::string_view protocol_name(Protocol p);
Protocol parse_protocol(std::string_view s);

struct Degradation {
  Protocol protocol = Protocol::kBicubic;
  int scale = 4;
  double noise_variance = 0.0;
};

struct SamplePair {
  TensorF guidance;      // 3 x H x W in [0, 1]
  TensorF target;        // 1 x H x W, degraded then upsampled back
  TensorF ground_truth;  // 1 x H x W
  Degradation degradation;
};

/// Downsample by the protocol, add noise at low resolution when requested,
/// then bicubic-upsample back to H x W.
SamplePair make_training_pair(const TensorF& rgb, const TensorF& depth,
                              const Degradation& degradation,
                              std::uint64_t seed);

struct RgbdImage {
  TensorF rgb;    // 3 x H x W, multiples of 1/255
  TensorF depth;  // 1 x H x W in [0, 1]
};

/// Piecewise-constant depth from random ellipses and polygons. Each depth
/// region gets its own colour; additive colour texture (stripes, blobs)
/// adds edges that have no depth counterpart. Region colours of
/// neighbouring labels always differ, so every depth edge is an RGB edge.
std::vector<RgbdImage> make_synthetic_dataset(int count, int size,
                                              std::uint64_t seed);

/// One manifest line:
///   split=<train|test> guidance=<path> depth=<path> protocol=<p> scale=<s>
///   noise_variance=<v>
/// Paths are relative to the manifest's directory. The degradation fields
/// are optional on read and default to bicubic x4 without noise.
struct ManifestEntry {
  std::string split;
  std::filesystem::path guidance;
  std::filesystem::path depth;
  Degradation degradation;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;  // directory containing the manifest
};

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries,
                    const std::string& header_comment = "");
Manifest read_manifest(const std::filesystem::path& path);

/// Loads the RGB-D images of one split ("" for all).
std::vector<RgbdImage> load_split(const Manifest& manifest,
                                  std::string_view split);

/// Writes rgb_NNNN.ppm / depth_NNNN.pfm plus manifest.txt under `dir`; the
/// last `test_count` images form the test split.
Manifest write_synthetic_dataset(const std::filesystem::path& dir,
                                 const std::vector<RgbdImage>& images,
                                 int test_count, const std::string& comment,
                                 const Degradation& degradation = {});

}  // namespace dkn
