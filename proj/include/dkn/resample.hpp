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

// Stride-r resampling between resolution and channels, and the phase
// split/stitch used by shift-and-stitch inference.
//
// This file is the single source of truth for sub-pixel ordering: channel
// (c, dy, dx) of a resampled tensor is index c*r*r + dy*r + dx, i.e.
// row-major with dy outer and dx inner.

#pragma once

#include <vector>

#include "dkn/tensor.hpp"

namespace dkn {

inline int subpixel_channel(int c, int dy, int dx, int r) {
  return (c * r + dy) * r + dx;
}

/// C x H x W -> r^2*C x H/r x W/r. H and W must be divisible by r.
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& image, int r);

/// r^2*C x H x W -> C x rH x rW. Exact inverse of pixel_unshuffle.
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& image, int r);

/// Translates a C x H x W image x pixels left and y pixels up; the vacated
/// right/bottom edge repeats the last column/row.
template <typename T>
Tensor<T> shift_image(const Tensor<T>& image, int x, int y);

/// Per-phase buffers of a stride-r split, indexed [y * r + x] for phase
/// (x, y): buffer (x, y) holds pixels whose column = x and row = y (mod r).
template <typename T>
std::vector<Tensor<T>> split_phases(const Tensor<T>& image, int r);

/// Interleaves r*r phase buffers (each C x H/r x W/r, order [y * r + x])
/// back into a C x H x W image. Inverse of split_phases.
template <typename T>
Tensor<T> stitch_phases(const std::vector<Tensor<T>>& buffers, int r);

/// Zero padding on every side of a C x H x W image.
template <typename T>
Tensor<T> pad_zero(const Tensor<T>& image, int pad);

/// Reflect (mirror without edge repeat) padding on the bottom and right.
template <typename T>
Tensor<T> pad_reflect_bottom_right(const Tensor<T>& image, int pad_h,
                                   int pad_w);

/// Window [y0, y0+h) x [x0, x0+w) of a C x H x W image; must lie inside.
template <typename T>
Tensor<T> crop(const Tensor<T>& image, int y0, int x0, int h, int w);

/// h x w window whose top-left corner sits at (y0, x0); pixels outside the
/// image read as zero. Equivalent to cropping a zero-padded image.
template <typename T>
Tensor<T> window_zero(const Tensor<T>& image, int y0, int x0, int h, int w);

/// Replicates a 1-channel image to `channels` channels; other inputs are
/// returned unchanged when they already have `channels` channels.
template <typename T>
Tensor<T> replicate_channels(const Tensor<T>& image, int channels);

}  // namespace dkn
