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

// Binary Netpbm (P5 gray, P6 colour; 8- or 16-bit big-endian samples) and
// PFM (Pf gray, PF colour; 32-bit floats, negative scale = little-endian,
// rows stored bottom to top).
//
// Images are C x H x W float tensors. Netpbm samples map to [0, 1] by
// dividing by maxval; writing rounds to the nearest level after clamping.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dkn/tensor.hpp"

namespace dkn {

enum class ImageFormat { kPgm, kPpm, kPfm };

std::string_view image_format_name(ImageFormat f);
/// From the file extension (.pgm, .ppm, .pfm); throws DataError otherwise.
ImageFormat format_from_path(const std::filesystem::path& path);

struct DecodedImage {
  TensorF pixels;  // C x H x W
  ImageFormat format = ImageFormat::kPfm;
  int maxval = 0;  // Netpbm only
};

/// Parses an in-memory file. `source` names it in error messages, which
/// also carry the byte offset of the problem.
DecodedImage decode_image(std::string_view bytes,
                          std::string_view source = "<memory>");
std::string encode_image(const TensorF& image, ImageFormat format,
                         int bit_depth = 8);

DecodedImage read_image(const std::filesystem::path& path);
/// Format from the extension. `bit_depth` (8 or 16) applies to Netpbm.
void write_image(const std::filesystem::path& path, const TensorF& image,
                 int bit_depth = 8);

}  // namespace dkn
