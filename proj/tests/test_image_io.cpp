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

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "dkn/image_io.hpp"
#include "test_util.hpp"

namespace dkn {
namespace {

using testing::random_tensor;

std::string error_of(std::string_view bytes) {
  try {
    decode_image(bytes, "test");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

TEST(Pfm, RoundTripIsBitExact) {
  for (int c : {1, 3}) {
    const TensorF x = random_tensor<float>({c, 5, 7}, 1 + c, -1e3, 1e3);
    const DecodedImage d = decode_image(encode_image(x, ImageFormat::kPfm));
    EXPECT_EQ(d.format, ImageFormat::kPfm);
    EXPECT_EQ(d.pixels, x);
  }
}

TEST(Pfm, RowsAreStoredBottomUpAndBigEndianIsRead) {
  // 1x2 big-endian (positive scale) with the bottom row first.
  std::string bytes = "Pf\n1 2\n1.0\n";
  const unsigned char bottom[4] = {0x3f, 0x80, 0, 0};  // 1.0f
  const unsigned char top[4] = {0x40, 0, 0, 0};        // 2.0f
  bytes.append(reinterpret_cast<const char*>(bottom), 4);
  bytes.append(reinterpret_cast<const char*>(top), 4);
  const DecodedImage d = decode_image(bytes);
  EXPECT_EQ(d.pixels, TensorF(Shape{1, 2, 1}, {2.0f, 1.0f}));
}

TEST(Pgm, ZeroImage) {
  const std::string bytes = std::string("P5\n2 2\n255\n") + std::string(4, '\0');
  const DecodedImage d = decode_image(bytes);
  EXPECT_EQ(d.pixels, TensorF(Shape{1, 2, 2}, 0.0f));
  EXPECT_EQ(d.maxval, 255);
}

TEST(Ppm, InterleavedToPlanar) {
  std::string bytes = "P6\n2 1\n255\n";
  for (int v : {255, 0, 0, 0, 0, 255}) bytes.push_back(static_cast<char>(v));
  const DecodedImage d = decode_image(bytes);
  EXPECT_EQ(d.pixels, TensorF(Shape{3, 1, 2}, {1, 0, 0, 0, 0, 1}));
}

TEST(Netpbm, CommentsInTheHeader) {
  const std::string bytes = std::string("P5 # depth\n# size\n2 1\n# max\n255\n") +
                            std::string("\x00\xff", 2);
  EXPECT_EQ(decode_image(bytes).pixels, TensorF(Shape{1, 1, 2}, {0, 1}));
}

TEST(Netpbm, RoundTripAtDeclaredBitDepth) {
  for (int depth : {8, 16}) {
    const int maxval = depth == 8 ? 255 : 65535;
    TensorF x = random_tensor<float>({3, 4, 6}, depth, 0, 1);
    for (float& v : x.values()) v = std::round(v * maxval) / maxval;
    const DecodedImage d = decode_image(encode_image(x, ImageFormat::kPpm, depth));
    EXPECT_EQ(d.maxval, maxval);
    EXPECT_LT(max_abs_diff(d.pixels, x), 1e-7f);
    const TensorF g = random_tensor<float>({1, 3, 3}, depth + 1, 0, 1);
    const TensorF back = decode_image(encode_image(g, ImageFormat::kPgm, depth)).pixels;
    EXPECT_LE(max_abs_diff(back, g), 0.5f / maxval + 1e-7f);
  }
}

TEST(Netpbm, EncodingRejectsWrongChannelCounts) {
  EXPECT_THROW(encode_image(TensorF(Shape{3, 2, 2}), ImageFormat::kPgm), ShapeError);
  EXPECT_THROW(encode_image(TensorF(Shape{1, 2, 2}), ImageFormat::kPpm), ShapeError);
  EXPECT_THROW(encode_image(TensorF(Shape{1, 2, 2}), ImageFormat::kPgm, 12), ShapeError);
}

TEST(Decode, MalformedInputsReportAByteOffset) {
  for (const std::string& bad :
       {std::string("P7\n1 1\n255\n\0", 12), std::string("P5\nx 1\n255\n"),
        std::string("P5\n2 2\n255\n\0\0", 13), std::string("P5\n1 1\n100\n\xff", 12),
        std::string("Pf\n1 1\n0.0\n\0\0\0\0", 15), std::string("Pf\n2 2\n-1.0\n\0\0\0", 15),
        std::string("P"), std::string("P5\n0 4\n255\n")}) {
    const std::string e = error_of(bad);
    EXPECT_NE(e.find("byte offset"), std::string::npos) << "'" << bad << "' -> " << e;
    EXPECT_NE(e.find("test"), std::string::npos) << e;
  }
}

TEST(Files, FormatFromExtensionAndRoundTrip) {
  EXPECT_EQ(format_from_path("a/b.PFM"), ImageFormat::kPfm);
  EXPECT_EQ(format_from_path("x.pgm"), ImageFormat::kPgm);
  EXPECT_THROW(format_from_path("x.png"), DataError);
  const auto dir = std::filesystem::temp_directory_path() / "dkn_image_io_test";
  std::filesystem::create_directories(dir);
  const TensorF x = random_tensor<float>({1, 6, 5}, 9, 0, 2);
  write_image(dir / "d.pfm", x);
  EXPECT_EQ(read_image(dir / "d.pfm").pixels, x);
  EXPECT_THROW(read_image(dir / "missing.pfm"), DataError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace dkn
