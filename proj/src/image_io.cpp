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

#include "dkn/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dkn/check.hpp"

namespace dkn {

std::string_view image_format_name(ImageFormat f) {
  switch (f) {
    case ImageFormat::kPgm: return "pgm";
    case ImageFormat::kPpm: return "ppm";
    case ImageFormat::kPfm: return "pfm";
  }
  return "?";
}

ImageFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm") return ImageFormat::kPgm;
  if (ext == ".ppm") return ImageFormat::kPpm;
  if (ext == ".pfm") return ImageFormat::kPfm;
  throw DataError("cannot infer image format from '" + path.string() +
                  "' (expected .pgm, .ppm or .pfm)");
}

namespace {

// std::byteswap is C++23.
std::uint32_t byteswap32(std::uint32_t u) {
  return (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
}

class HeaderReader {
 public:
  HeaderReader(std::string_view bytes, std::string_view source)
      : b_(bytes), source_(source) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(detail::concat(source_, ": ", what, " at byte offset ",
                                   pos_));
  }

  std::string magic() {
    if (b_.size() < 2) fail("file too short for a magic number");
    pos_ = 2;
    return std::string(b_.substr(0, 2));
  }

  // Skips whitespace and '#' comments.
  void skip_space() {
    while (pos_ < b_.size()) {
      const char c = b_[pos_];
      if (c == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long integer(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > (1L << 30)) fail(std::string("implausible ") + what);
      ++pos_;
    }
    if (pos_ == start) {
      pos_ = start;
      fail(std::string("expected ") + what);
    }
    return v;
  }

  double real(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < b_.size() && !std::isspace(static_cast<unsigned char>(b_[pos_])))
      ++pos_;
    const std::string tok(b_.substr(start, pos_ - start));
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size() || !std::isfinite(v) ||
        v == 0.0) {
      pos_ = start;
      fail(std::string("expected non-zero ") + what);
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from the payload.
  void end_of_header() {
    if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_])))
      fail("expected a single whitespace byte before the payload");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  std::string_view b_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

void require_payload(const HeaderReader& r, std::string_view bytes,
                     std::size_t need, std::string_view source) {
  const std::size_t have = bytes.size() - r.pos();
  if (have < need) {
    throw DataError(detail::concat(source, ": truncated payload: expected ",
                                   need, " bytes, found ", have,
                                   " at byte offset ", bytes.size()));
  }
}

DecodedImage decode_netpbm(HeaderReader& r, std::string_view bytes,
                           std::string_view source, int channels) {
  const long w = r.integer("width");
  const long h = r.integer("height");
  const long maxval = r.integer("maxval");
  if (w <= 0 || h <= 0) r.fail("image extents must be positive");
  if (maxval < 1 || maxval > 65535) r.fail("maxval must be in [1, 65535]");
  r.end_of_header();
  const int bytes_per = maxval > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(w) * h * channels;
  require_payload(r, bytes, n * bytes_per, source);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + r.pos());
  DecodedImage out;
  out.format = channels == 1 ? ImageFormat::kPgm : ImageFormat::kPpm;
  out.maxval = static_cast<int>(maxval);
  out.pixels = TensorF(Shape{channels, static_cast<int>(h), static_cast<int>(w)});
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  const float denom = static_cast<float>(maxval);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = bytes_per == 2 ? (p[2 * i] << 8) | p[2 * i + 1] : p[i];
    if (v > static_cast<unsigned>(maxval)) {
      throw DataError(detail::concat(source, ": sample ", v, " exceeds maxval ",
                                     maxval, " at byte offset ",
                                     r.pos() + i * bytes_per));
    }
    // Interleaved RGB -> planar.
    const std::size_t pix = i / channels, c = i % channels;
    // Division (not a reciprocal multiply) so k / maxval is correctly
    // rounded and matches values quantised in memory.
    out.pixels[c * plane + pix] = static_cast<float>(v) / denom;
  }
  return out;
}

DecodedImage decode_pfm(HeaderReader& r, std::string_view bytes,
                        std::string_view source, int channels) {
  const long w = r.integer("width");
  const long h = r.integer("height");
  if (w <= 0 || h <= 0) r.fail("image extents must be positive");
  const double scale = r.real("scale");
  r.end_of_header();
  const bool little = scale < 0;
  const std::size_t n = static_cast<std::size_t>(w) * h * channels;
  require_payload(r, bytes, n * 4, source);
  const char* p = bytes.data() + r.pos();
  DecodedImage out;
  out.format = ImageFormat::kPfm;
  out.pixels = TensorF(Shape{channels, static_cast<int>(h), static_cast<int>(w)});
  const bool host_little = std::endian::native == std::endian::little;
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = (static_cast<std::size_t>(y) * w + x) * channels + c;
        std::uint32_t u;
        std::memcpy(&u, p + 4 * i, 4);
        if (little != host_little) u = byteswap32(u);
        // Row 0 of the file is the bottom row.
        out.pixels.at(c, static_cast<int>(h - 1 - y), static_cast<int>(x)) =
            std::bit_cast<float>(u);
      }
  return out;
}

}  // namespace

DecodedImage decode_image(std::string_view bytes, std::string_view source) {
  HeaderReader r(bytes, source);
  const std::string m = r.magic();
  if (m == "P5") return decode_netpbm(r, bytes, source, 1);
  if (m == "P6") return decode_netpbm(r, bytes, source, 3);
  if (m == "Pf") return decode_pfm(r, bytes, source, 1);
  if (m == "PF") return decode_pfm(r, bytes, source, 3);
  throw DataError(detail::concat(source, ": unsupported magic number '", m,
                                 "' at byte offset 0 (expected P5, P6, Pf or PF)"));
}

std::string encode_image(const TensorF& image, ImageFormat format,
                         int bit_depth) {
  DKN_CHECK(image.rank() == 3, "images are C x H x W, got ",
            shape_str(image.shape()));
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::ostringstream os;
  if (format == ImageFormat::kPfm) {
    DKN_CHECK(c == 1 || c == 3, "PFM holds 1 or 3 channels, got ", c);
    os << (c == 1 ? "Pf" : "PF") << "\n" << w << " " << h << "\n-1.0\n";
    std::string payload(plane * c * 4, '\0');
    std::size_t o = 0;
    for (int y = h - 1; y >= 0; --y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c; ++ch) {
          std::uint32_t u = std::bit_cast<std::uint32_t>(image.at(ch, y, x));
          if constexpr (std::endian::native == std::endian::big) u = byteswap32(u);
          std::memcpy(payload.data() + o, &u, 4);
          o += 4;
        }
    os << payload;
    return os.str();
  }
  const int want = format == ImageFormat::kPgm ? 1 : 3;
  DKN_CHECK(c == want, image_format_name(format), " holds ", want,
            " channel(s), got ", c);
  DKN_CHECK(bit_depth == 8 || bit_depth == 16, "bit depth must be 8 or 16");
  const int maxval = bit_depth == 8 ? 255 : 65535;
  os << (c == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n" << maxval << "\n";
  std::string payload;
  payload.reserve(plane * c * (bit_depth / 8));
  for (std::size_t pix = 0; pix < plane; ++pix)
    for (int ch = 0; ch < c; ++ch) {
      const float v = std::clamp(image[ch * plane + pix], 0.0f, 1.0f);
      const unsigned q = static_cast<unsigned>(std::lround(v * maxval));
      if (bit_depth == 16) payload.push_back(static_cast<char>(q >> 8));
      payload.push_back(static_cast<char>(q & 0xff));
    }
  os << payload;
  return os.str();
}

DecodedImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return decode_image(bytes, path.string());
}

void write_image(const std::filesystem::path& path, const TensorF& image,
                 int bit_depth) {
  const std::string bytes = encode_image(image, format_from_path(path), bit_depth);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

}  // namespace dkn
