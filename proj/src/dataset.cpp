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

#include "dkn/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "dkn/check.hpp"
#include "dkn/image_io.hpp"

namespace dkn {

double keys_cubic(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> cubic_taps(int in, int out) {
  std::vector<Taps> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double src = (o + 0.5) * scale - 0.5;
    const int x0 = static_cast<int>(std::floor(src));
    for (int t = 0; t < 4; ++t) {
      const int x = x0 - 1 + t;
      taps[o].index[t] = std::clamp(x, 0, in - 1);
      taps[o].weight[t] = keys_cubic(src - x);
    }
  }
  return taps;
}

void require_image(const TensorF& image, const char* op) {
  DKN_CHECK(image.rank() == 3, op, " expects C x H x W, got ",
            shape_str(image.shape()));
}

}  // namespace

TensorF bicubic_resize(const TensorF& image, int out_h, int out_w) {
  require_image(image, "bicubic_resize");
  DKN_CHECK(out_h > 0 && out_w > 0, "bicubic_resize target extents must be "
            "positive, got ", out_h, "x", out_w);
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const std::vector<Taps> tx = cubic_taps(w, out_w), ty = cubic_taps(h, out_h);
  TensorF out(Shape{c, out_h, out_w});
  std::vector<double> rows(static_cast<std::size_t>(h) * out_w);
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < out_w; ++x) {
        double v = 0;
        for (int t = 0; t < 4; ++t)
          v += tx[x].weight[t] * image.at(ch, y, tx[x].index[t]);
        rows[static_cast<std::size_t>(y) * out_w + x] = v;
      }
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) {
        double v = 0;
        for (int t = 0; t < 4; ++t)
          v += ty[y].weight[t] *
               rows[static_cast<std::size_t>(ty[y].index[t]) * out_w + x];
        out.at(ch, y, x) = static_cast<float>(v);
      }
  }
  return out;
}

TensorF nearest_downsample_rb(const TensorF& image, int s) {
  require_image(image, "nearest_downsample_rb");
  DKN_CHECK(s >= 1, "scale must be positive, got ", s);
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  DKN_CHECK(h % s == 0 && w % s == 0, "extents ", h, "x", w,
            " are not divisible by the scale ", s);
  TensorF out(Shape{c, h / s, w / s});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h / s; ++i)
      for (int j = 0; j < w / s; ++j)
        out.at(ch, i, j) = image.at(ch, s * i + s - 1, s * j + s - 1);
  return out;
}

TensorF add_gaussian_noise(const TensorF& image, double variance,
                           std::uint64_t seed) {
  DKN_CHECK(variance >= 0, "noise variance must be non-negative, got ",
            variance);
  if (variance == 0) return image;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, std::sqrt(variance));
  TensorF out = image;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>(std::clamp(out[i] + n(rng), 0.0, 1.0));
  return out;
}

std::string_view protocol_name(Protocol p) {
  return p == Protocol::kBicubic ? "bicubic" : "nearest_rb";
}

Protocol parse_protocol(std::string_view s) {
  if (s == "bicubic") return Protocol::kBicubic;
  if (s == "nearest_rb") return Protocol::kNearestRb;
  throw ShapeError("unknown protocol '" + std::string(s) +
                   "' (expected bicubic|nearest_rb)");
}

SamplePair make_training_pair(const TensorF& rgb, const TensorF& depth,
                              const Degradation& d, std::uint64_t seed) {
  require_image(rgb, "make_training_pair");
  require_image(depth, "make_training_pair");
  DKN_CHECK(depth.dim(0) == 1, "depth must have one channel");
  DKN_CHECK(rgb.dim(1) == depth.dim(1) && rgb.dim(2) == depth.dim(2),
            "guidance ", shape_str(rgb.shape()), " and depth ",
            shape_str(depth.shape()), " extents differ");
  DKN_CHECK(d.scale >= 1, "scale must be positive");
  const int h = depth.dim(1), w = depth.dim(2);
  DKN_CHECK(h % d.scale == 0 && w % d.scale == 0, "extents ", h, "x", w,
            " are not divisible by the scale ", d.scale);
  TensorF low = d.protocol == Protocol::kBicubic
                    ? bicubic_resize(depth, h / d.scale, w / d.scale)
                    : nearest_downsample_rb(depth, d.scale);
  if (d.noise_variance > 0) low = add_gaussian_noise(low, d.noise_variance, seed);
  return SamplePair{rgb, bicubic_resize(low, h, w), depth, d};
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Membership test for one random shape.
struct Shape2d {
  bool ellipse = true;
  double cx = 0, cy = 0, rx = 1, ry = 1, angle = 0;
  std::vector<std::array<double, 2>> poly;  // convex, counter-clockwise

  bool contains(double x, double y) const {
    if (ellipse) {
      const double c = std::cos(angle), s = std::sin(angle);
      const double u = ((x - cx) * c + (y - cy) * s) / rx;
      const double v = (-(x - cx) * s + (y - cy) * c) / ry;
      return u * u + v * v <= 1.0;
    }
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const auto& a = poly[i];
      const auto& b = poly[(i + 1) % poly.size()];
      if ((b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]) < 0) return false;
    }
    return true;
  }
};

Shape2d random_shape(Rng& rng, int size) {
  Shape2d s;
  s.ellipse = uniform(rng, 0, 1) < 0.5;
  s.cx = uniform(rng, 0.1, 0.9) * size;
  s.cy = uniform(rng, 0.1, 0.9) * size;
  if (s.ellipse) {
    s.rx = uniform(rng, 0.08, 0.3) * size;
    s.ry = uniform(rng, 0.08, 0.3) * size;
    s.angle = uniform(rng, 0, std::numbers::pi);
  } else {
    const int n = uniform_int(rng, 3, 6);
    std::vector<double> angles(n);
    for (double& a : angles) a = uniform(rng, 0, 2 * std::numbers::pi);
    std::sort(angles.begin(), angles.end());
    const double r = uniform(rng, 0.12, 0.35) * size;
    for (double a : angles)
      s.poly.push_back({s.cx + r * std::cos(a), s.cy + r * std::sin(a)});
  }
  return s;
}

}  // namespace

std::vector<RgbdImage> make_synthetic_dataset(int count, int size,
                                              std::uint64_t seed) {
  DKN_CHECK(count >= 0, "dataset count must be non-negative");
  DKN_CHECK(size >= 8, "synthetic images must be at least 8x8, got ", size);
  std::vector<RgbdImage> out;
  Rng master(seed);
  for (int n = 0; n < count; ++n) {
    Rng rng(master());
    const int shapes = uniform_int(rng, 3, 6);
    // Label 0 is the background plane.
    std::vector<double> depth{uniform(rng, 0.6, 0.95)};
    std::vector<std::array<double, 3>> colour;
    auto distinct = [&](const std::array<double, 3>& c) {
      for (const auto& o : colour) {
        double d = 0;
        for (int k = 0; k < 3; ++k) d = std::max(d, std::abs(c[k] - o[k]));
        if (d < 0.12) return false;
      }
      return true;
    };
    auto new_colour = [&] {
      std::array<double, 3> c;
      do {
        for (double& v : c) v = uniform(rng, 0.18, 0.82);
      } while (!distinct(c));
      colour.push_back(c);
    };
    new_colour();
    std::vector<int> label(static_cast<std::size_t>(size) * size, 0);
    for (int s = 1; s <= shapes; ++s) {
      const Shape2d sh = random_shape(rng, size);
      depth.push_back(uniform(rng, 0.05, 0.9));
      new_colour();
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          if (sh.contains(x + 0.5, y + 0.5))
            label[static_cast<std::size_t>(y) * size + x] = s;
    }
    // Colour-only texture: stripes or a flat blob, added identically to
    // whatever regions it overlaps.
    std::vector<double> tex(static_cast<std::size_t>(3) * size * size, 0.0);
    const int patches = uniform_int(rng, 1, 3);
    for (int t = 0; t < patches; ++t) {
      const Shape2d region = random_shape(rng, size);
      const bool stripes = uniform(rng, 0, 1) < 0.6;
      const double theta = uniform(rng, 0, std::numbers::pi);
      const double period = uniform(rng, 4.0, 10.0);
      std::array<double, 3> amp;
      for (double& a : amp) a = uniform(rng, 0.06, 0.15) * (uniform(rng, 0, 1) < 0.5 ? -1 : 1);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          if (!region.contains(x + 0.5, y + 0.5)) continue;
          double m = 1.0;
          if (stripes) {
            const double u = x * std::cos(theta) + y * std::sin(theta);
            m = std::sin(2 * std::numbers::pi * u / period) >= 0 ? 1.0 : -1.0;
          }
          for (int k = 0; k < 3; ++k) {
            double& v = tex[(static_cast<std::size_t>(k) * size + y) * size + x];
            // Overlapping patches must not push colours out of [0, 1].
            v = std::clamp(v + m * amp[k], -0.17, 0.17);
          }
        }
    }
    RgbdImage img{TensorF(Shape{3, size, size}), TensorF(Shape{1, size, size})};
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const int l = label[static_cast<std::size_t>(y) * size + x];
        img.depth.at(0, y, x) = static_cast<float>(depth[l]);
        for (int k = 0; k < 3; ++k) {
          const double v =
              colour[l][k] + tex[(static_cast<std::size_t>(k) * size + y) * size + x];
          img.rgb.at(k, y, x) =
              static_cast<float>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0f;
        }
      }
    out.push_back(std::move(img));
  }
  return out;
}

namespace {

// Shortest text that reads back to the same double.
std::string shortest(double x) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), r.ptr);
}

}  // namespace

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries,
                    const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open manifest '" + path.string() + "' for writing");
  std::istringstream comment(header_comment);
  for (std::string line; std::getline(comment, line);) out << "# " << line << "\n";
  for (const ManifestEntry& e : entries) {
    out << "split=" << e.split << " guidance=" << e.guidance.generic_string()
        << " depth=" << e.depth.generic_string()
        << " protocol=" << protocol_name(e.degradation.protocol)
        << " scale=" << e.degradation.scale
        << " noise_variance=" << shortest(e.degradation.noise_variance) << "\n";
  }
  if (!out) throw DataError("failed writing manifest '" + path.string() + "'");
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  Manifest m;
  m.root = path.parent_path();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    ManifestEntry e;
    std::istringstream fields(line);
    for (std::string tok; fields >> tok;) {
      const auto eq = tok.find('=');
      const std::string key = tok.substr(0, eq == std::string::npos ? tok.size() : eq);
      const std::string v = eq == std::string::npos ? "" : tok.substr(eq + 1);
      auto bad = [&](const std::string& why) {
        return DataError(detail::concat(path.string(), ":", lineno, ": ", why));
      };
      if (key == "split") e.split = v;
      else if (key == "guidance") e.guidance = v;
      else if (key == "depth") e.depth = v;
      else if (key == "protocol") {
        try {
          e.degradation.protocol = parse_protocol(v);
        } catch (const ShapeError& err) {
          throw bad(err.what());
        }
      } else if (key == "scale" || key == "noise_variance") {
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (v.empty() || *end != '\0' || !std::isfinite(x) || x < 0)
          throw bad("malformed " + key + " '" + v + "'");
        if (key == "noise_variance") {
          e.degradation.noise_variance = x;
        } else {
          if (x < 1 || x != std::floor(x)) throw bad("scale must be a positive integer");
          e.degradation.scale = static_cast<int>(x);
        }
      } else {
        throw bad("unknown manifest field '" + key + "'");
      }
    }
    if (e.split != "train" && e.split != "test") {
      throw DataError(detail::concat(path.string(), ":", lineno,
                                     ": split must be train or test, got '",
                                     e.split, "'"));
    }
    if (e.guidance.empty() || e.depth.empty()) {
      throw DataError(detail::concat(path.string(), ":", lineno,
                                     ": record needs guidance= and depth="));
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::vector<RgbdImage> load_split(const Manifest& manifest,
                                  std::string_view split) {
  std::vector<RgbdImage> out;
  for (const ManifestEntry& e : manifest.entries) {
    if (!split.empty() && e.split != split) continue;
    RgbdImage img{read_image(manifest.root / e.guidance).pixels,
                  read_image(manifest.root / e.depth).pixels};
    if (img.rgb.dim(0) != 3 || img.depth.dim(0) != 1 ||
        img.rgb.dim(1) != img.depth.dim(1) || img.rgb.dim(2) != img.depth.dim(2)) {
      throw DataError(detail::concat("pair ", e.guidance.string(), " / ",
                                     e.depth.string(), " has shapes ",
                                     shape_str(img.rgb.shape()), " and ",
                                     shape_str(img.depth.shape()),
                                     "; expected 3 x H x W and 1 x H x W"));
    }
    out.push_back(std::move(img));
  }
  return out;
}

Manifest write_synthetic_dataset(const std::filesystem::path& dir,
                                 const std::vector<RgbdImage>& images,
                                 int test_count, const std::string& comment,
                                 const Degradation& degradation) {
  DKN_CHECK(test_count >= 0 && test_count <= static_cast<int>(images.size()),
            "test split of ", test_count, " exceeds dataset of ", images.size());
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
  Manifest m;
  m.root = dir;
  const int train = static_cast<int>(images.size()) - test_count;
  for (std::size_t i = 0; i < images.size(); ++i) {
    char rgb[32], depth[32];
    std::snprintf(rgb, sizeof rgb, "rgb_%04zu.ppm", i);
    std::snprintf(depth, sizeof depth, "depth_%04zu.pfm", i);
    write_image(dir / rgb, images[i].rgb);
    write_image(dir / depth, images[i].depth);
    m.entries.push_back(
        {static_cast<int>(i) < train ? "train" : "test", rgb, depth, degradation});
  }
  write_manifest(dir / "manifest.txt", m.entries, comment);
  return m;
}

}  // namespace dkn
