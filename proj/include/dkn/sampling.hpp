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

// Fractional-position sampling with the separable tent kernel
// G(s, t) = g(s_x, t_x) g(s_y, t_y), g(a, b) = max(0, 1 - |a - b|),
// and its derivatives with respect to the image and the position.
//
// Positions are (x, y) in pixel units; x indexes columns.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dkn/check.hpp"

namespace dkn {

/// What a sample outside the image sees: the nearest edge pixel (kBorder)
/// or zero (kZero).
enum class BorderMode { kBorder, kZero };

inline std::string_view border_mode_name(BorderMode m) {
  return m == BorderMode::kBorder ? "border" : "zero";
}

inline BorderMode parse_border_mode(std::string_view s) {
  if (s == "border") return BorderMode::kBorder;
  if (s == "zero") return BorderMode::kZero;
  throw ShapeError("unknown border mode '" + std::string(s) +
                   "' (expected border|zero)");
}

template <typename T>
struct Point {
  T x = 0;
  T y = 0;
};

template <typename T>
inline T bilinear_g(T a, T b) {
  return std::max(T(0), T(1) - std::abs(a - b));
}

// d g(a, b) / d a. Zero at both kinks (a == b and |a - b| == 1).
template <typename T>
inline T bilinear_g_grad(T a, T b) {
  const T d = a - b;
  if (d == T(0) || std::abs(d) >= T(1)) return T(0);
  return d > T(0) ? T(-1) : T(1);
}

/// Read-only view of one H x W plane.
template <typename T>
struct PlaneView {
  const T* data;
  int height;
  int width;
  T at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

/// Four integer corners around a fractional position with their tent
/// weights. Corners outside the image are marked invalid (zero mode) or
/// never occur (border mode clamps the position first).
template <typename T>
struct BilinearTaps {
  int x0 = 0, y0 = 0;
  std::array<T, 2> wx{}, wy{};    // g along each axis for corner 0 / 1
  std::array<T, 2> dwx{}, dwy{};  // d g / d s along each axis
  std::array<bool, 4> valid{};    // corner order (y0,x0) (y0,x1) (y1,x0) (y1,x1)
  bool clamped_x = false, clamped_y = false;

  int corner_x(int i) const { return x0 + (i & 1); }
  int corner_y(int i) const { return y0 + (i >> 1); }
  T weight(int i) const { return wy[i >> 1] * wx[i & 1]; }
};

template <typename T>
BilinearTaps<T> bilinear_taps(int height, int width, Point<T> s,
                              BorderMode mode) {
  BilinearTaps<T> t;
  if (mode == BorderMode::kBorder) {
    const T cx = std::clamp(s.x, T(0), T(width - 1));
    const T cy = std::clamp(s.y, T(0), T(height - 1));
    t.clamped_x = cx != s.x;
    t.clamped_y = cy != s.y;
    s = {cx, cy};
  }
  t.x0 = static_cast<int>(std::floor(s.x));
  t.y0 = static_cast<int>(std::floor(s.y));
  for (int i = 0; i < 2; ++i) {
    const T tx = static_cast<T>(t.x0 + i), ty = static_cast<T>(t.y0 + i);
    t.wx[i] = bilinear_g(s.x, tx);
    t.wy[i] = bilinear_g(s.y, ty);
    t.dwx[i] = t.clamped_x ? T(0) : bilinear_g_grad(s.x, tx);
    t.dwy[i] = t.clamped_y ? T(0) : bilinear_g_grad(s.y, ty);
  }
  for (int i = 0; i < 4; ++i) {
    const int x = t.corner_x(i), y = t.corner_y(i);
    t.valid[i] = x >= 0 && x < width && y >= 0 && y < height;
  }
  return t;
}

/// f_s = sum over the 4 corners t of G(s, t) f_t.
template <typename T>
T sample_bilinear(const PlaneView<T>& image, Point<T> s,
                  BorderMode mode = BorderMode::kBorder) {
  const BilinearTaps<T> t = bilinear_taps(image.height, image.width, s, mode);
  T v = 0;
  for (int i = 0; i < 4; ++i) {
    if (t.valid[i] && t.weight(i) != T(0))
      v += t.weight(i) * image.at(t.corner_y(i), t.corner_x(i));
  }
  return v;
}

template <typename T>
struct SampleGrad {
  struct Corner {
    int y = 0, x = 0;
    T grad = 0;
    bool valid = false;
  };
  std::array<Corner, 4> image;
  Point<T> position;
};

/// Vector-Jacobian product of sample_bilinear for upstream gradient `g`.
template <typename T>
SampleGrad<T> sample_backward(const PlaneView<T>& image, Point<T> s, T g,
                              BorderMode mode = BorderMode::kBorder) {
  const BilinearTaps<T> t = bilinear_taps(image.height, image.width, s, mode);
  SampleGrad<T> out;
  T gx = 0, gy = 0;
  for (int i = 0; i < 4; ++i) {
    auto& c = out.image[i];
    c.y = t.corner_y(i);
    c.x = t.corner_x(i);
    c.valid = t.valid[i];
    if (!c.valid) continue;
    c.grad = g * t.weight(i);
    const T f = image.at(c.y, c.x);
    gx += t.dwx[i & 1] * t.wy[i >> 1] * f;
    gy += t.wx[i & 1] * t.dwy[i >> 1] * f;
  }
  out.position = {g * gx, g * gy};
  return out;
}

/// A sampling position after restricting it to the d x d window centred
/// on the output pixel; the flags record which coordinates were clamped.
template <typename T>
struct ClampedPosition {
  Point<T> s;
  bool clamped_x = false;
  bool clamped_y = false;
};

/// s(q) = q + offset, each coordinate clamped to [p - (d-1)/2, p + (d-1)/2].
template <typename T>
ClampedPosition<T> clamp_offset(Point<T> p, Point<T> q, Point<T> offset,
                                int window) {
  DKN_CHECK(window >= 1 && window % 2 == 1,
            "sampling window must be a positive odd integer, got ", window);
  const T half = static_cast<T>((window - 1) / 2);
  const T sx = q.x + offset.x, sy = q.y + offset.y;
  ClampedPosition<T> r;
  r.s.x = std::clamp(sx, p.x - half, p.x + half);
  r.s.y = std::clamp(sy, p.y - half, p.y + half);
  r.clamped_x = r.s.x != sx;
  r.clamped_y = r.s.y != sy;
  return r;
}

/// Base grid offset of kernel tap `q` (row-major, dy outer) for a k x k
/// kernel: tap q sits at (q % k - (k-1)/2, q / k - (k-1)/2) relative to p.
inline Point<int> kernel_tap(int q, int k) {
  const int r = (k - 1) / 2;
  return {q % k - r, q / k - r};
}

/// Clamped sampling positions for all k*k taps of pixel p. `offsets` holds
/// 2k^2 values, (dx, dy) per tap.
template <typename T>
std::vector<ClampedPosition<T>> clamp_offsets(Point<T> p, int k,
                                              std::span<const T> offsets,
                                              int window) {
  DKN_CHECK(offsets.size() == static_cast<std::size_t>(2 * k * k),
            "expected ", 2 * k * k, " offset components, got ", offsets.size());
  std::vector<ClampedPosition<T>> out;
  out.reserve(static_cast<std::size_t>(k) * k);
  for (int q = 0; q < k * k; ++q) {
    const Point<int> tap = kernel_tap(q, k);
    out.push_back(clamp_offset(p, Point<T>{p.x + tap.x, p.y + tap.y},
                               Point<T>{offsets[2 * q], offsets[2 * q + 1]},
                               window));
  }
  return out;
}

}  // namespace dkn
