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

#include "dkn/filtering.hpp"

#include <cmath>
#include <string>

#include "dkn/resample.hpp"

namespace dkn {
namespace {

struct FieldShape {
  int taps, height, width;
};

template <typename T>
FieldShape check_field(const Tensor<T>& target, const Tensor<T>& weights,
                       const Tensor<T>& offsets, const FieldGeometry& geo,
                       const SamplerConfig& cfg) {
  DKN_CHECK(target.rank() == 3 && target.dim(0) == 1,
            "weighted average target must be 1 x H x W, got ",
            shape_str(target.shape()));
  const int k = cfg.kernel_size;
  DKN_CHECK(k >= 1 && k % 2 == 1, "kernel size must be odd, got ", k);
  DKN_CHECK(cfg.window % 2 == 1 && cfg.window >= k,
            "sampling window must be odd and >= kernel size, got ", cfg.window);
  DKN_CHECK(weights.rank() == 3 && weights.dim(0) == k * k,
            "kernel weights must be k^2 x h x w with k^2 = ", k * k, ", got ",
            shape_str(weights.shape()));
  DKN_CHECK(offsets.rank() == 3 && offsets.dim(0) == 2 * k * k &&
                offsets.dim(1) == weights.dim(1) &&
                offsets.dim(2) == weights.dim(2),
            "offsets must be 2k^2 x h x w matching the weights, got ",
            shape_str(offsets.shape()));
  DKN_CHECK(geo.stride >= 1, "field stride must be positive");
  const int h = weights.dim(1), w = weights.dim(2);
  const int last_y = geo.origin_y + geo.stride * (h - 1);
  const int last_x = geo.origin_x + geo.stride * (w - 1);
  DKN_CHECK(geo.origin_y >= 0 && geo.origin_x >= 0 && last_y < target.dim(1) &&
                last_x < target.dim(2),
            "kernel field of ", h, "x", w, " cells at stride ", geo.stride,
            " from (", geo.origin_y, ",", geo.origin_x,
            ") does not fit target ", shape_str(target.shape()));
  return {k * k, h, w};
}

template <typename T>
ClampedPosition<T> tap_position(const Tensor<T>& offsets, std::size_t plane,
                                std::size_t cell, int q, int k, Point<T> p,
                                int window) {
  const Point<int> tap = kernel_tap(q, k);
  const Point<T> off{offsets[(2 * q) * plane + cell],
                     offsets[(2 * q + 1) * plane + cell]};
  return clamp_offset(p, Point<T>{p.x + tap.x, p.y + tap.y}, off, window);
}

}  // namespace

template <typename T>
T max_constraint_violation(const Tensor<T>& weights, KernelConstraint c) {
  DKN_CHECK(weights.rank() == 3, "kernel weights must be k^2 x h x w");
  const int taps = weights.dim(0);
  const std::size_t plane = static_cast<std::size_t>(weights.dim(1)) *
                            weights.dim(2);
  const T expected = c == KernelConstraint::kMeanSubtract ? T(0) : T(1);
  T worst = 0;
  for (std::size_t p = 0; p < plane; ++p) {
    T s = 0;
    for (int q = 0; q < taps; ++q) s += weights[q * plane + p];
    worst = std::max(worst, static_cast<T>(std::abs(s - expected)));
  }
  return worst;
}

template <typename T>
Tensor<T> deformable_average(const Tensor<T>& target, const Tensor<T>& weights,
                             const Tensor<T>& offsets,
                             const FieldGeometry& geo,
                             const SamplerConfig& cfg, bool residual) {
  const FieldShape fs = check_field(target, weights, offsets, geo, cfg);
  const PlaneView<T> image{target.data(), target.dim(1), target.dim(2)};
  const std::size_t plane = static_cast<std::size_t>(fs.height) * fs.width;
  Tensor<T> out(Shape{1, fs.height, fs.width});
  for (int i = 0; i < fs.height; ++i)
    for (int j = 0; j < fs.width; ++j) {
      const std::size_t cell = static_cast<std::size_t>(i) * fs.width + j;
      const int py = geo.origin_y + geo.stride * i;
      const int px = geo.origin_x + geo.stride * j;
      const Point<T> p{static_cast<T>(px), static_cast<T>(py)};
      T acc = residual ? image.at(py, px) : T(0);
      for (int q = 0; q < fs.taps; ++q) {
        const ClampedPosition<T> s =
            tap_position(offsets, plane, cell, q, cfg.kernel_size, p,
                         cfg.window);
        acc += weights[q * plane + cell] * sample_bilinear(image, s.s, cfg.border);
      }
      out[cell] = acc;
    }
  return out;
}

template <typename T>
Var<T> deformable_average(Var<T> target, Var<T> weights, Var<T> offsets,
                          const FieldGeometry& geo, const SamplerConfig& cfg,
                          bool residual) {
  DKN_CHECK(&target.graph() == &weights.graph() &&
                &target.graph() == &offsets.graph(),
            "deformable_average: operands belong to different graphs");
  Tensor<T> out = deformable_average(target.value(), weights.value(),
                                     offsets.value(), geo, cfg, residual);
  const bool rg = target.requires_grad() || weights.requires_grad() ||
                  offsets.requires_grad();
  return target.graph().record(
      std::move(out), rg,
      [target, weights, offsets, geo, cfg, residual](const Tensor<T>& g) mutable {
        const Tensor<T>& tv = target.value();
        const Tensor<T>& wv = weights.value();
        const Tensor<T>& ov = offsets.value();
        const PlaneView<T> image{tv.data(), tv.dim(1), tv.dim(2)};
        const int k = cfg.kernel_size;
        const int h = wv.dim(1), w = wv.dim(2);
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        Tensor<T>* dt = target.requires_grad()
                            ? &target.graph().grad_accumulator(target)
                            : nullptr;
        Tensor<T>* dw = weights.requires_grad()
                            ? &weights.graph().grad_accumulator(weights)
                            : nullptr;
        Tensor<T>* doff = offsets.requires_grad()
                              ? &offsets.graph().grad_accumulator(offsets)
                              : nullptr;
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) {
            const std::size_t cell = static_cast<std::size_t>(i) * w + j;
            const T up = g[cell];
            if (up == T(0)) continue;
            const int py = geo.origin_y + geo.stride * i;
            const int px = geo.origin_x + geo.stride * j;
            const Point<T> p{static_cast<T>(px), static_cast<T>(py)};
            if (residual && dt) (*dt)[static_cast<std::size_t>(py) * image.width + px] += up;
            for (int q = 0; q < k * k; ++q) {
              const ClampedPosition<T> s =
                  tap_position(ov, plane, cell, q, k, p, cfg.window);
              const T kw = wv[q * plane + cell];
              if (dw) (*dw)[q * plane + cell] += up * sample_bilinear(image, s.s, cfg.border);
              if (!dt && !doff) continue;
              const SampleGrad<T> sg = sample_backward(image, s.s, up * kw, cfg.border);
              if (dt) {
                for (const auto& c : sg.image)
                  if (c.valid)
                    (*dt)[static_cast<std::size_t>(c.y) * image.width + c.x] += c.grad;
              }
              if (doff) {
                if (!s.clamped_x) (*doff)[(2 * q) * plane + cell] += sg.position.x;
                if (!s.clamped_y) (*doff)[(2 * q + 1) * plane + cell] += sg.position.y;
              }
            }
          }
      },
      "deformable_average");
}

namespace {

template <typename T>
void check_constraint(const KernelField<T>& field, KernelConstraint c) {
  const T v = max_constraint_violation(field.weights, c);
  if (!(v <= T(1e-4))) {
    throw NumericalError(
        detail::concat("kernel weights violate the ", constraint_name(c),
                       " constraint by ", v,
                       " (tolerance 1e-4); the weight regression head is broken"));
  }
}

}  // namespace

template <typename T>
Tensor<T> weighted_average_residual(const Tensor<T>& target,
                                    const KernelField<T>& field, int window,
                                    BorderMode border) {
  check_constraint(field, KernelConstraint::kMeanSubtract);
  return deformable_average(target, field.weights, field.offsets,
                            field.geometry,
                            SamplerConfig{field.kernel_size, window, border},
                            true);
}

template <typename T>
Tensor<T> weighted_average_plain(const Tensor<T>& target,
                                 const KernelField<T>& field, int window,
                                 BorderMode border) {
  check_constraint(field, KernelConstraint::kL1Normalize);
  return deformable_average(target, field.weights, field.offsets,
                            field.geometry,
                            SamplerConfig{field.kernel_size, window, border},
                            false);
}

template <typename T>
Tensor<T> iterative_filter(const Tensor<T>& image, JointFilter<T>& model,
                           int iterations) {
  DKN_CHECK(image.rank() == 3, "iterative_filter expects C x H x W, got ",
            shape_str(image.shape()));
  DKN_CHECK(iterations >= 0, "iteration count must be non-negative");
  if (iterations == 0) return image;
  const int channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor<T> out(image.shape());
  for (int c = 0; c < channels; ++c) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Tensor<T> x(Shape{1, h, w},
                std::vector<T>(image.data() + c * plane,
                               image.data() + (c + 1) * plane));
    for (int it = 0; it < iterations; ++it) {
      x = model.filter(replicate_channels(x, model.guidance_channels()), x);
    }
    std::copy(x.data(), x.data() + x.size(), out.data() + c * plane);
  }
  return out;
}

#define DKN_INSTANTIATE(T)                                                     \
  template T max_constraint_violation(const Tensor<T>&, KernelConstraint);    \
  template Tensor<T> deformable_average(const Tensor<T>&, const Tensor<T>&,    \
                                        const Tensor<T>&, const FieldGeometry&, \
                                        const SamplerConfig&, bool);           \
  template Var<T> deformable_average(Var<T>, Var<T>, Var<T>,                   \
                                     const FieldGeometry&,                     \
                                     const SamplerConfig&, bool);              \
  template Tensor<T> weighted_average_residual(                                \
      const Tensor<T>&, const KernelField<T>&, int, BorderMode);               \
  template Tensor<T> weighted_average_plain(const Tensor<T>&,                  \
                                            const KernelField<T>&, int,        \
                                            BorderMode);                       \
  template Tensor<T> iterative_filter(const Tensor<T>&, JointFilter<T>&, int);

DKN_INSTANTIATE(float)
DKN_INSTANTIATE(double)
#undef DKN_INSTANTIATE

}  // namespace dkn
