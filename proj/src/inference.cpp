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

#include "dkn/inference.hpp"

#include <vector>

#include "dkn/resample.hpp"

namespace dkn {
namespace {

template <typename T>
void check_pair(const KernelNetwork<T>& model, const Tensor<T>& guidance,
                const Tensor<T>& target) {
  DKN_CHECK(guidance.rank() == 3 && target.rank() == 3,
            "guidance and target must be C x H x W");
  DKN_CHECK(target.dim(0) == 1, "target must have one channel, got ",
            target.dim(0));
  DKN_CHECK(guidance.dim(0) == model.config().guidance_channels,
            "model expects ", model.config().guidance_channels,
            "-channel guidance, got ", guidance.dim(0));
  DKN_CHECK(guidance.dim(1) == target.dim(1) && guidance.dim(2) == target.dim(2),
            "guidance ", shape_str(guidance.shape()), " and target ",
            shape_str(target.shape()), " extents differ");
}

// Predicts a field from network inputs and applies it to `target`.
template <typename T>
Tensor<T> run_pass(KernelNetwork<T>& model, Tensor<T> guidance_in,
                   Tensor<T> target_in, const Tensor<T>& target,
                   const FieldGeometry& geometry) {
  Graph<T> g(false);
  const FieldVars<T> f = model.predict(g.constant(std::move(guidance_in)),
                                       g.constant(std::move(target_in)),
                                       NormMode::kEval);
  const ModelConfig& c = model.config();
  const KernelField<T> field{c.kernel_size, f.weights.value(),
                             f.offsets.value(), geometry};
  return c.residual
             ? weighted_average_residual(target, field, c.window, c.border)
             : weighted_average_plain(target, field, c.window, c.border);
}

}  // namespace

template <typename T>
InferenceResult<T> infer_shift_and_stitch(KernelNetwork<T>& model,
                                          const Tensor<T>& guidance,
                                          const Tensor<T>& target) {
  check_pair(model, guidance, target);
  const ModelConfig& c = model.config();
  DKN_CHECK(c.arch == Arch::kDkn, "shift-and-stitch needs a DKN model");
  const auto tower = c.tower(1);
  const int s = stack_stride(tower);
  const int rf = centered_receptive_field(tower);
  const int half = (rf - 1) / 2;
  const int h = target.dim(1), w = target.dim(2);
  DKN_CHECK(h % s == 0 && w % s == 0, "extents ", h, "x", w,
            " must be multiples of the network stride ", s);
  const int mh = h / s, mw = w / s;
  const int win_h = s * (mh - 1) + rf, win_w = s * (mw - 1) + rf;

  InferenceResult<T> r;
  std::vector<Tensor<T>> buffers(static_cast<std::size_t>(s) * s);
  const std::size_t before = model.forward_passes();
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      // Shifting left by x / up by y after zero padding; only N/s^2 kernels
      // are alive at a time.
      buffers[static_cast<std::size_t>(y) * s + x] = run_pass(
          model, window_zero(guidance, y - half, x - half, win_h, win_w),
          window_zero(target, y - half, x - half, win_h, win_w), target,
          FieldGeometry{y, x, s});
    }
  r.forward_passes = model.forward_passes() - before;
  r.output = stitch_phases(buffers, s);
  return r;
}

template <typename T>
InferenceResult<T> infer_single_pass(KernelNetwork<T>& model,
                                     const Tensor<T>& guidance,
                                     const Tensor<T>& target) {
  check_pair(model, guidance, target);
  const ModelConfig& c = model.config();
  DKN_CHECK(c.arch == Arch::kFdkn, "single-pass inference needs an FDKN model");
  const int r = c.resample_stride;
  const int h = target.dim(1), w = target.dim(2);
  DKN_CHECK(h % r == 0 && w % r == 0, "extents ", h, "x", w,
            " must be multiples of the resample stride ", r);
  // Zero margin of half a receptive field on the resampled grid.
  const int pad = r * (c.receptive_field() - 1) / 2;
  InferenceResult<T> res;
  const std::size_t before = model.forward_passes();
  res.output = run_pass(
      model,
      model.prepare_input(window_zero(guidance, -pad, -pad, h + 2 * pad,
                                      w + 2 * pad)),
      model.prepare_input(window_zero(target, -pad, -pad, h + 2 * pad,
                                      w + 2 * pad)),
      target, FieldGeometry{0, 0, 1});
  res.forward_passes = model.forward_passes() - before;
  return res;
}

template <typename T>
InferenceResult<T> infer(KernelNetwork<T>& model, const Tensor<T>& guidance,
                         const Tensor<T>& target) {
  check_pair(model, guidance, target);
  constexpr int kMultiple = 4;
  const int h = target.dim(1), w = target.dim(2);
  const int ph = (kMultiple - h % kMultiple) % kMultiple;
  const int pw = (kMultiple - w % kMultiple) % kMultiple;
  auto run = [&](const Tensor<T>& g, const Tensor<T>& t) {
    return model.config().arch == Arch::kDkn
               ? infer_shift_and_stitch(model, g, t)
               : infer_single_pass(model, g, t);
  };
  if (ph == 0 && pw == 0) return run(guidance, target);
  InferenceResult<T> r = run(pad_reflect_bottom_right(guidance, ph, pw),
                             pad_reflect_bottom_right(target, ph, pw));
  r.output = crop(r.output, 0, 0, h, w);
  r.pad_bottom = ph;
  r.pad_right = pw;
  return r;
}

template <typename T>
InferenceResult<T> infer_naive_per_pixel(KernelNetwork<T>& model,
                                         const Tensor<T>& guidance,
                                         const Tensor<T>& target) {
  check_pair(model, guidance, target);
  const ModelConfig& c = model.config();
  DKN_CHECK(c.arch == Arch::kDkn, "per-pixel inference needs a DKN model");
  const int rf = c.receptive_field();
  const int half = (rf - 1) / 2;
  const int h = target.dim(1), w = target.dim(2);
  InferenceResult<T> r;
  r.output = Tensor<T>(Shape{1, h, w});
  const std::size_t before = model.forward_passes();
  for (int py = 0; py < h; ++py)
    for (int px = 0; px < w; ++px) {
      const Tensor<T> v = run_pass(
          model, window_zero(guidance, py - half, px - half, rf, rf),
          window_zero(target, py - half, px - half, rf, rf), target,
          FieldGeometry{py, px, 1});
      DKN_CHECK(v.size() == 1, "receptive-field window produced ", v.size(),
                " kernels instead of one");
      r.output.at(0, py, px) = v[0];
    }
  r.forward_passes = model.forward_passes() - before;
  return r;
}

#define DKN_INSTANTIATE(T)                                                     \
  template InferenceResult<T> infer_shift_and_stitch(                          \
      KernelNetwork<T>&, const Tensor<T>&, const Tensor<T>&);                  \
  template InferenceResult<T> infer_single_pass(                               \
      KernelNetwork<T>&, const Tensor<T>&, const Tensor<T>&);                  \
  template InferenceResult<T> infer(KernelNetwork<T>&, const Tensor<T>&,       \
                                    const Tensor<T>&);                         \
  template InferenceResult<T> infer_naive_per_pixel(                           \
      KernelNetwork<T>&, const Tensor<T>&, const Tensor<T>&);

DKN_INSTANTIATE(float)
DKN_INSTANTIATE(double)
#undef DKN_INSTANTIATE

}  // namespace dkn
