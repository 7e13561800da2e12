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

#include "dkn/resample.hpp"

#include <algorithm>

namespace dkn {

namespace {

template <typename T>
void require_chw(const Tensor<T>& t, const char* what) {
  DKN_CHECK(t.rank() == 3, what, " expects a C x H x W tensor, got ",
            shape_str(t.shape()));
}

}  // namespace

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& image, int r) {
  require_chw(image, "pixel_unshuffle");
  DKN_CHECK(r >= 1, "pixel_unshuffle stride must be positive, got ", r);
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  DKN_CHECK(h % r == 0, "pixel_unshuffle: height ", h,
            " is not divisible by stride ", r);
  DKN_CHECK(w % r == 0, "pixel_unshuffle: width ", w,
            " is not divisible by stride ", r);
  const int ho = h / r, wo = w / r;
  Tensor<T> out(Shape{c * r * r, ho, wo});
  for (int ch = 0; ch < c; ++ch)
    for (int dy = 0; dy < r; ++dy)
      for (int dx = 0; dx < r; ++dx) {
        const int oc = subpixel_channel(ch, dy, dx, r);
        for (int i = 0; i < ho; ++i)
          for (int j = 0; j < wo; ++j)
            out.at(oc, i, j) = image.at(ch, r * i + dy, r * j + dx);
      }
  return out;
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& image, int r) {
  require_chw(image, "pixel_shuffle");
  DKN_CHECK(r >= 1, "pixel_shuffle stride must be positive, got ", r);
  const int cin = image.dim(0), h = image.dim(1), w = image.dim(2);
  DKN_CHECK(cin % (r * r) == 0, "pixel_shuffle: channel count ", cin,
            " is not divisible by ", r * r);
  const int c = cin / (r * r);
  Tensor<T> out(Shape{c, h * r, w * r});
  for (int ch = 0; ch < c; ++ch)
    for (int dy = 0; dy < r; ++dy)
      for (int dx = 0; dx < r; ++dx) {
        const int ic = subpixel_channel(ch, dy, dx, r);
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j)
            out.at(ch, r * i + dy, r * j + dx) = image.at(ic, i, j);
      }
  return out;
}

template <typename T>
Tensor<T> shift_image(const Tensor<T>& image, int x, int y) {
  require_chw(image, "shift_image");
  DKN_CHECK(x >= 0 && y >= 0, "shift amounts must be non-negative");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor<T> out(image.shape());
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h; ++i) {
      const int si = std::min(i + y, h - 1);
      for (int j = 0; j < w; ++j)
        out.at(ch, i, j) = image.at(ch, si, std::min(j + x, w - 1));
    }
  return out;
}

template <typename T>
std::vector<Tensor<T>> split_phases(const Tensor<T>& image, int r) {
  require_chw(image, "split_phases");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  DKN_CHECK(h % r == 0 && w % r == 0, "split_phases: extents ", h, "x", w,
            " are not divisible by ", r);
  std::vector<Tensor<T>> buffers;
  buffers.reserve(static_cast<std::size_t>(r) * r);
  for (int y = 0; y < r; ++y)
    for (int x = 0; x < r; ++x) {
      Tensor<T> b(Shape{c, h / r, w / r});
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < h / r; ++i)
          for (int j = 0; j < w / r; ++j)
            b.at(ch, i, j) = image.at(ch, r * i + y, r * j + x);
      buffers.push_back(std::move(b));
    }
  return buffers;
}

template <typename T>
Tensor<T> stitch_phases(const std::vector<Tensor<T>>& buffers, int r) {
  DKN_CHECK(buffers.size() == static_cast<std::size_t>(r) * r,
            "stitch needs ", r * r, " phase buffers, got ", buffers.size());
  const Shape& s = buffers.front().shape();
  DKN_CHECK(s.size() == 3, "stitch buffers must be C x h x w");
  for (std::size_t b = 0; b < buffers.size(); ++b) {
    DKN_CHECK(!buffers[b].empty(), "stitch: phase buffer ", b, " is missing");
    DKN_CHECK(buffers[b].shape() == s, "stitch: phase buffer ", b,
              " has shape ", shape_str(buffers[b].shape()), ", expected ",
              shape_str(s));
  }
  const int c = s[0], hb = s[1], wb = s[2];
  Tensor<T> out(Shape{c, hb * r, wb * r});
  for (int y = 0; y < r; ++y)
    for (int x = 0; x < r; ++x) {
      const Tensor<T>& b = buffers[static_cast<std::size_t>(y) * r + x];
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < hb; ++i)
          for (int j = 0; j < wb; ++j)
            out.at(ch, r * i + y, r * j + x) = b.at(ch, i, j);
    }
  return out;
}

template <typename T>
Tensor<T> pad_zero(const Tensor<T>& image, int pad) {
  require_chw(image, "pad_zero");
  DKN_CHECK(pad >= 0, "padding must be non-negative");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor<T> out(Shape{c, h + 2 * pad, w + 2 * pad});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h; ++i)
      std::copy_n(&image.at(ch, i, 0), w, &out.at(ch, i + pad, pad));
  return out;
}

template <typename T>
Tensor<T> pad_reflect_bottom_right(const Tensor<T>& image, int pad_h,
                                   int pad_w) {
  require_chw(image, "pad_reflect");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  DKN_CHECK(pad_h >= 0 && pad_w >= 0, "padding must be non-negative");
  DKN_CHECK(pad_h < h && pad_w < w, "reflect padding ", pad_h, "x", pad_w,
            " exceeds image extents ", h, "x", w);
  Tensor<T> out(Shape{c, h + pad_h, w + pad_w});
  auto reflect = [](int i, int n) { return i < n ? i : 2 * (n - 1) - i; };
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h + pad_h; ++i)
      for (int j = 0; j < w + pad_w; ++j)
        out.at(ch, i, j) = image.at(ch, reflect(i, h), reflect(j, w));
  return out;
}

template <typename T>
Tensor<T> crop(const Tensor<T>& image, int y0, int x0, int h, int w) {
  require_chw(image, "crop");
  DKN_CHECK(y0 >= 0 && x0 >= 0 && h >= 0 && w >= 0 &&
                y0 + h <= image.dim(1) && x0 + w <= image.dim(2),
            "crop window (", y0, ",", x0, ") ", h, "x", w,
            " falls outside image ", shape_str(image.shape()));
  const int c = image.dim(0);
  Tensor<T> out(Shape{c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h; ++i)
      std::copy_n(&image.at(ch, y0 + i, x0), w, &out.at(ch, i, 0));
  return out;
}

template <typename T>
Tensor<T> window_zero(const Tensor<T>& image, int y0, int x0, int h, int w) {
  require_chw(image, "window_zero");
  DKN_CHECK(h >= 0 && w >= 0, "negative window extent");
  const int c = image.dim(0), ih = image.dim(1), iw = image.dim(2);
  Tensor<T> out(Shape{c, h, w});
  const int xa = std::clamp(-x0, 0, w), xb = std::clamp(iw - x0, 0, w);
  if (xa >= xb) return out;
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h; ++i) {
      const int y = y0 + i;
      if (y < 0 || y >= ih) continue;
      std::copy_n(&image.at(ch, y, x0 + xa), xb - xa, &out.at(ch, i, xa));
    }
  return out;
}

template <typename T>
Tensor<T> replicate_channels(const Tensor<T>& image, int channels) {
  require_chw(image, "replicate_channels");
  if (image.dim(0) == channels) return image;
  DKN_CHECK(image.dim(0) == 1, "cannot replicate ", image.dim(0),
            " channels to ", channels);
  const std::size_t plane = image.size();
  Tensor<T> out(Shape{channels, image.dim(1), image.dim(2)});
  for (int ch = 0; ch < channels; ++ch)
    std::copy_n(image.data(), plane, out.data() + ch * plane);
  return out;
}

#define DKN_INSTANTIATE(T)                                                   \
  template Tensor<T> pixel_unshuffle(const Tensor<T>&, int);                 \
  template Tensor<T> pixel_shuffle(const Tensor<T>&, int);                   \
  template Tensor<T> shift_image(const Tensor<T>&, int, int);                \
  template std::vector<Tensor<T>> split_phases(const Tensor<T>&, int);       \
  template Tensor<T> stitch_phases(const std::vector<Tensor<T>>&, int);      \
  template Tensor<T> pad_zero(const Tensor<T>&, int);                        \
  template Tensor<T> pad_reflect_bottom_right(const Tensor<T>&, int, int);   \
  template Tensor<T> crop(const Tensor<T>&, int, int, int, int);             \
  template Tensor<T> window_zero(const Tensor<T>&, int, int, int, int);      \
  template Tensor<T> replicate_channels(const Tensor<T>&, int);

DKN_INSTANTIATE(float)
DKN_INSTANTIATE(double)
#undef DKN_INSTANTIATE

}  // namespace dkn
