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

#include "dkn/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>

#include "dkn/resample.hpp"

namespace dkn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry {
  int channels, height, width;
  int kh, kw, stride, padding;
  int out_h, out_w;
  int rows() const { return channels * kh * kw; }
  int cols() const { return out_h * out_w; }
  bool is_pointwise() const {
    return kh == 1 && kw == 1 && stride == 1 && padding == 0;
  }
};

// Unfolds one C x H x W image into a (C*kh*kw) x (out_h*out_w) matrix.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* cols) {
  for (int c = 0; c < g.channels; ++c)
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx) {
        T* row = cols + (static_cast<std::size_t>(c * g.kh + ky) * g.kw + kx) *
                            g.cols();
        const T* plane = image + static_cast<std::size_t>(c) * g.height * g.width;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride + ky - g.padding;
          T* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill_n(dst, g.out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.width;
          if (g.stride == 1) {
            const int ix0 = kx - g.padding;
            for (int ox = 0; ox < g.out_w; ++ox) {
              const int ix = ix0 + ox;
              dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : T(0);
            }
          } else {
            for (int ox = 0; ox < g.out_w; ++ox) {
              const int ix = ox * g.stride + kx - g.padding;
              dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : T(0);
            }
          }
        }
      }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* image) {
  for (int c = 0; c < g.channels; ++c)
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx) {
        const T* row = cols + (static_cast<std::size_t>(c * g.kh + ky) * g.kw +
                               kx) * g.cols();
        T* plane = image + static_cast<std::size_t>(c) * g.height * g.width;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride + ky - g.padding;
          if (iy < 0 || iy >= g.height) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * g.width;
          const T* src = row + static_cast<std::size_t>(oy) * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride + kx - g.padding;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
}

template <typename T>
bool any_requires_grad(std::initializer_list<Var<T>> vars) {
  for (const Var<T>& v : vars)
    if (v.requires_grad()) return true;
  return false;
}

template <typename T>
void require_same_graph(const Var<T>& a, const Var<T>& b, const char* op) {
  DKN_CHECK(a.valid() && b.valid() && &a.graph() == &b.graph(), op,
            ": operands belong to different graphs");
}

// Splits a rank-3 (C x H x W) or rank-4 (N x C x H x W) shape.
struct BatchedShape {
  int n, c, h, w;
};

BatchedShape batched(const Shape& s, const char* op) {
  DKN_CHECK(s.size() == 3 || s.size() == 4, op,
            " expects C x H x W or N x C x H x W input, got ", shape_str(s));
  if (s.size() == 3) return {1, s[0], s[1], s[2]};
  return {s[0], s[1], s[2], s[3]};
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> weight, Var<T> bias, int stride,
              int padding) {
  require_same_graph(input, weight, "conv2d");
  require_same_graph(input, bias, "conv2d");
  const Tensor<T>& x = input.value();
  const Tensor<T>& w = weight.value();
  const Tensor<T>& b = bias.value();
  const BatchedShape in = batched(x.shape(), "conv2d");
  DKN_CHECK(w.rank() == 4, "conv2d weight must be C_out x C_in x kh x kw, got ",
            shape_str(w.shape()));
  DKN_CHECK(stride >= 1, "conv2d stride must be positive, got ", stride);
  DKN_CHECK(padding >= 0, "conv2d padding must be non-negative, got ", padding);
  const int cout = w.dim(0);
  DKN_CHECK(w.dim(1) == in.c, "conv2d channel mismatch: input has ", in.c,
            " channels but weight expects C_in = ", w.dim(1));
  DKN_CHECK(b.rank() == 1 && b.dim(0) == cout, "conv2d bias length ",
            b.size(), " does not match C_out = ", cout);
  ConvGeometry g{in.c, in.h, in.w, w.dim(2), w.dim(3), stride, padding, 0, 0};
  DKN_CHECK(g.kh <= in.h + 2 * padding, "conv2d kernel height ", g.kh,
            " exceeds padded input height ", in.h + 2 * padding);
  DKN_CHECK(g.kw <= in.w + 2 * padding, "conv2d kernel width ", g.kw,
            " exceeds padded input width ", in.w + 2 * padding);
  g.out_h = conv_out_extent(in.h, g.kh, stride, padding);
  g.out_w = conv_out_extent(in.w, g.kw, stride, padding);

  const bool rg = input.graph().grad_enabled() &&
                  any_requires_grad<T>({input, weight, bias});
  const bool pointwise = g.is_pointwise();
  const std::size_t in_plane = static_cast<std::size_t>(in.c) * in.h * in.w;
  const std::size_t col_size = static_cast<std::size_t>(g.rows()) * g.cols();
  const std::size_t out_plane = static_cast<std::size_t>(cout) * g.cols();

  Shape out_shape = x.rank() == 3 ? Shape{cout, g.out_h, g.out_w}
                                  : Shape{in.n, cout, g.out_h, g.out_w};
  Tensor<T> out(out_shape);
  // Unfolded inputs are kept for the weight gradient.
  auto saved_cols = std::make_shared<AlignedVector<T>>();
  AlignedVector<T> scratch;
  if (!pointwise) {
    if (rg && weight.requires_grad()) {
      saved_cols->resize(col_size * in.n);
    } else {
      scratch.resize(col_size);
    }
  }
  ConstMatMap<T> wmat(w.data(), cout, g.rows());
  for (int n = 0; n < in.n; ++n) {
    const T* cols_ptr = x.data() + n * in_plane;
    if (!pointwise) {
      T* dst = saved_cols->empty() ? scratch.data()
                                   : saved_cols->data() + n * col_size;
      im2col(x.data() + n * in_plane, g, dst);
      cols_ptr = dst;
    }
    MatMap<T> omat(out.data() + n * out_plane, cout, g.cols());
    omat.noalias() = wmat * ConstMatMap<T>(cols_ptr, g.rows(), g.cols());
    for (int o = 0; o < cout; ++o) omat.row(o).array() += b[o];
  }

  return input.graph().record(
      std::move(out), rg,
      [input, weight, bias, g, in, cout, pointwise, saved_cols, in_plane,
       col_size, out_plane](const Tensor<T>& dout) mutable {
        const Tensor<T>& w = weight.value();
        ConstMatMap<T> wmat(w.data(), cout, g.rows());
        const T* xdata = input.value().data();
        AlignedVector<T> dcols;
        for (int n = 0; n < in.n; ++n) {
          ConstMatMap<T> dmat(dout.data() + n * out_plane, cout, g.cols());
          if (bias.requires_grad()) {
            Tensor<T>& db = bias.graph().grad_accumulator(bias);
            for (int o = 0; o < cout; ++o) db[o] += dmat.row(o).sum();
          }
          if (weight.requires_grad()) {
            Tensor<T>& dw = weight.graph().grad_accumulator(weight);
            const T* cols_ptr = pointwise ? xdata + n * in_plane
                                          : saved_cols->data() + n * col_size;
            MatMap<T>(dw.data(), cout, g.rows()).noalias() +=
                dmat * ConstMatMap<T>(cols_ptr, g.rows(), g.cols()).transpose();
          }
          if (input.requires_grad()) {
            Tensor<T>& dx = input.graph().grad_accumulator(input);
            if (pointwise) {
              MatMap<T>(dx.data() + n * in_plane, g.rows(), g.cols())
                  .noalias() += wmat.transpose() * dmat;
            } else {
              dcols.resize(col_size);
              MatMap<T>(dcols.data(), g.rows(), g.cols()).noalias() =
                  wmat.transpose() * dmat;
              col2im_add(dcols.data(), g, dx.data() + n * in_plane);
            }
          }
        }
      },
      "conv2d");
}

template <typename T>
Var<T> relu(Var<T> x) {
  const Tensor<T>& v = x.value();
  Tensor<T> out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > T(0) ? v[i] : T(0);
  return x.graph().record(
      std::move(out), x.requires_grad(),
      [x](const Tensor<T>& g) mutable {
        const Tensor<T>& v = x.value();
        Tensor<T>& dx = x.graph().grad_accumulator(x);
        for (std::size_t i = 0; i < v.size(); ++i)
          if (v[i] > T(0)) dx[i] += g[i];
      },
      "relu");
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  const Tensor<T>& v = x.value();
  auto out = std::make_shared<Tensor<T>>(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const T a = v[i];
    if (a >= T(0)) {
      (*out)[i] = T(1) / (T(1) + std::exp(-a));
    } else {
      const T e = std::exp(a);
      (*out)[i] = e / (T(1) + e);
    }
  }
  Tensor<T> result = *out;
  return x.graph().record(
      std::move(result), x.requires_grad(),
      [x, out](const Tensor<T>& g) mutable {
        Tensor<T>& dx = x.graph().grad_accumulator(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const T s = (*out)[i];
          dx[i] += g[i] * s * (T(1) - s);
        }
      },
      "sigmoid");
}

template <typename T>
Var<T> batchnorm(Var<T> x, Var<T> gamma, Var<T> beta, BatchNormStats<T>& stats,
                 NormMode mode, T momentum, T epsilon) {
  require_same_graph(x, gamma, "batchnorm");
  require_same_graph(x, beta, "batchnorm");
  const Tensor<T>& v = x.value();
  const BatchedShape s = batched(v.shape(), "batchnorm");
  DKN_CHECK(gamma.value().size() == static_cast<std::size_t>(s.c) &&
                beta.value().size() == static_cast<std::size_t>(s.c),
            "batchnorm: gamma/beta length must equal channel count ", s.c);
  DKN_CHECK(stats.running_mean.size() == static_cast<std::size_t>(s.c),
            "batchnorm: running statistics sized for ",
            stats.running_mean.size(), " channels, input has ", s.c);
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  const std::size_t count = plane * s.n;
  auto at = [s, plane](int n, int c) {
    return (static_cast<std::size_t>(n) * s.c + c) * plane;
  };

  auto mean = std::make_shared<std::vector<T>>(s.c);
  auto inv_std = std::make_shared<std::vector<T>>(s.c);
  if (mode == NormMode::kTrain) {
    for (int c = 0; c < s.c; ++c) {
      T acc = 0;
      for (int n = 0; n < s.n; ++n)
        for (std::size_t i = 0; i < plane; ++i) acc += v[at(n, c) + i];
      const T m = acc / static_cast<T>(count);
      T sq = 0;
      for (int n = 0; n < s.n; ++n)
        for (std::size_t i = 0; i < plane; ++i) {
          const T d = v[at(n, c) + i] - m;
          sq += d * d;
        }
      const T var = sq / static_cast<T>(count);
      (*mean)[c] = m;
      (*inv_std)[c] = T(1) / std::sqrt(var + epsilon);
      const T unbiased = count > 1 ? sq / static_cast<T>(count - 1) : var;
      stats.running_mean[c] =
          (T(1) - momentum) * stats.running_mean[c] + momentum * m;
      stats.running_var[c] =
          (T(1) - momentum) * stats.running_var[c] + momentum * unbiased;
    }
  } else {
    for (int c = 0; c < s.c; ++c) {
      (*mean)[c] = stats.running_mean[c];
      (*inv_std)[c] = T(1) / std::sqrt(stats.running_var[c] + epsilon);
    }
  }

  const Tensor<T>& gv = gamma.value();
  const Tensor<T>& bv = beta.value();
  Tensor<T> out(v.shape());
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T m = (*mean)[c], is = (*inv_std)[c];
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t k = at(n, c) + i;
        out[k] = gv[c] * (v[k] - m) * is + bv[c];
      }
    }

  const bool train = mode == NormMode::kTrain;
  return x.graph().record(
      std::move(out), any_requires_grad<T>({x, gamma, beta}),
      [x, gamma, beta, s, plane, count, mean, inv_std, train,
       at](const Tensor<T>& g) mutable {
        const Tensor<T>& v = x.value();
        const Tensor<T>& gv = gamma.value();
        for (int c = 0; c < s.c; ++c) {
          const T m = (*mean)[c], is = (*inv_std)[c];
          T sum_g = 0, sum_gx = 0;
          for (int n = 0; n < s.n; ++n)
            for (std::size_t i = 0; i < plane; ++i) {
              const std::size_t k = at(n, c) + i;
              sum_g += g[k];
              sum_gx += g[k] * (v[k] - m) * is;
            }
          if (gamma.requires_grad())
            gamma.graph().grad_accumulator(gamma)[c] += sum_gx;
          if (beta.requires_grad())
            beta.graph().grad_accumulator(beta)[c] += sum_g;
          if (!x.requires_grad()) continue;
          Tensor<T>& dx = x.graph().grad_accumulator(x);
          const T scale = gv[c] * is;
          if (train) {
            const T inv_n = T(1) / static_cast<T>(count);
            for (int n = 0; n < s.n; ++n)
              for (std::size_t i = 0; i < plane; ++i) {
                const std::size_t k = at(n, c) + i;
                const T xhat = (v[k] - m) * is;
                dx[k] += scale * (g[k] - inv_n * sum_g - xhat * inv_n * sum_gx);
              }
          } else {
            for (int n = 0; n < s.n; ++n)
              for (std::size_t i = 0; i < plane; ++i) {
                const std::size_t k = at(n, c) + i;
                dx[k] += scale * g[k];
              }
          }
        }
      },
      "batchnorm");
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "mul");
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  DKN_CHECK(av.shape() == bv.shape(), "mul shape mismatch: ",
            shape_str(av.shape()), " vs ", shape_str(bv.shape()));
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return a.graph().record(
      std::move(out), any_requires_grad<T>({a, b}),
      [a, b](const Tensor<T>& g) mutable {
        const Tensor<T>& av = a.value();
        const Tensor<T>& bv = b.value();
        if (a.requires_grad()) {
          Tensor<T>& da = a.graph().grad_accumulator(a);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
        }
        if (b.requires_grad()) {
          Tensor<T>& db = b.graph().grad_accumulator(b);
          for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
        }
      },
      "mul");
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "add");
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  DKN_CHECK(av.shape() == bv.shape(), "add shape mismatch: ",
            shape_str(av.shape()), " vs ", shape_str(bv.shape()));
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return a.graph().record(
      std::move(out), any_requires_grad<T>({a, b}),
      [a, b](const Tensor<T>& g) mutable {
        if (a.requires_grad()) a.graph().grad_accumulator(a) += g;
        if (b.requires_grad()) b.graph().grad_accumulator(b) += g;
      },
      "add");
}

template <typename T>
Var<T> sum(Var<T> x) {
  const Tensor<T>& v = x.value();
  T acc = 0;
  for (T e : v.values()) acc += e;
  return x.graph().record(
      Tensor<T>(Shape{1}, acc), x.requires_grad(),
      [x](const Tensor<T>& g) mutable {
        Tensor<T>& dx = x.graph().grad_accumulator(x);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[0];
      },
      "sum");
}

template <typename T>
Var<T> channel_mean_subtract(Var<T> x) {
  const Tensor<T>& v = x.value();
  DKN_CHECK(v.rank() == 3, "channel_mean_subtract expects C x H x W, got ",
            shape_str(v.shape()));
  const int c = v.dim(0);
  const std::size_t plane = static_cast<std::size_t>(v.dim(1)) * v.dim(2);
  Tensor<T> out(v.shape());
  for (std::size_t p = 0; p < plane; ++p) {
    T m = 0;
    for (int k = 0; k < c; ++k) m += v[k * plane + p];
    m /= static_cast<T>(c);
    for (int k = 0; k < c; ++k) out[k * plane + p] = v[k * plane + p] - m;
  }
  return x.graph().record(
      std::move(out), x.requires_grad(),
      [x, c, plane](const Tensor<T>& g) mutable {
        Tensor<T>& dx = x.graph().grad_accumulator(x);
        for (std::size_t p = 0; p < plane; ++p) {
          T m = 0;
          for (int k = 0; k < c; ++k) m += g[k * plane + p];
          m /= static_cast<T>(c);
          for (int k = 0; k < c; ++k) dx[k * plane + p] += g[k * plane + p] - m;
        }
      },
      "channel_mean_subtract");
}

template <typename T>
Var<T> channel_l1_normalize(Var<T> x) {
  const Tensor<T>& v = x.value();
  DKN_CHECK(v.rank() == 3, "channel_l1_normalize expects C x H x W, got ",
            shape_str(v.shape()));
  const int c = v.dim(0);
  const std::size_t plane = static_cast<std::size_t>(v.dim(1)) * v.dim(2);
  auto norms = std::make_shared<std::vector<T>>(plane);
  Tensor<T> out(v.shape());
  for (std::size_t p = 0; p < plane; ++p) {
    T s = 0;
    for (int k = 0; k < c; ++k) s += std::abs(v[k * plane + p]);
    if (s == T(0)) {
      throw NumericalError("channel_l1_normalize: zero L1 norm at pixel " +
                           std::to_string(p));
    }
    (*norms)[p] = s;
    for (int k = 0; k < c; ++k) out[k * plane + p] = v[k * plane + p] / s;
  }
  return x.graph().record(
      std::move(out), x.requires_grad(),
      [x, c, plane, norms](const Tensor<T>& g) mutable {
        const Tensor<T>& v = x.value();
        Tensor<T>& dx = x.graph().grad_accumulator(x);
        for (std::size_t p = 0; p < plane; ++p) {
          const T s = (*norms)[p];
          T dot = 0;
          for (int k = 0; k < c; ++k) dot += g[k * plane + p] * v[k * plane + p];
          for (int k = 0; k < c; ++k) {
            const T xi = v[k * plane + p];
            const T sign = xi > T(0) ? T(1) : (xi < T(0) ? T(-1) : T(0));
            dx[k * plane + p] += g[k * plane + p] / s - dot * sign / (s * s);
          }
        }
      },
      "channel_l1_normalize");
}

template <typename T>
Var<T> pixel_shuffle(Var<T> x, int r) {
  return x.graph().record(
      pixel_shuffle(x.value(), r), x.requires_grad(),
      [x, r](const Tensor<T>& g) mutable {
        x.graph().grad_accumulator(x) += pixel_unshuffle(g, r);
      },
      "pixel_shuffle");
}

template <typename T>
Var<T> pixel_unshuffle(Var<T> x, int r) {
  return x.graph().record(
      pixel_unshuffle(x.value(), r), x.requires_grad(),
      [x, r](const Tensor<T>& g) mutable {
        x.graph().grad_accumulator(x) += pixel_shuffle(g, r);
      },
      "pixel_unshuffle");
}

template <typename T>
Var<T> l1_loss(Var<T> pred, const Tensor<T>& target) {
  const Tensor<T>& p = pred.value();
  DKN_CHECK(p.shape() == target.shape(), "l1_loss shape mismatch: ",
            shape_str(p.shape()), " vs ", shape_str(target.shape()));
  auto sign = std::make_shared<std::vector<T>>(p.size());
  T acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T d = p[i] - target[i];
    acc += std::abs(d);
    (*sign)[i] = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
  }
  return pred.graph().record(
      Tensor<T>(Shape{1}, acc), pred.requires_grad(),
      [pred, sign](const Tensor<T>& g) mutable {
        Tensor<T>& dp = pred.graph().grad_accumulator(pred);
        for (std::size_t i = 0; i < dp.size(); ++i) dp[i] += g[0] * (*sign)[i];
      },
      "l1_loss");
}

#define DKN_INSTANTIATE(T)                                                    \
  template Var<T> conv2d(Var<T>, Var<T>, Var<T>, int, int);                   \
  template Var<T> relu(Var<T>);                                               \
  template Var<T> sigmoid(Var<T>);                                            \
  template Var<T> batchnorm(Var<T>, Var<T>, Var<T>, BatchNormStats<T>&,       \
                            NormMode, T, T);                                  \
  template Var<T> mul(Var<T>, Var<T>);                                        \
  template Var<T> add(Var<T>, Var<T>);                                        \
  template Var<T> sum(Var<T>);                                                \
  template Var<T> channel_mean_subtract(Var<T>);                              \
  template Var<T> channel_l1_normalize(Var<T>);                               \
  template Var<T> pixel_shuffle(Var<T>, int);                                 \
  template Var<T> pixel_unshuffle(Var<T>, int);                               \
  template Var<T> l1_loss(Var<T>, const Tensor<T>&);

DKN_INSTANTIATE(float)
DKN_INSTANTIATE(double)
#undef DKN_INSTANTIATE

}  // namespace dkn
