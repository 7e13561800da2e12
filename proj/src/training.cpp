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

#include "dkn/training.hpp"

#include <cmath>
#include <random>

#include "dkn/filtering.hpp"
#include "dkn/ops.hpp"
#include "dkn/resample.hpp"

namespace dkn {

template <typename T>
void Adam::step_impl(const std::vector<Parameter<T>*>& params, double lr) {
  if (m_.empty()) {
    for (const Parameter<T>* p : params) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
  DKN_CHECK(m_.size() == params.size(), "optimizer state tracks ", m_.size(),
            " parameters, got ", params.size());
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<T>& p = *params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    DKN_CHECK(m.size() == p.value.size(), "optimizer state for ", p.name,
              " has the wrong size");
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = static_cast<double>(p.grad[i]);
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mh = m[i] / c1, vh = v[i] / c2;
      p.value[i] = static_cast<T>(p.value[i] - lr * mh / (std::sqrt(vh) + config_.epsilon));
    }
  }
}

void Adam::step(const std::vector<Parameter<float>*>& params, double lr) {
  step_impl(params, lr);
}
void Adam::step(const std::vector<Parameter<double>*>& params, double lr) {
  step_impl(params, lr);
}

void Adam::restore(std::int64_t t, std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v) {
  DKN_CHECK(m.size() == v.size(), "moment tables differ in length");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

double learning_rate(std::int64_t iteration, double base, std::int64_t every,
                     double factor) {
  if (every <= 0) return base;
  double lr = base;
  for (std::int64_t n = iteration / every; n > 0; --n) lr /= factor;
  return lr;
}

std::int64_t TrainConfig::resolved_decay_every() const {
  if (decay_every > 0) return decay_every;
  return std::max<std::int64_t>(1, iterations / 4);
}

int default_crop_outputs(Arch arch) { return arch == Arch::kDkn ? 24 : 16; }

void TrainConfig::validate() const {
  DKN_CHECK(iterations >= 0, "iterations must be non-negative, got ", iterations);
  DKN_CHECK(lr > 0, "learning rate must be positive, got ", lr);
  DKN_CHECK(decay_factor > 0, "decay factor must be positive");
  DKN_CHECK(crop_outputs >= 0, "crop size must be non-negative");
  DKN_CHECK(log_every >= 1, "log interval must be positive");
}

namespace {

// Ground truth at the crop's output pixels.
TensorF gather(const TensorF& image, int top, int left, int n, int stride) {
  TensorF out(Shape{1, n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.at(0, i, j) = image.at(0, top + stride * i, left + stride * j);
  return out;
}

struct CropPlan {
  int outputs;  // per side
  int stride;   // output pixel spacing
  int span;     // image extent covered by the outputs
  int align;    // top/left granularity
};

CropPlan crop_plan(const ModelConfig& c, int crop_outputs) {
  if (c.arch == Arch::kDkn) {
    const int s = stack_stride(c.tower(1));
    return {crop_outputs, s, s * (crop_outputs - 1) + 1, 1};
  }
  const int r = c.resample_stride;
  return {r * crop_outputs, 1, r * crop_outputs, r};
}

// One of the 8 symmetries of the square: bit 0 mirrors columns, bit 1
// mirrors rows, bit 2 transposes (applied last).
TensorF dihedral(const TensorF& x, int code) {
  const int ch = x.dim(0), h = x.dim(1), w = x.dim(2);
  const bool transpose = code & 4;
  TensorF out(transpose ? Shape{ch, w, h} : Shape{ch, h, w});
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        const int sy = (code & 2) ? h - 1 - y : y;
        const int sx = (code & 1) ? w - 1 - xx : xx;
        if (transpose) {
          out.at(c, xx, y) = x.at(c, sy, sx);
        } else {
          out.at(c, y, xx) = x.at(c, sy, sx);
        }
      }
  return out;
}

}  // namespace

double train_step_gradients(KernelNetwork<float>& model, const SamplePair& pair,
                            int top, int left, int crop_outputs) {
  const ModelConfig& c = model.config();
  const CropPlan plan = crop_plan(c, crop_outputs);
  Graph<float> g;
  Var<float> target = g.constant(pair.target);
  FieldVars<float> field;
  if (c.arch == Arch::kDkn) {
    const int half = (c.receptive_field() - 1) / 2;
    const int extent = plan.span + 2 * half;
    field = model.predict(
        g.constant(window_zero(pair.guidance, top - half, left - half, extent, extent)),
        g.constant(window_zero(pair.target, top - half, left - half, extent, extent)),
        NormMode::kTrain);
  } else {
    const int pad = c.resample_stride * (c.receptive_field() - 1) / 2;
    const int extent = plan.span + 2 * pad;
    field = model.predict(
        g.constant(model.prepare_input(
            window_zero(pair.guidance, top - pad, left - pad, extent, extent))),
        g.constant(model.prepare_input(
            window_zero(pair.target, top - pad, left - pad, extent, extent))),
        NormMode::kTrain);
  }
  Var<float> out = deformable_average(target, field.weights, field.offsets,
                                      FieldGeometry{top, left, plan.stride},
                                      c.sampler(), c.residual);
  Var<float> loss = l1_loss(
      out, gather(pair.ground_truth, top, left, plan.outputs, plan.stride));
  g.backward(loss);
  return loss.value()[0];
}

TrainResult train(KernelNetwork<float>& model,
                  const std::vector<SamplePair>& pairs,
                  const TrainConfig& config, Adam& optimizer,
                  const std::function<void(const TrainLog&)>& on_log) {
  config.validate();
  DKN_CHECK(!pairs.empty() || config.iterations == 0,
            "training needs at least one pair");
  const ModelConfig& c = model.config();
  const int crop = config.crop_outputs > 0 ? config.crop_outputs
                                           : default_crop_outputs(c.arch);
  const CropPlan plan = crop_plan(c, crop);
  for (const SamplePair& p : pairs) {
    DKN_CHECK(p.target.dim(1) >= plan.span && p.target.dim(2) >= plan.span,
              "training images of ", p.target.dim(1), "x", p.target.dim(2),
              " are smaller than the ", plan.span, "-pixel crop");
  }
  // Independent of the initialisation stream.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto params = model.store().parameters();
  const std::int64_t every = config.resolved_decay_every();
  const double per_pixel = 1.0 / (static_cast<double>(plan.outputs) * plan.outputs);

  TrainResult r;
  double window_sum = 0;
  int window_n = 0;
  for (std::int64_t it = 0; it < config.iterations; ++it) {
    const SamplePair* chosen = &pairs[std::uniform_int_distribution<std::size_t>(
        0, pairs.size() - 1)(rng)];
    SamplePair augmented;
    if (config.augment) {
      const int code = std::uniform_int_distribution<int>(0, 7)(rng);
      if (code != 0) {
        augmented = {dihedral(chosen->guidance, code), dihedral(chosen->target, code),
                     dihedral(chosen->ground_truth, code), chosen->degradation};
        chosen = &augmented;
      }
    }
    const SamplePair& pair = *chosen;
    const int h = pair.target.dim(1), w = pair.target.dim(2);
    const int top = plan.align * std::uniform_int_distribution<int>(
                                     0, (h - plan.span) / plan.align)(rng);
    const int left = plan.align * std::uniform_int_distribution<int>(
                                      0, (w - plan.span) / plan.align)(rng);
    model.store().zero_grad();
    double loss = 0;
    try {
      loss = train_step_gradients(model, pair, top, left, crop);
    } catch (const NumericalError& e) {
      r.diverged = true;
      r.error = detail::concat("iteration ", it, ": ", e.what());
      break;
    }
    bool finite = std::isfinite(loss);
    for (const Parameter<float>* p : params) finite = finite && p->grad.all_finite();
    if (!finite) {
      r.diverged = true;
      r.error = detail::concat("iteration ", it,
                               ": non-finite loss or gradient (loss = ", loss, ")");
      break;
    }
    const double lr = learning_rate(it, config.lr, every, config.decay_factor);
    optimizer.step(params, lr);
    r.losses.push_back(loss * per_pixel);
    r.iterations_done = it + 1;
    window_sum += loss * per_pixel;
    ++window_n;
    if ((it + 1) % config.log_every == 0 || it + 1 == config.iterations) {
      const TrainLog entry{it + 1, window_sum / window_n, lr};
      r.log.push_back(entry);
      if (on_log) on_log(entry);
      window_sum = 0;
      window_n = 0;
    }
  }
  return r;
}

}  // namespace dkn
