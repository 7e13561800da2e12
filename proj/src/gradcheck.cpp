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

#include "dkn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include "dkn/filtering.hpp"
#include "dkn/ops.hpp"

namespace dkn {
namespace {

std::vector<std::size_t> pick(std::size_t n, std::size_t max, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (max == 0 || max >= n) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void record(GradCheckResult& r, double analytic, double numeric,
            const std::string& where, double floor) {
  const double abs_err = std::abs(analytic - numeric);
  const double rel =
      abs_err / std::max({std::abs(analytic), std::abs(numeric), floor});
  ++r.checked;
  r.max_abs_error = std::max(r.max_abs_error, abs_err);
  if (rel > r.max_rel_error || r.worst.empty()) {
    r.max_rel_error = rel;
    r.worst = detail::concat(where, ": analytic ", analytic, ", numeric ",
                             numeric);
  }
}

// Central difference of f around x0, where f(delta) evaluates at x0 + delta
// and f0 = f(0).
double numeric_derivative(const std::function<double(double)>& f, double f0,
                          const GradCheckOptions& o, bool& refined) {
  refined = false;
  double h = o.step;
  while (true) {
    const double fp = f(h), fm = f(-h);
    const double central = (fp - fm) / (2 * h);
    if (!o.refine_kinks || h / 10 < o.min_step) return central;
    const double fwd = (fp - f0) / h, bwd = (f0 - fm) / h;
    const double scale = std::max({std::abs(fwd), std::abs(bwd), o.floor});
    const double roundoff = 8 * std::numeric_limits<double>::epsilon() *
                            (std::abs(f0) + 1) / h;
    if (std::abs(fwd - bwd) <= 1e-4 * scale + roundoff) return central;
    refined = true;
    h /= 10;
  }
}

}  // namespace

GradCheckResult check_gradients(const ScalarFn& fn,
                                const std::vector<TensorD>& inputs,
                                const GradCheckOptions& o) {
  auto eval = [&](const std::vector<TensorD>& xs) {
    Graph<double> g(false);
    std::vector<Var<double>> vars;
    for (const TensorD& x : xs) vars.push_back(g.input(x, false));
    const Var<double> y = fn(g, vars);
    DKN_CHECK(y.value().size() == 1, "gradient check needs a scalar function");
    return y.value()[0];
  };
  Graph<double> g;
  std::vector<Var<double>> vars;
  for (const TensorD& x : inputs) vars.push_back(g.input(x, true));
  const Var<double> y = fn(g, vars);
  g.backward(y);

  GradCheckResult r;
  std::mt19937_64 rng(o.seed);
  std::vector<TensorD> xs = inputs;
  const double f0 = eval(xs);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const TensorD& grad = vars[k].grad();
    for (std::size_t i : pick(inputs[k].size(), o.max_per_input, rng)) {
      const double analytic = grad.empty() ? 0.0 : grad[i];
      const double x0 = xs[k][i];
      bool refined = false;
      const double numeric = numeric_derivative(
          [&](double d) {
            xs[k][i] = x0 + d;
            const double f = eval(xs);
            xs[k][i] = x0;
            return f;
          },
          f0, o, refined);
      r.refined += refined;
      record(r, analytic, numeric, detail::concat("input ", k, "[", i, "]"),
             o.floor);
    }
  }
  return r;
}

GradCheckResult check_parameter_gradients(
    const std::function<Var<double>(Graph<double>&)>& fn,
    const std::vector<Parameter<double>*>& params, const GradCheckOptions& o) {
  auto eval = [&] {
    Graph<double> g(false);
    const Var<double> y = fn(g);
    DKN_CHECK(y.value().size() == 1, "gradient check needs a scalar function");
    return y.value()[0];
  };
  for (Parameter<double>* p : params) p->zero_grad();
  {
    Graph<double> g;
    g.backward(fn(g));
  }
  GradCheckResult r;
  std::mt19937_64 rng(o.seed);
  const double f0 = eval();
  for (Parameter<double>* p : params) {
    for (std::size_t i : pick(p->value.size(), o.max_per_input, rng)) {
      const double x0 = p->value[i];
      bool refined = false;
      const double numeric = numeric_derivative(
          [&](double d) {
            p->value[i] = x0 + d;
            const double f = eval();
            p->value[i] = x0;
            return f;
          },
          f0, o, refined);
      r.refined += refined;
      record(r, p->grad[i], numeric, detail::concat(p->name, "[", i, "]"),
             o.floor);
    }
  }
  return r;
}

namespace {

TensorD uniform(const Shape& shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  TensorD t(shape);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// Magnitude in [lo, hi] with a random sign.
TensorD away_from_zero(const Shape& shape, std::mt19937_64& rng, double lo,
                       double hi) {
  TensorD t = uniform(shape, rng, lo, hi);
  std::bernoulli_distribution flip(0.5);
  for (double& v : t.values())
    if (flip(rng)) v = -v;
  return t;
}

// Integer part in [-span, span), fractional part in [0.05, 0.95].
TensorD off_grid(const Shape& shape, std::mt19937_64& rng, int span) {
  std::uniform_int_distribution<int> whole(-span, span - 1);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  TensorD t(shape);
  for (double& v : t.values()) v = whole(rng) + frac(rng);
  return t;
}

// Contracts an arbitrary output with fixed random weights.
Var<double> project(Var<double> y, const TensorD& r) {
  return sum(mul(y, y.graph().constant(r)));
}

}  // namespace

std::vector<NamedGradCheck> check_primitive_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<NamedGradCheck> out;
  auto run = [&](std::string name, const ScalarFn& fn,
                 std::vector<TensorD> inputs) {
    // Operands avoid kinks, so plain central differences at the default
    // step are the oracle.
    GradCheckOptions o;
    o.refine_kinks = false;
    out.push_back({std::move(name), check_gradients(fn, inputs, o)});
  };

  {
    const TensorD r1 = uniform({4, 6, 6}, rng, -1, 1);
    run("conv2d stride 1 pad 1",
        [r1](Graph<double>&, const std::vector<Var<double>>& v) {
          return project(conv2d(v[0], v[1], v[2], 1, 1), r1);
        },
        {uniform({3, 6, 6}, rng, -1, 1), uniform({4, 3, 3, 3}, rng, -1, 1),
         uniform({4}, rng, -1, 1)});
    const TensorD r2 = uniform({2, 3, 3}, rng, -1, 1);
    run("conv2d stride 2",
        [r2](Graph<double>&, const std::vector<Var<double>>& v) {
          return project(conv2d(v[0], v[1], v[2], 2, 0), r2);
        },
        {uniform({3, 7, 7}, rng, -1, 1), uniform({2, 3, 3, 3}, rng, -1, 1),
         uniform({2}, rng, -1, 1)});
  }
  {
    const TensorD r = uniform({2, 4, 4}, rng, -1, 1);
    run("relu",
        [r](Graph<double>&, const std::vector<Var<double>>& v) {
          return project(relu(v[0]), r);
        },
        {away_from_zero({2, 4, 4}, rng, 0.05, 1.0)});
    run("sigmoid",
        [r](Graph<double>&, const std::vector<Var<double>>& v) {
          return project(sigmoid(v[0]), r);
        },
        {uniform({2, 4, 4}, rng, -3, 3)});
    run("mul",
        [r](Graph<double>&, const std::vector<Var<double>>& v) {
          return project(mul(v[0], v[1]), r);
        },
        {uniform({2, 4, 4}, rng, -1, 1), uniform({2, 4, 4}, rng, -1, 1)});
    run("add",
        [r](Graph<double>&, const std::vector<Var<double>>& v) {
          return project(add(v[0], v[1]), r);
        },
        {uniform({2, 4, 4}, rng, -1, 1), uniform({2, 4, 4}, rng, -1, 1)});
    run("sum",
        [](Graph<double>&, const std::vector<Var<double>>& v) {
          return sum(v[0]);
        },
        {uniform({2, 4, 4}, rng, -1, 1)});
  }
  for (NormMode mode : {NormMode::kTrain, NormMode::kEval}) {
    const TensorD r = uniform({3, 5, 5}, rng, -1, 1);
    auto stats = std::make_shared<BatchNormStats<double>>(3);
    stats->running_mean = uniform({3}, rng, -0.5, 0.5);
    stats->running_var = uniform({3}, rng, 0.5, 2.0);
    run(mode == NormMode::kTrain ? "batchnorm (batch statistics)"
                                 : "batchnorm (running statistics)",
        [r, stats, mode](Graph<double>&, const std::vector<Var<double>>& v) {
          // Evaluations must not drift the statistics they depend on.
          BatchNormStats<double> s = *stats;
          return project(batchnorm(v[0], v[1], v[2], s, mode), r);
        },
        {uniform({3, 5, 5}, rng, -2, 2), uniform({3}, rng, 0.5, 1.5),
         uniform({3}, rng, -0.5, 0.5)});
  }
  {
    const TensorD r = uniform({9, 3, 3}, rng, -1, 1);
    run("channel mean subtraction",
        [r](Graph<double>&, const std::vector<Var<double>>& v) {
          return project(channel_mean_subtract(v[0]), r);
        },
        {uniform({9, 3, 3}, rng, -1, 1)});
    run("channel L1 normalization",
        [r](Graph<double>&, const std::vector<Var<double>>& v) {
          return project(channel_l1_normalize(v[0]), r);
        },
        {away_from_zero({9, 3, 3}, rng, 0.05, 1.0)});
  }
  {
    const TensorD rs = uniform({2, 8, 8}, rng, -1, 1);
    run("pixel shuffle",
        [rs](Graph<double>&, const std::vector<Var<double>>& v) {
          return project(pixel_shuffle(v[0], 4), rs);
        },
        {uniform({32, 2, 2}, rng, -1, 1)});
    const TensorD ru = uniform({32, 2, 2}, rng, -1, 1);
    run("pixel unshuffle",
        [ru](Graph<double>&, const std::vector<Var<double>>& v) {
          return project(pixel_unshuffle(v[0], 4), ru);
        },
        {uniform({2, 8, 8}, rng, -1, 1)});
  }
  {
    const TensorD pred = uniform({1, 5, 5}, rng, -1, 1);
    TensorD target = pred;
    const TensorD gap = away_from_zero({1, 5, 5}, rng, 0.05, 0.5);
    for (std::size_t i = 0; i < target.size(); ++i) target[i] += gap[i];
    run("l1 loss",
        [target](Graph<double>&, const std::vector<Var<double>>& v) {
          return l1_loss(v[0], target);
        },
        {pred});
  }
  for (bool residual : {true, false}) {
    for (BorderMode border : {BorderMode::kBorder, BorderMode::kZero}) {
      const SamplerConfig cfg{3, 5, border};
      const FieldGeometry geo{1, 2, 2};
      const TensorD r = uniform({1, 3, 3}, rng, -1, 1);
      run(detail::concat("deformable average (",
                         residual ? "residual" : "plain", ", ",
                         border_mode_name(border), " sampling)"),
          [r, cfg, geo, residual](Graph<double>&,
                                  const std::vector<Var<double>>& v) {
            return project(deformable_average(v[0], v[1], v[2], geo, cfg, residual),
                           r);
          },
          {uniform({1, 8, 9}, rng, -1, 1), uniform({9, 3, 3}, rng, -1, 1),
           off_grid({18, 3, 3}, rng, 2)});
    }
  }
  return out;
}

GradCheckResult check_dkn_stack_gradients(const ModelConfig& config,
                                          std::uint64_t seed,
                                          std::size_t per_tensor,
                                          double step) {
  DKN_CHECK(config.arch == Arch::kDkn, "stack gradient check expects DKN");
  KernelNetwork<double> model(config, seed);
  std::mt19937_64 rng(seed ^ 0x5bd1e995u);
  const int extent = model.config().receptive_field();
  const int half = (extent - 1) / 2;
  const TensorD guidance =
      uniform({config.guidance_channels, extent, extent}, rng, 0, 1);
  const TensorD target = uniform({1, extent, extent}, rng, 0, 1);
  const TensorD gt = uniform({1, 1, 1}, rng, 0, 1);
  const FieldGeometry geo{half, half, 1};

  auto loss = [&](Var<double> g, Var<double> t) {
    const FieldVars<double> f = model.predict(g, t, NormMode::kTrain);
    return l1_loss(deformable_average(t, f.weights, f.offsets, geo,
                                      model.config().sampler(),
                                      model.config().residual),
                   gt);
  };
  GradCheckOptions o;
  o.seed = seed;
  o.step = step;
  GradCheckResult r = check_gradients(
      [&](Graph<double>&, const std::vector<Var<double>>& v) {
        return loss(v[0], v[1]);
      },
      {guidance, target}, [&] {
        GradCheckOptions io = o;
        io.max_per_input = per_tensor * 8;
        return io;
      }());
  o.max_per_input = per_tensor;
  const GradCheckResult p = check_parameter_gradients(
      [&](Graph<double>& g) {
        return loss(g.constant(guidance), g.constant(target));
      },
      model.store().parameters(), o);
  r.checked += p.checked;
  r.refined += p.refined;
  r.max_abs_error = std::max(r.max_abs_error, p.max_abs_error);
  if (p.max_rel_error > r.max_rel_error) {
    r.max_rel_error = p.max_rel_error;
    r.worst = p.worst;
  }
  return r;
}

}  // namespace dkn
