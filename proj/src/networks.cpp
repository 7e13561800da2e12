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

#include "dkn/networks.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string>

#include "dkn/resample.hpp"

namespace dkn {

int stack_output_extent(std::span<const ConvSpec> stack, int in) {
  int e = in;
  for (const ConvSpec& s : stack) {
    DKN_CHECK(e >= s.kernel, "input extent ", in, " too small for the stack");
    e = conv_out_extent(e, s.kernel, s.stride, 0);
  }
  return e;
}

std::vector<Shape> stack_shape_chain(std::span<const ConvSpec> stack,
                                     const Shape& input) {
  DKN_CHECK(input.size() == 3, "shape chain expects C x H x W");
  std::vector<Shape> chain{input};
  Shape cur = input;
  for (const ConvSpec& s : stack) {
    DKN_CHECK(cur[0] == s.in_channels, "layer expects ", s.in_channels,
              " channels, got ", cur[0]);
    DKN_CHECK(cur[1] >= s.kernel && cur[2] >= s.kernel, "extent ",
              shape_str(cur), " too small for a ", s.kernel, "x", s.kernel,
              " layer");
    cur = {s.out_channels, conv_out_extent(cur[1], s.kernel, s.stride, 0),
           conv_out_extent(cur[2], s.kernel, s.stride, 0)};
    chain.push_back(cur);
  }
  return chain;
}

int receptive_field_extent(std::span<const ConvSpec> stack) {
  int r = 1, jump = 1;
  for (const ConvSpec& s : stack) {
    r += (s.kernel - 1) * jump;
    jump *= s.stride;
  }
  return r;
}

int stack_stride(std::span<const ConvSpec> stack) {
  int j = 1;
  for (const ConvSpec& s : stack) j *= s.stride;
  return j;
}

int centered_receptive_field(std::span<const ConvSpec> stack) {
  const int r = receptive_field_extent(stack);
  return r % 2 == 1 ? r : r + 1;
}

std::string_view arch_name(Arch a) { return a == Arch::kDkn ? "dkn" : "fdkn"; }

Arch parse_arch(std::string_view s) {
  if (s == "dkn") return Arch::kDkn;
  if (s == "fdkn") return Arch::kFdkn;
  throw ShapeError("unknown architecture '" + std::string(s) +
                   "' (expected dkn|fdkn)");
}

void ModelConfig::validate() const {
  DKN_CHECK(kernel_size >= 1 && kernel_size % 2 == 1,
            "kernel size k must be odd and positive, got ", kernel_size);
  DKN_CHECK(window >= 1 && window % 2 == 1, "window d must be odd, got ",
            window);
  DKN_CHECK(window >= kernel_size, "window d=", window,
            " must be at least the kernel size k=", kernel_size);
  DKN_CHECK((constraint == KernelConstraint::kMeanSubtract) == residual,
            "residual=", residual, " requires the ",
            residual ? "mean_subtract" : "l1_normalize", " constraint, got ",
            constraint_name(constraint));
  const std::size_t layers = arch == Arch::kDkn ? 7 : 6;
  DKN_CHECK(channels.size() == layers, arch_name(arch), " needs ", layers,
            " tower widths, got ", channels.size());
  for (int c : channels) DKN_CHECK(c > 0, "tower widths must be positive");
  DKN_CHECK(guidance_channels >= 1, "guidance needs at least one channel");
  DKN_CHECK(arch == Arch::kDkn || resample_stride >= 1,
            "resample stride must be positive");
  DKN_CHECK(use_guidance || use_target,
            "at least one of the guidance and target streams must be enabled");
}

int ModelConfig::subpixels() const {
  return arch == Arch::kDkn ? 1 : resample_stride * resample_stride;
}

std::vector<ConvSpec> ModelConfig::tower(int image_channels) const {
  const auto& c = channels;
  if (arch == Arch::kDkn) {
    return {{image_channels, c[0], 7, 1, true}, {c[0], c[1], 2, 2, false},
            {c[1], c[2], 5, 1, true},          {c[2], c[3], 2, 2, false},
            {c[3], c[4], 5, 1, true},          {c[4], c[5], 3, 1, false},
            {c[5], c[6], 3, 1, false}};
  }
  const int in = image_channels * subpixels();
  return {{in, c[0], 3, 1, true},    {c[0], c[1], 3, 1, false},
          {c[1], c[2], 3, 1, true},  {c[2], c[3], 3, 1, false},
          {c[3], c[4], 3, 1, true},  {c[4], c[5], 3, 1, false}};
}

int ModelConfig::receptive_field() const {
  return centered_receptive_field(tower(1));
}

ModelConfig dkn_config() {
  ModelConfig c;
  c.arch = Arch::kDkn;
  c.channels = {32, 32, 64, 64, 128, 128, 128};
  return c;
}

ModelConfig fdkn_config() {
  ModelConfig c;
  c.arch = Arch::kFdkn;
  c.channels = {32, 32, 64, 64, 128, 128};
  return c;
}

namespace {

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ShapeError("model config: " + std::string(key) +
                   " must be true|false, got '" + std::string(v) + "'");
}

int parse_int(std::string_view key, std::string_view v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ShapeError("model config: " + std::string(key) +
                     " must be an integer, got '" + std::string(v) + "'");
  }
  return out;
}

}  // namespace

std::string model_config_to_text(const ModelConfig& c) {
  std::ostringstream os;
  os << "arch=" << arch_name(c.arch) << "\n"
     << "kernel_size=" << c.kernel_size << "\n"
     << "window=" << c.window << "\n"
     << "residual=" << (c.residual ? "true" : "false") << "\n"
     << "constraint=" << constraint_name(c.constraint) << "\n"
     << "channels=";
  for (std::size_t i = 0; i < c.channels.size(); ++i)
    os << (i ? "," : "") << c.channels[i];
  os << "\n"
     << "guidance_channels=" << c.guidance_channels << "\n"
     << "resample_stride=" << c.resample_stride << "\n"
     << "border=" << border_mode_name(c.border) << "\n"
     << "use_guidance=" << (c.use_guidance ? "true" : "false") << "\n"
     << "use_target=" << (c.use_target ? "true" : "false") << "\n"
     << "learn_offsets=" << (c.learn_offsets ? "true" : "false") << "\n";
  return os.str();
}

ModelConfig model_config_from_text(std::string_view text) {
  ModelConfig c;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    DKN_CHECK(eq != std::string::npos, "model config: malformed line '", line,
              "'");
    const std::string key = line.substr(0, eq);
    const std::string v = line.substr(eq + 1);
    if (key == "arch") c.arch = parse_arch(v);
    else if (key == "kernel_size") c.kernel_size = parse_int(key, v);
    else if (key == "window") c.window = parse_int(key, v);
    else if (key == "residual") c.residual = parse_bool(key, v);
    else if (key == "constraint") {
      if (v == "mean_subtract") c.constraint = KernelConstraint::kMeanSubtract;
      else if (v == "l1_normalize") c.constraint = KernelConstraint::kL1Normalize;
      else throw ShapeError("model config: unknown constraint '" + v + "'");
    } else if (key == "channels") {
      c.channels.clear();
      std::istringstream cs(v);
      std::string tok;
      while (std::getline(cs, tok, ',')) c.channels.push_back(parse_int(key, tok));
    } else if (key == "guidance_channels") c.guidance_channels = parse_int(key, v);
    else if (key == "resample_stride") c.resample_stride = parse_int(key, v);
    else if (key == "border") c.border = parse_border_mode(v);
    else if (key == "use_guidance") c.use_guidance = parse_bool(key, v);
    else if (key == "use_target") c.use_target = parse_bool(key, v);
    else if (key == "learn_offsets") c.learn_offsets = parse_bool(key, v);
    else throw ShapeError("model config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

namespace fault {
namespace {
std::atomic<bool> g_broken_mean{false};
}
void set_broken_mean_subtraction(bool broken) { g_broken_mean = broken; }
bool broken_mean_subtraction() { return g_broken_mean; }
}  // namespace fault

namespace {

template <typename T>
Tensor<T> uniform_tensor(const Shape& shape, T bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<T> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(bound * u(rng));
  return t;
}

}  // namespace

template <typename T>
KernelNetwork<T>::KernelNetwork(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  if (config_.use_guidance)
    build_stream(guidance_, "guidance", config_.guidance_channels, rng);
  if (config_.use_target) build_stream(target_, "target", 1, rng);
}

template <typename T>
void KernelNetwork<T>::build_stream(Stream& s, const std::string& prefix,
                                    int image_channels, std::mt19937_64& rng) {
  int bn = 0, i = 0;
  for (const ConvSpec& spec : config_.tower(image_channels)) {
    Layer l;
    l.spec = spec;
    const std::string name = prefix + ".conv" + std::to_string(++i);
    const int fan_in = spec.in_channels * spec.kernel * spec.kernel;
    // He-uniform for the ReLU layers.
    l.weight = &store_.add(
        name + ".weight",
        uniform_tensor<T>({spec.out_channels, spec.in_channels, spec.kernel,
                           spec.kernel},
                          static_cast<T>(std::sqrt(6.0 / fan_in)), rng));
    l.bias = &store_.add(name + ".bias", Tensor<T>(Shape{spec.out_channels}));
    if (spec.batchnorm) {
      const std::string bname = prefix + ".bn" + std::to_string(++bn);
      l.gamma = &store_.add(bname + ".gamma",
                            Tensor<T>(Shape{spec.out_channels}, T(1)));
      l.beta = &store_.add(bname + ".beta", Tensor<T>(Shape{spec.out_channels}));
      l.stats = &store_.add_stats(bname, spec.out_channels);
    }
    s.layers.push_back(l);
  }
  const int feat = config_.channels.back();
  const int sub = config_.subpixels();
  const T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(feat)));
  const int wout = config_.taps() * sub;
  s.weight_w = &store_.add(prefix + ".weight_head.weight",
                           uniform_tensor<T>({wout, feat, 1, 1}, bound, rng));
  s.weight_b = &store_.add(prefix + ".weight_head.bias", Tensor<T>(Shape{wout}));
  if (config_.learn_offsets) {
    const int oout = 2 * config_.taps() * sub;
    // Offsets start a small fraction of a pixel off the regular grid (exact
    // integers sit on the tent kink, where the position gradient is 0).
    // With two streams the target factor starts near 1, so the product is
    // led by the guidance factor.
    const bool target_stream = prefix == "target" && config_.use_guidance;
    s.offset_w = &store_.add(prefix + ".offset_head.weight",
                             uniform_tensor<T>({oout, feat, 1, 1}, bound / 100, rng));
    s.offset_b = &store_.add(prefix + ".offset_head.bias",
                             Tensor<T>(Shape{oout}, T(target_stream ? 1 : 0)));
  }
}

template <typename T>
std::size_t KernelNetwork<T>::feature_parameter_count() const {
  std::size_t n = 0;
  for (const Parameter<T>* p : store_.parameters())
    if (p->name.find("_head.") == std::string::npos) n += p->value.size();
  return n;
}

template <typename T>
Tensor<T> KernelNetwork<T>::prepare_input(const Tensor<T>& image) const {
  if (config_.arch == Arch::kDkn) return image;
  return pixel_unshuffle(image, config_.resample_stride);
}

template <typename T>
Var<T> KernelNetwork<T>::run_tower(Stream& s, Var<T> x, NormMode mode,
                                   std::vector<Shape>* trace) {
  Graph<T>& g = x.graph();
  if (trace) trace->push_back(x.shape());
  for (Layer& l : s.layers) {
    x = conv2d(x, g.parameter(*l.weight), g.parameter(*l.bias), l.spec.stride,
               0);
    if (l.spec.batchnorm) {
      x = batchnorm(x, g.parameter(*l.gamma), g.parameter(*l.beta), *l.stats,
                    mode);
    }
    x = relu(x);
    if (trace) trace->push_back(x.shape());
  }
  return x;
}

template <typename T>
TwoStreamFeatures<T> KernelNetwork<T>::features(Var<T> guidance, Var<T> target,
                                                NormMode mode,
                                                std::vector<Shape>* trace) {
  TwoStreamFeatures<T> f;
  if (config_.use_guidance) f.guidance = run_tower(guidance_, guidance, mode, trace);
  if (config_.use_target)
    f.target = run_tower(target_, target, mode,
                         config_.use_guidance ? nullptr : trace);
  return f;
}

template <typename T>
Var<T> KernelNetwork<T>::head(Var<T> feat, Parameter<T>* w, Parameter<T>* b) {
  Graph<T>& g = feat.graph();
  return conv2d(feat, g.parameter(*w), g.parameter(*b), 1, 0);
}

template <typename T>
Var<T> KernelNetwork<T>::weight_head(const TwoStreamFeatures<T>& f) {
  Var<T> combined;
  if (f.guidance.valid())
    combined = sigmoid(head(f.guidance, guidance_.weight_w, guidance_.weight_b));
  if (f.target.valid()) {
    Var<T> t = sigmoid(head(f.target, target_.weight_w, target_.weight_b));
    combined = combined.valid() ? mul(combined, t) : t;
  }
  DKN_CHECK(combined.valid(), "weight head needs at least one stream");
  if (config_.arch == Arch::kFdkn)
    combined = pixel_shuffle(combined, config_.resample_stride);
  if (config_.constraint == KernelConstraint::kMeanSubtract) {
    return fault::broken_mean_subtraction() ? combined
                                            : channel_mean_subtract(combined);
  }
  return channel_l1_normalize(combined);
}

template <typename T>
Var<T> KernelNetwork<T>::offset_head(const TwoStreamFeatures<T>& f) {
  const Var<T>& any = f.guidance.valid() ? f.guidance : f.target;
  DKN_CHECK(any.valid(), "offset head needs at least one stream");
  Graph<T>& g = any.graph();
  if (!config_.learn_offsets) {
    const int r = config_.arch == Arch::kDkn ? 1 : config_.resample_stride;
    return g.constant(Tensor<T>(
        Shape{2 * config_.taps(), any.shape()[1] * r, any.shape()[2] * r}));
  }
  Var<T> combined;
  if (f.guidance.valid())
    combined = head(f.guidance, guidance_.offset_w, guidance_.offset_b);
  if (f.target.valid()) {
    Var<T> t = head(f.target, target_.offset_w, target_.offset_b);
    combined = combined.valid() ? mul(combined, t) : t;
  }
  if (config_.arch == Arch::kFdkn)
    combined = pixel_shuffle(combined, config_.resample_stride);
  return combined;
}

template <typename T>
FieldVars<T> KernelNetwork<T>::predict(Var<T> guidance, Var<T> target,
                                       NormMode mode) {
  ++forward_passes_;
  const TwoStreamFeatures<T> f = features(guidance, target, mode);
  return {weight_head(f), offset_head(f)};
}

template class KernelNetwork<float>;
template class KernelNetwork<double>;

}  // namespace dkn
