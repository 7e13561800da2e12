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

#include "dkn/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "dkn/inference.hpp"

namespace dkn {

std::string_view scaling_name(Scaling s) {
  return s == Scaling::kCentimeters ? "centimeters" : "range255";
}

Scaling parse_scaling(std::string_view s) {
  if (s == "centimeters") return Scaling::kCentimeters;
  if (s == "range255") return Scaling::kRange255;
  throw ShapeError("unknown scaling '" + std::string(s) +
                   "' (expected centimeters|range255)");
}

double scaling_factor(Scaling s) {
  return s == Scaling::kCentimeters ? 100.0 : 255.0;
}

double rmse(const TensorF& pred, const TensorF& gt, Scaling scaling,
            const TensorF* mask) {
  DKN_CHECK(pred.shape() == gt.shape(), "rmse: prediction ",
            shape_str(pred.shape()), " and ground truth ",
            shape_str(gt.shape()), " differ");
  if (mask) {
    DKN_CHECK(mask->size() == pred.size(), "rmse: mask ",
              shape_str(mask->shape()), " does not match ",
              shape_str(pred.shape()));
  }
  const double f = scaling_factor(scaling);
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask && (*mask)[i] == 0.0f) continue;
    const double d = f * (static_cast<double>(pred[i]) - gt[i]);
    sum += d * d;
    ++n;
  }
  if (n == 0) throw DataError("rmse: the valid mask is empty");
  return std::sqrt(sum / static_cast<double>(n));
}

double EvalReport::improvement() const {
  return mean_baseline_rmse > 0 ? 1.0 - mean_rmse / mean_baseline_rmse : 0.0;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "arch " << arch << ", protocol " << protocol_name(degradation.protocol)
     << ", scale " << degradation.scale << ", noise variance "
     << degradation.noise_variance << ", scaling " << scaling_name(scaling)
     << "\n";
  for (const ImageResult& r : images) {
    os << "  " << r.name << "  rmse " << r.rmse << "  input " << r.baseline_rmse
       << "  " << std::setprecision(3) << r.seconds * 1e3 << " ms  passes "
       << r.forward_passes;
    if (r.pad_bottom || r.pad_right)
      os << "  padded +" << r.pad_bottom << "/+" << r.pad_right;
    os << std::setprecision(4) << "\n";
  }
  os << "mean rmse " << mean_rmse << " (input " << mean_baseline_rmse
     << ", improvement " << std::setprecision(1) << 100.0 * improvement()
     << "%), mean time " << std::setprecision(3) << mean_seconds * 1e3
     << " ms over " << images.size() << " images\n";
  return os.str();
}

std::string EvalReport::to_key_values() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "arch=" << arch << "\n"
     << "protocol=" << protocol_name(degradation.protocol) << "\n"
     << "scale=" << degradation.scale << "\n"
     << "noise_variance=" << degradation.noise_variance << "\n"
     << "scaling=" << scaling_name(scaling) << "\n"
     << "bicubic_kernel=keys_a-0.5\n"
     << "images=" << images.size() << "\n";
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageResult& r = images[i];
    os << "image." << i << ".name=" << r.name << "\n"
       << "image." << i << ".rmse=" << r.rmse << "\n"
       << "image." << i << ".baseline_rmse=" << r.baseline_rmse << "\n"
       << "image." << i << ".seconds=" << r.seconds << "\n"
       << "image." << i << ".forward_passes=" << r.forward_passes << "\n"
       << "image." << i << ".pad=" << r.pad_bottom << "," << r.pad_right << "\n";
  }
  os << "mean_rmse=" << mean_rmse << "\n"
     << "mean_baseline_rmse=" << mean_baseline_rmse << "\n"
     << "improvement=" << improvement() << "\n"
     << "mean_seconds=" << mean_seconds << "\n";
  return os.str();
}

EvalReport benchmark(KernelNetwork<float>& model,
                     const std::vector<SamplePair>& pairs, Scaling scaling,
                     const std::vector<std::string>& names) {
  EvalReport rep;
  rep.arch = std::string(arch_name(model.config().arch));
  rep.scaling = scaling;
  if (!pairs.empty()) rep.degradation = pairs.front().degradation;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const SamplePair& p = pairs[i];
    ImageResult r;
    r.name = i < names.size() ? names[i] : "image_" + std::to_string(i);
    const auto t0 = std::chrono::steady_clock::now();
    const InferenceResult<float> out = infer(model, p.guidance, p.target);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
    r.forward_passes = out.forward_passes;
    r.pad_bottom = out.pad_bottom;
    r.pad_right = out.pad_right;
    r.rmse = rmse(out.output, p.ground_truth, scaling);
    r.baseline_rmse = rmse(p.target, p.ground_truth, scaling);
    rep.images.push_back(r);
  }
  if (!rep.images.empty()) {
    for (const ImageResult& r : rep.images) {
      rep.mean_rmse += r.rmse;
      rep.mean_baseline_rmse += r.baseline_rmse;
      rep.mean_seconds += r.seconds;
    }
    const double n = static_cast<double>(rep.images.size());
    rep.mean_rmse /= n;
    rep.mean_baseline_rmse /= n;
    rep.mean_seconds /= n;
  }
  return rep;
}

}  // namespace dkn
