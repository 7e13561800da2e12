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


// Command-line front end: synth, train, filter, eval, selftest.
//
// Settings resolve as command-line flag > --config file > dataset manifest
// (degradation keys only) > built-in default. Every run echoes the resolved
// settings and writes config.txt and metadata.txt into its run directory.
//
// Exit codes: 0 success, 1 usage, 2 data, 3 numerical.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dkn/check.hpp"
#include "dkn/checkpoint.hpp"
#include "dkn/dataset.hpp"
#include "dkn/evaluation.hpp"
#include "dkn/image_io.hpp"
#include "dkn/inference.hpp"
#include "dkn/networks.hpp"
#include "dkn/selftest.hpp"
#include "dkn/training.hpp"
#include "dkn/version.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Setting {
  std::string key;
  std::string value;
  std::string source = "default";
  CLI::Option* option = nullptr;
};

// String-valued settings of one subcommand, bound to CLI11 options.
class Settings {
 public:
  explicit Settings(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_,
                     "key=value settings file; flags take precedence");
  }

  void add(const std::string& key, const std::string& def,
           const std::string& help) {
    Setting& s = items_.emplace_back(Setting{key, def});
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    s.option = app_->add_option(flag, s.value, help)->default_str(def);
  }

  // Marks flag-provided values and fills the rest from the config file.
  void resolve() {
    for (Setting& s : items_)
      if (s.option->count() > 0) s.source = "flag";
    if (config_path_.empty()) return;
    std::ifstream in(config_path_);
    if (!in) throw UsageError("cannot read config file '" + config_path_ + "'");
    std::map<std::string, int> seen;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      const auto where = config_path_ + ":" + std::to_string(lineno);
      if (eq == std::string::npos)
        throw UsageError(where + ": expected key=value, got '" + line + "'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      Setting* s = find(key);
      if (!s)
        throw UsageError(where + ": unknown key '" + key + "' for '" +
                         app_->get_name() + "'");
      if (seen.count(key))
        throw UsageError(where + ": '" + key + "' already set on line " +
                         std::to_string(seen[key]));
      seen[key] = lineno;
      if (s->source == "flag") continue;
      s->value = value;
      s->source = "config";
    }
  }

  // Lowest-precedence value from another source (e.g. the manifest).
  void fallback(const std::string& key, const std::string& value,
                const std::string& source) {
    Setting& s = get(key);
    if (s.source != "default") return;
    s.value = value;
    s.source = source;
  }

  const std::string& str(const std::string& key) { return get(key).value; }

  long long integer(const std::string& key) {
    const std::string& v = str(key);
    std::size_t used = 0;
    long long x = 0;
    try {
      x = std::stoll(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) bad(key, "an integer");
    return x;
  }

  long long positive(const std::string& key) {
    const long long x = integer(key);
    if (x <= 0) bad(key, "a positive integer");
    return x;
  }

  double real(const std::string& key) {
    const std::string& v = str(key);
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(x)) bad(key, "a finite number");
    return x;
  }

  bool boolean(const std::string& key) {
    const std::string& v = str(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad(key, "true or false");
  }

  std::string required(const std::string& key) {
    const std::string& v = str(key);
    if (v.empty()) throw UsageError("--" + dashed(key) + " is required");
    return v;
  }

  std::string to_text() const {
    std::string out;
    for (const Setting& s : items_) out += s.key + "=" + s.value + "\n";
    return out;
  }

  void echo(std::ostream& os) const {
    os << "# resolved configuration for '" << app_->get_name()
       << "' (flag > config > manifest > default)\n";
    for (const Setting& s : items_)
      os << s.key << "=" << s.value << "  # " << s.source << "\n";
    os << std::flush;
  }

  const std::deque<Setting>& items() const { return items_; }
  const std::string& config_path() const { return config_path_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }
  static std::string dashed(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
  }
  [[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw UsageError("--" + dashed(key) + " must be " + what + ", got '" +
                     str(key) + "'");
  }
  Setting* find(const std::string& key) {
    for (Setting& s : items_)
      if (s.key == key) return &s;
    return nullptr;
  }
  Setting& get(const std::string& key) {
    Setting* s = find(key);
    DKN_CHECK(s != nullptr, "unregistered setting ", key);
    return *s;
  }

  CLI::App* app_;
  std::string config_path_;
  std::deque<Setting> items_;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// A run directory with config.txt and metadata.txt.
class RunDir {
 public:
  RunDir(const std::string& path, const std::string& subcommand,
         const Settings& settings, const std::string& command_line)
      : path_(path) {
    std::error_code ec;
    fs::create_directories(path_, ec);
    if (ec) throw dkn::DataError("cannot create run directory '" + path + "': " + ec.message());
    write("config.txt", settings.to_text());
    meta_.emplace_back("subcommand", subcommand);
    meta_.emplace_back("command", command_line);
    meta_.emplace_back("created_utc", utc_now());
    for (const auto& [k, v] : dkn::build_info()) meta_.emplace_back(k, v);
    meta_.emplace_back("cli11_version", CLI11_VERSION);
    if (!settings.config_path().empty())
      meta_.emplace_back("config_file", settings.config_path());
    for (const Setting& s : settings.items()) {
      meta_.emplace_back("config." + s.key, s.value);
      meta_.emplace_back("source." + s.key, s.source);
    }
    flush();
  }

  void note(const std::string& key, const std::string& value) {
    meta_.emplace_back(key, value);
    flush();
  }

  fs::path file(const std::string& name) const { return path_ / name; }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream out(file(name));
    out << text;
    if (!out) throw dkn::DataError("cannot write '" + file(name).string() + "'");
  }

 private:
  void flush() const {
    std::string text;
    for (const auto& [k, v] : meta_) text += k + "=" + v + "\n";
    write("metadata.txt", text);
  }

  fs::path path_;
  std::vector<std::pair<std::string, std::string>> meta_;
};

std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

void add_degradation_settings(Settings& s) {
  s.add("protocol", "bicubic", "degradation: bicubic | nearest_rb");
  s.add("scale", "4", "downsampling factor");
  s.add("noise_variance", "0", "Gaussian noise variance added at low resolution");
}

// Degradation keys fall back to the manifest's first record of `split`.
void manifest_fallback(Settings& s, const dkn::Manifest& m, const std::string& split) {
  for (const dkn::ManifestEntry& e : m.entries) {
    if (e.split != split) continue;
    s.fallback("protocol", std::string(dkn::protocol_name(e.degradation.protocol)), "manifest");
    s.fallback("scale", std::to_string(e.degradation.scale), "manifest");
    std::ostringstream v;
    v << e.degradation.noise_variance;
    s.fallback("noise_variance", v.str(), "manifest");
    return;
  }
}

dkn::Degradation degradation_from(Settings& s) {
  dkn::Degradation d;
  try {
    d.protocol = dkn::parse_protocol(s.str("protocol"));
  } catch (const dkn::ShapeError& e) {
    throw UsageError(std::string("--protocol: ") + e.what());
  }
  d.scale = static_cast<int>(s.positive("scale"));
  d.noise_variance = s.real("noise_variance");
  if (d.noise_variance < 0) throw UsageError("--noise-variance must be non-negative");
  return d;
}

std::uint64_t pair_seed(std::uint64_t seed, std::size_t index) {
  return seed * 1000003ULL + index;
}

std::vector<dkn::SamplePair> make_pairs(const std::vector<dkn::RgbdImage>& images,
                                        const dkn::Degradation& d,
                                        std::uint64_t seed) {
  std::vector<dkn::SamplePair> pairs;
  for (std::size_t i = 0; i < images.size(); ++i)
    pairs.push_back(dkn::make_training_pair(images[i].rgb, images[i].depth, d,
                                            pair_seed(seed, i)));
  return pairs;
}

dkn::Manifest load_manifest(const std::string& path) {
  return dkn::read_manifest(path);
}

// ---------------------------------------------------------------- synth

void register_synth(Settings& s) {
  s.add("out", "runs/synth", "output directory (images, manifest.txt)");
  s.add("count", "40", "number of RGB-D images");
  s.add("test_count", "8", "images in the test split (taken from the end)");
  s.add("size", "96", "image extent in pixels (square)");
  s.add("seed", "7", "generator seed");
  add_degradation_settings(s);
}

int run_synth(Settings& s, const std::string& cmd) {
  const long long count = s.integer("count"), test = s.integer("test_count");
  const long long size = s.positive("size");
  if (count < 0) throw UsageError("--count must be non-negative");
  if (test < 0 || test > count) throw UsageError("--test-count must be in [0, count]");
  const auto seed = static_cast<std::uint64_t>(s.integer("seed"));
  const dkn::Degradation d = degradation_from(s);
  if (size % d.scale != 0)
    throw UsageError("--size " + std::to_string(size) + " is not divisible by --scale " +
                     std::to_string(d.scale));
  s.echo(std::cout);
  RunDir run(s.str("out"), "synth", s, cmd);
  const auto images = dkn::make_synthetic_dataset(static_cast<int>(count),
                                                  static_cast<int>(size), seed);
  dkn::write_synthetic_dataset(
      s.str("out"), images, static_cast<int>(test),
      "synthetic RGB-D pairs, seed " + std::to_string(seed) + ", " +
          std::to_string(size) + "x" + std::to_string(size),
      d);
  run.note("seed", std::to_string(seed));
  run.note("manifest", run.file("manifest.txt").string());
  std::cout << "wrote " << count << " pairs (" << count - test << " train, " << test
            << " test) to " << s.str("out") << "\n";
  return kOk;
}

// ---------------------------------------------------------------- train

void register_train(Settings& s) {
  s.add("data", "", "dataset manifest (required)");
  s.add("out", "runs/train", "run directory");
  s.add("arch", "dkn", "dkn | fdkn");
  add_degradation_settings(s);
  s.add("k", "3", "kernel size k (k x k sampling points)");
  s.add("window", "15", "maximum offset window");
  s.add("residual", "true", "residual connection (mean-subtracted weights)");
  s.add("learn_offsets", "true", "learn sampling offsets (false: fixed grid)");
  s.add("border", "border", "sampling outside the image: border | zero");
  s.add("iters", "2000", "training iterations");
  s.add("lr", "0.001", "initial Adam learning rate");
  s.add("decay_every", "0", "divide lr by 5 every N iterations (0: iters / 4)");
  s.add("crop", "0",
        "crop size in output cells (dkn) or 4-pixel blocks (fdkn); 0: 24 for dkn, 16 for fdkn");
  s.add("log_every", "100", "iterations per log line");
  s.add("seed", "1", "initialisation, crop and noise seed");
  s.add("eval", "true", "benchmark the test split after training");
}

dkn::ModelConfig model_config_from(Settings& s) {
  dkn::ModelConfig c;
  try {
    c = dkn::parse_arch(s.str("arch")) == dkn::Arch::kDkn ? dkn::dkn_config()
                                                          : dkn::fdkn_config();
    c.border = dkn::parse_border_mode(s.str("border"));
  } catch (const dkn::ShapeError& e) {
    throw UsageError(e.what());
  }
  c.kernel_size = static_cast<int>(s.positive("k"));
  c.window = static_cast<int>(s.positive("window"));
  c.residual = s.boolean("residual");
  c.constraint = c.residual ? dkn::KernelConstraint::kMeanSubtract
                            : dkn::KernelConstraint::kL1Normalize;
  c.learn_offsets = s.boolean("learn_offsets");
  try {
    c.validate();
  } catch (const dkn::ShapeError& e) {
    throw UsageError(std::string("invalid model: ") + e.what());
  }
  return c;
}

void print_report(const dkn::EvalReport& r, RunDir& run) {
  std::cout << r.to_text();
  run.write("report.txt", r.to_text());
  run.write("report.kv", r.to_key_values());
  run.note("mean_rmse", format_double(r.mean_rmse));
  run.note("mean_baseline_rmse", format_double(r.mean_baseline_rmse));
}

int run_train(Settings& s, const std::string& cmd) {
  const dkn::Manifest m = load_manifest(s.required("data"));
  manifest_fallback(s, m, "train");
  const dkn::Degradation d = degradation_from(s);
  const dkn::ModelConfig mc = model_config_from(s);
  dkn::TrainConfig tc;
  tc.iterations = s.integer("iters");
  tc.lr = s.real("lr");
  tc.decay_every = s.integer("decay_every");
  tc.crop_outputs = static_cast<int>(s.integer("crop"));
  tc.log_every = static_cast<int>(s.positive("log_every"));
  tc.seed = static_cast<std::uint64_t>(s.integer("seed"));
  try {
    tc.validate();
  } catch (const dkn::ShapeError& e) {
    throw UsageError(e.what());
  }
  const bool eval = s.boolean("eval");
  s.echo(std::cout);

  const auto train_images = dkn::load_split(m, "train");
  if (train_images.empty()) throw dkn::DataError("manifest has no train records");
  const auto pairs = make_pairs(train_images, d, tc.seed);
  RunDir run(s.str("out"), "train", s, cmd);
  run.note("seed", std::to_string(tc.seed));
  run.note("train_pairs", std::to_string(pairs.size()));

  dkn::KernelNetwork<float> model(mc, tc.seed);
  run.note("parameters", std::to_string(model.parameter_count()));
  std::cout << dkn::arch_name(mc.arch) << ": " << model.parameter_count()
            << " parameters, receptive field " << mc.receptive_field() << ", "
            << pairs.size() << " training pairs\n";
  std::ofstream log(run.file("train_log.txt"));
  log << "iteration loss lr\n";
  dkn::Adam opt(tc.adam);
  const auto t0 = std::chrono::steady_clock::now();
  const dkn::TrainResult r = dkn::train(model, pairs, tc, opt, [&](const dkn::TrainLog& l) {
    std::cout << "iter " << l.iteration << "  loss " << l.loss << "  lr " << l.lr << "\n"
              << std::flush;
    log << l.iteration << " " << format_double(l.loss) << " " << l.lr << "\n" << std::flush;
  });
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.note("train_seconds", format_double(secs));
  run.note("iterations_done", std::to_string(r.iterations_done));

  std::map<std::string, std::string> meta{
      {"seed", std::to_string(tc.seed)},
      {"iterations", std::to_string(r.iterations_done)},
      {"protocol", std::string(dkn::protocol_name(d.protocol))},
      {"scale", std::to_string(d.scale)},
      {"noise_variance", format_double(d.noise_variance)},
      {"data", s.str("data")},
      {"dkn_version", dkn::kVersion}};
  const dkn::Checkpoint ckpt = dkn::make_checkpoint(model, meta, &opt);
  dkn::save_checkpoint(run.file("model.ckpt"), ckpt);
  run.note("checkpoint", run.file("model.ckpt").string());
  run.note("checkpoint_digest", dkn::digest_hex(dkn::serialize_checkpoint(ckpt)));
  if (r.diverged) {
    run.note("error", r.error);
    std::cerr << "error: training diverged: " << r.error
              << " (last good parameters saved)\n";
    return kNumerical;
  }
  std::cout << "trained " << r.iterations_done << " iterations in " << secs
            << " s; checkpoint " << run.file("model.ckpt").string() << "\n";
  if (eval) {
    const auto test_images = dkn::load_split(m, "test");
    if (!test_images.empty()) {
      const auto test_pairs = make_pairs(test_images, d, tc.seed + 1);
      print_report(dkn::benchmark(model, test_pairs, dkn::Scaling::kRange255), run);
    }
  }
  return kOk;
}

// ---------------------------------------------------------------- filter

void register_filter(Settings& s) {
  s.add("checkpoint", "", "trained model (required)");
  s.add("target", "", "depth (joint mode) or image to smooth (self mode); required");
  s.add("guidance", "", "RGB guidance image (joint mode)");
  s.add("mode", "joint", "joint: guidance + target | self: self-guided per channel");
  s.add("iterations", "1", "filter applications, each fed the previous output");
  s.add("out", "runs/filter", "run directory");
  s.add("output", "filtered.pfm", "output file name; extension picks the format");
  s.add("bit_depth", "16", "bits per sample for .pgm / .ppm output (8 or 16)");
}

int run_filter(Settings& s, const std::string& cmd) {
  const std::string mode = s.str("mode");
  if (mode != "joint" && mode != "self") throw UsageError("--mode must be joint or self");
  const long long iterations = s.integer("iterations");
  if (iterations < 0) throw UsageError("--iterations must be non-negative");
  const long long bits = s.integer("bit_depth");
  if (bits != 8 && bits != 16) throw UsageError("--bit-depth must be 8 or 16");
  const fs::path output = s.str("output");
  if (output.has_parent_path()) throw UsageError("--output is a file name inside --out");
  try {
    dkn::format_from_path(output);
  } catch (const dkn::DataError& e) {
    throw UsageError(std::string("--output: ") + e.what());
  }
  const std::string ckpt_path = s.required("checkpoint");
  const std::string target_path = s.required("target");
  if (mode == "joint" && s.str("guidance").empty())
    throw UsageError("--guidance is required in joint mode");
  s.echo(std::cout);

  const dkn::Checkpoint ckpt = dkn::load_checkpoint(ckpt_path);
  auto model = dkn::model_from_checkpoint(ckpt);
  dkn::NetworkFilter<float> filter(*model);
  dkn::TensorF target = dkn::read_image(target_path).pixels;
  RunDir run(s.str("out"), "filter", s, cmd);
  run.note("seed", "none (inference is deterministic)");
  run.note("checkpoint_digest", dkn::digest_hex(dkn::serialize_checkpoint(ckpt)));
  dkn::TensorF result;
  if (mode == "self") {
    result = dkn::iterative_filter(target, filter, static_cast<int>(iterations));
  } else {
    const dkn::TensorF guidance = dkn::read_image(s.str("guidance")).pixels;
    if (guidance.dim(0) != model->config().guidance_channels)
      throw dkn::DataError(s.str("guidance") + " has " + std::to_string(guidance.dim(0)) +
                           " channels; the model expects " +
                           std::to_string(model->config().guidance_channels));
    if (target.dim(0) != 1)
      throw dkn::DataError(target_path + " must be a single-channel depth map");
    if (target.dim(1) != guidance.dim(1) || target.dim(2) != guidance.dim(2)) {
      // A low-resolution depth map is brought to the guidance grid first.
      std::cout << "upsampling target " << target.dim(1) << "x" << target.dim(2)
                << " to " << guidance.dim(1) << "x" << guidance.dim(2) << " (bicubic)\n";
      run.note("target_upsampled", "bicubic");
      target = dkn::bicubic_resize(target, guidance.dim(1), guidance.dim(2));
    }
    result = target;
    for (long long i = 0; i < iterations; ++i) result = filter.filter(guidance, result);
  }
  if (!result.all_finite()) throw dkn::NumericalError("filter output is not finite");
  dkn::write_image(run.file(output.string()), result, static_cast<int>(bits));
  run.note("output", run.file(output.string()).string());
  std::cout << "wrote " << run.file(output.string()).string() << " ("
            << dkn::shape_str(result.shape()) << ", " << model->forward_passes()
            << " forward passes)\n";
  return kOk;
}

// ---------------------------------------------------------------- eval

void register_eval(Settings& s) {
  s.add("checkpoint", "", "trained model (required)");
  s.add("data", "", "dataset manifest (required)");
  s.add("split", "test", "manifest split to score: train | test");
  s.add("scaling", "range255", "error units: range255 | centimeters");
  add_degradation_settings(s);
  s.add("seed", "2", "noise seed for the degraded inputs");
  s.add("out", "runs/eval", "run directory");
}

int run_eval(Settings& s, const std::string& cmd) {
  const std::string split = s.str("split");
  if (split != "train" && split != "test") throw UsageError("--split must be train or test");
  dkn::Scaling scaling;
  try {
    scaling = dkn::parse_scaling(s.str("scaling"));
  } catch (const dkn::ShapeError& e) {
    throw UsageError(e.what());
  }
  const std::string ckpt_path = s.required("checkpoint");
  const dkn::Manifest m = load_manifest(s.required("data"));
  manifest_fallback(s, m, split);
  const dkn::Degradation d = degradation_from(s);
  const auto seed = static_cast<std::uint64_t>(s.integer("seed"));
  s.echo(std::cout);

  const dkn::Checkpoint ckpt = dkn::load_checkpoint(ckpt_path);
  auto model = dkn::model_from_checkpoint(ckpt);
  const auto images = dkn::load_split(m, split);
  if (images.empty()) throw dkn::DataError("manifest has no " + split + " records");
  std::vector<std::string> names;
  for (const dkn::ManifestEntry& e : m.entries)
    if (e.split == split) names.push_back(e.depth.stem().string());
  RunDir run(s.str("out"), "eval", s, cmd);
  run.note("seed", std::to_string(seed));
  run.note("checkpoint_digest", dkn::digest_hex(dkn::serialize_checkpoint(ckpt)));
  print_report(dkn::benchmark(*model, make_pairs(images, d, seed), scaling, names), run);
  return kOk;
}

// ---------------------------------------------------------------- selftest

void register_selftest(Settings& s) {
  s.add("seed", "1", "seed for the random probes");
  s.add("inject_fault", "none",
        "none | mean_subtraction (skip the residual constraint to prove the check fires)");
  s.add("out", "", "optional run directory for results.txt");
}

int run_selftest(Settings& s, const std::string& cmd) {
  const std::string fault = s.str("inject_fault");
  if (fault != "none" && fault != "mean_subtraction")
    throw UsageError("--inject-fault must be none or mean_subtraction");
  const auto seed = static_cast<std::uint64_t>(s.integer("seed"));
  s.echo(std::cout);
  dkn::fault::set_broken_mean_subtraction(fault == "mean_subtraction");
  const auto checks = dkn::run_self_test(seed);
  dkn::fault::set_broken_mean_subtraction(false);
  std::ostringstream text;
  int failed = 0;
  for (const dkn::SelfTestCheck& c : checks) {
    text << (c.passed ? "PASS  " : "FAIL  ") << c.name << ": " << c.detail << "\n";
    failed += !c.passed;
  }
  text << (failed ? std::to_string(failed) + " check(s) failed" : "all checks passed") << "\n";
  std::cout << text.str();
  if (!s.str("out").empty()) {
    RunDir run(s.str("out"), "selftest", s, cmd);
    run.note("seed", std::to_string(seed));
    run.write("results.txt", text.str());
  }
  return failed ? kNumerical : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deformable kernel networks for joint image filtering"};
  app.footer("Exit codes: 0 success, 1 usage, 2 data, 3 numerical.");
  app.set_version_flag("--version", dkn::kVersion);
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    std::unique_ptr<Settings> settings;  // options bind to its members
    int (*run)(Settings&, const std::string&);
  };
  std::deque<Command> commands;
  const auto add = [&](const char* name, const char* help, void (*reg)(Settings&),
                       int (*run)(Settings&, const std::string&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    Command& c = commands.emplace_back(Command{sub, std::make_unique<Settings>(sub), run});
    reg(*c.settings);
  };
  add("synth", "write a synthetic RGB-D dataset with a manifest", register_synth, run_synth);
  add("train", "train a DKN or FDKN model", register_train, run_train);
  add("filter", "filter images with a trained model", register_filter, run_filter);
  add("eval", "benchmark a model on a manifest split", register_eval, run_eval);
  add("selftest", "run fast invariant checks", register_selftest, run_selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  std::string cmd;
  for (int i = 0; i < argc; ++i) cmd += (i ? " " : "") + std::string(argv[i]);

  for (Command& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      c.settings->resolve();
      return c.run(*c.settings, cmd);
    } catch (const UsageError& e) {
      std::cerr << "usage error: " << e.what() << "\n";
      return kUsage;
    } catch (const dkn::ShapeError& e) {
      std::cerr << "usage error: " << e.what() << "\n";
      return kUsage;
    } catch (const dkn::DataError& e) {
      std::cerr << "data error: " << e.what() << "\n";
      return kData;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "data error: " << e.what() << "\n";
      return kData;
    } catch (const dkn::NumericalError& e) {
      std::cerr << "numerical error: " << e.what() << "\n";
      return kNumerical;
    }
  }
  return kUsage;
}
