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

#include "dkn/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace dkn {
namespace {

constexpr char kMagic[8] = {'D', 'K', 'N', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  template <typename U>
  void put(U v) {
    auto u = std::bit_cast<std::array<char, sizeof(U)>>(v);
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(u.begin(), u.end());
    out_.append(u.data(), u.size());
  }
  void str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& b, const std::string& source) : b_(b), source_(source) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(detail::concat(source_, ": ", what, " at byte offset ", pos_));
  }
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) fail(detail::concat("truncated checkpoint (need ", n, " more bytes)"));
  }
  template <typename U>
  U get() {
    need(sizeof(U));
    std::array<char, sizeof(U)> a;
    std::memcpy(a.data(), b_.data() + pos_, sizeof(U));
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(a.begin(), a.end());
    pos_ += sizeof(U);
    return std::bit_cast<U>(a);
  }
  std::string str() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void expect(const char* bytes, std::size_t n, const char* what) {
    need(n);
    if (std::memcmp(b_.data() + pos_, bytes, n) != 0) fail(what);
    pos_ += n;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::string& b_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::string metadata_text(const std::map<std::string, std::string>& m) {
  std::string s;
  for (const auto& [k, v] : m) s += k + "=" + v + "\n";
  return s;
}

std::map<std::string, std::string> parse_metadata(const std::string& text) {
  std::map<std::string, std::string> m;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

std::vector<std::pair<std::string, TensorF*>> model_tensors(
    KernelNetwork<float>& model) {
  std::vector<std::pair<std::string, TensorF*>> out;
  for (Parameter<float>* p : model.store().parameters())
    out.emplace_back(p->name, &p->value);
  for (auto& b : model.store().buffers()) out.push_back(b);
  return out;
}

}  // namespace

Checkpoint make_checkpoint(KernelNetwork<float>& model,
                           std::map<std::string, std::string> metadata,
                           const Adam* optimizer) {
  Checkpoint c;
  c.config = model.config();
  c.metadata = std::move(metadata);
  for (auto& [name, t] : model_tensors(model)) c.tensors.emplace_back(name, *t);
  if (optimizer && optimizer->timestep() > 0) {
    c.has_optimizer = true;
    c.adam_timestep = optimizer->timestep();
    c.adam_m = optimizer->first_moments();
    c.adam_v = optimizer->second_moments();
  }
  return c;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.str(model_config_to_text(ckpt.config));
  w.str(metadata_text(ckpt.metadata));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    w.str(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) w.put<std::int32_t>(d);
    for (float v : t.values()) w.put<float>(v);
  }
  w.put<std::uint8_t>(ckpt.has_optimizer ? 1 : 0);
  if (ckpt.has_optimizer) {
    w.put<std::int64_t>(ckpt.adam_timestep);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.adam_m.size()));
    for (std::size_t k = 0; k < ckpt.adam_m.size(); ++k) {
      w.put<std::uint64_t>(ckpt.adam_m[k].size());
      for (double v : ckpt.adam_m[k]) w.put<double>(v);
      for (double v : ckpt.adam_v[k]) w.put<double>(v);
    }
  }
  return w.take();
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source) {
  Reader r(bytes, source);
  r.expect(kMagic, sizeof kMagic, "not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    r.fail(detail::concat("unsupported checkpoint version ", version));
  Checkpoint c;
  try {
    c.config = model_config_from_text(r.str());
  } catch (const ShapeError& e) {
    r.fail(std::string("invalid model config: ") + e.what());
  }
  c.metadata = parse_metadata(r.str());
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) r.fail(detail::concat("tensor ", name, " has rank ", rank));
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = r.get<std::int32_t>();
      if (d < 0) r.fail("negative tensor extent");
      n *= static_cast<std::size_t>(d);
      if (n > bytes.size()) r.fail(detail::concat("tensor ", name, " is larger than the file"));
    }
    r.need(n * 4);
    std::vector<float> v(n);
    for (float& x : v) x = r.get<float>();
    c.tensors.emplace_back(std::move(name), TensorF(shape, std::move(v)));
  }
  c.has_optimizer = r.get<std::uint8_t>() != 0;
  if (c.has_optimizer) {
    c.adam_timestep = r.get<std::int64_t>();
    const auto k = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < k; ++i) {
      const auto n = r.get<std::uint64_t>();
      if (n > bytes.size()) r.fail("optimizer moment table is larger than the file");
      r.need(n * 16);
      std::vector<double> m(n), v(n);
      for (double& x : m) x = r.get<double>();
      for (double& x : v) x = r.get<double>();
      c.adam_m.push_back(std::move(m));
      c.adam_v.push_back(std::move(v));
    }
  }
  if (!r.done()) r.fail("trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes, path.string());
}

void restore_parameters(KernelNetwork<float>& model, const Checkpoint& ckpt) {
  auto dst = model_tensors(model);
  if (dst.size() != ckpt.tensors.size()) {
    throw DataError(detail::concat("checkpoint holds ", ckpt.tensors.size(),
                                   " tensors, model expects ", dst.size()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto& [name, t] = ckpt.tensors[i];
    if (name != dst[i].first || t.shape() != dst[i].second->shape()) {
      throw DataError(detail::concat("checkpoint tensor ", i, " is ", name, " ",
                                     shape_str(t.shape()), ", model expects ",
                                     dst[i].first, " ",
                                     shape_str(dst[i].second->shape())));
    }
    *dst[i].second = t;
  }
}

std::unique_ptr<KernelNetwork<float>> model_from_checkpoint(const Checkpoint& ckpt) {
  auto m = std::make_unique<KernelNetwork<float>>(ckpt.config, 0);
  restore_parameters(*m, ckpt);
  return m;
}

std::string digest_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dkn
