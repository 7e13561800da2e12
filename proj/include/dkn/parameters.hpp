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

#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "dkn/autograd.hpp"
#include "dkn/ops.hpp"

namespace dkn {

// Owns the learnable parameters and batch-norm statistics of a model.
// Addresses are stable for the lifetime of the store; iteration order is
// registration order.
template <typename T>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  Parameter<T>& add(std::string name, Tensor<T> value) {
    for (const auto& p : params_) {
      DKN_CHECK(p.name != name, "duplicate parameter name ", name);
    }
    params_.emplace_back(std::move(name), std::move(value));
    return params_.back();
  }

  BatchNormStats<T>& add_stats(std::string name, int channels) {
    stats_.emplace_back(std::move(name), BatchNormStats<T>(channels));
    return stats_.back().second;
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
  }
  std::vector<const Parameter<T>*> parameters() const {
    std::vector<const Parameter<T>*> out;
    for (const auto& p : params_) out.push_back(&p);
    return out;
  }

  // (name, tensor) for every running statistic, e.g. "x.bn1.running_mean".
  std::vector<std::pair<std::string, Tensor<T>*>> buffers() {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    for (auto& [name, s] : stats_) {
      out.emplace_back(name + ".running_mean", &s.running_mean);
      out.emplace_back(name + ".running_var", &s.running_var);
    }
    return out;
  }

  Parameter<T>* find(const std::string& name) {
    for (auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

 private:
  std::deque<Parameter<T>> params_;
  std::deque<std::pair<std::string, BatchNormStats<T>>> stats_;
};

}  // namespace dkn
