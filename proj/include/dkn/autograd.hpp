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

// Tape-based reverse-mode differentiation.
//
// A Graph records every primitive application in creation order, which is a
// topological order of the computation. backward() walks the tape once in
// reverse, calling each node's backward closure with the node's accumulated
// output gradient. Leaves bound to a Parameter add their gradient into
// Parameter::grad when visited.
//
// A Graph is confined to one thread. Var handles are cheap (graph pointer +
// index) and stay valid for the lifetime of their Graph.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dkn/check.hpp"
#include "dkn/tensor.hpp"

namespace dkn {

template <typename T>
struct Parameter {
  Parameter(std::string name_, Tensor<T> value_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T(0)); }

  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

template <typename T>
class Graph;

template <typename T>
class Var {
 public:
  Var() = default;
  Var(Graph<T>* graph, std::size_t id) : graph_(graph), id_(id) {}

  bool valid() const { return graph_ != nullptr; }
  Graph<T>& graph() const { return *graph_; }
  std::size_t id() const { return id_; }

  const Tensor<T>& value() const { return graph_->value(*this); }
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const { return graph_->requires_grad(*this); }
  // Empty tensor when no gradient reached this node.
  const Tensor<T>& grad() const { return graph_->grad(*this); }

 private:
  Graph<T>* graph_ = nullptr;
  std::size_t id_ = 0;
};

template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(const Tensor<T>& out_grad)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  // Leaf that never receives gradient.
  Var<T> constant(Tensor<T> value) {
    return push(std::move(value), false, nullptr, "constant");
  }

  // Leaf whose gradient is kept on the node (readable through Var::grad).
  Var<T> input(Tensor<T> value, bool requires_grad = true) {
    return push(std::move(value), requires_grad && grad_enabled_, nullptr,
                "input");
  }

  // Leaf bound to a parameter; backward() accumulates into param.grad.
  Var<T> parameter(Parameter<T>& param) {
    Parameter<T>* p = &param;
    const bool rg = grad_enabled_;
    return push(param.value, rg,
                rg ? BackwardFn([p](const Tensor<T>& g) { p->grad += g; })
                   : BackwardFn(),
                param.name.c_str());
  }

  // Records the result of a primitive. `requires_grad` is normally the OR
  // of the inputs' flags; the closure runs only when it is true.
  Var<T> record(Tensor<T> value, bool requires_grad, BackwardFn fn,
                const char* op) {
    if (!value.all_finite()) {
      throw NumericalError(detail::concat("non-finite value produced by ", op,
                                          " with shape ",
                                          shape_str(value.shape())));
    }
    const bool rg = requires_grad && grad_enabled_;
    return push(std::move(value), rg, rg ? std::move(fn) : BackwardFn(), op);
  }

  const Tensor<T>& value(Var<T> v) const { return node(v).value; }
  bool requires_grad(Var<T> v) const { return node(v).requires_grad; }
  const Tensor<T>& grad(Var<T> v) const { return node(v).grad; }

  // Zero-initialised on first use. Only meaningful for requires_grad nodes.
  Tensor<T>& grad_accumulator(Var<T> v) {
    Node& n = node(v);
    if (n.grad.shape() != n.value.shape()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }

  void backward(Var<T> root) {
    DKN_CHECK(root.valid() && &root.graph() == this,
              "backward root does not belong to this graph");
    const Node& r = node(root);
    DKN_CHECK(r.value.size() == 1, "backward requires a scalar root, got shape ",
              shape_str(r.value.shape()));
    DKN_CHECK(!backward_done_, "backward already ran on this graph");
    backward_done_ = true;
    if (!r.requires_grad) return;
    grad_accumulator(root).fill(T(1));
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
      n.backward(n.grad);
      ++visited_;
    }
  }

  // Number of backward closures executed by the last backward().
  std::size_t visited() const { return visited_; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
    const char* op = "";
  };

  Var<T> push(Tensor<T> value, bool requires_grad, BackwardFn fn,
              const char* op) {
    nodes_.push_back(Node{std::move(value), Tensor<T>(), requires_grad,
                          std::move(fn), op});
    return Var<T>(this, nodes_.size() - 1);
  }

  const Node& node(Var<T> v) const {
    DKN_CHECK(v.valid() && &v.graph() == this && v.id() < nodes_.size(),
              "variable does not belong to this graph");
    return nodes_[v.id()];
  }
  Node& node(Var<T> v) {
    DKN_CHECK(v.valid() && &v.graph() == this && v.id() < nodes_.size(),
              "variable does not belong to this graph");
    return nodes_[v.id()];
  }

  bool grad_enabled_;
  bool backward_done_ = false;
  std::size_t visited_ = 0;
  std::deque<Node> nodes_;
};

}  // namespace dkn
