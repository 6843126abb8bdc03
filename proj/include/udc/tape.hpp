// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "udc/tensor.hpp"

namespace udc {

template <typename T>
class Tape;

// One node of the computation graph. Operations allocate a node for their
// result; when recorded on a tape the node keeps its inputs alive and carries
// the rule that routes upstream gradient into them. Without a tape the inputs
// are not linked, so intermediate values free as soon as the last consumer
// releases them.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until backward materializes it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> inputs;
  std::function<void(Node<T>&)> backprop;  // null for leaves
  Tape<T>* owner = nullptr;                // tape the node was recorded on
};

template <typename T>
using Value = std::shared_ptr<Node<T>>;

// Trainable or checkable graph input.
template <typename T>
Value<T> leaf(Tensor<T> v, bool requires_grad = true) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  return n;
}

// Graph input that never receives gradient (fixed kernels, coordinates).
template <typename T>
Value<T> constant(Tensor<T> v) {
  return leaf<T>(std::move(v), false);
}

// Ensures a grad buffer exists, zeroed on first touch.
template <typename T>
Tensor<T>& grad_buffer(Node<T>& n) {
  if (n.grad.empty()) n.grad = Tensor<T>::zeros(n.value.shape());
  return n.grad;
}

// Grad of a value after backward; all-zeros if gradient never reached it.
template <typename T>
Tensor<T> grad_or_zeros(const Value<T>& v) {
  if (!v->grad.empty()) return v->grad;
  return Tensor<T>::zeros(v->value.shape());
}

// Records operations in forward execution order (a topological order of the
// graph). Reverse replay therefore visits every node after all of its
// consumers, so each backprop rule fires exactly once.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(const Value<T>& node) {
    node->owner = this;
    nodes_.push_back(node);
  }

  size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  // Seeds loss with gradient 1 and propagates through the recorded order in
  // reverse. Overwrites gradients: afterwards every reachable requires_grad
  // node (leaves included) holds exactly d(loss)/d(node).
  void backward(const Value<T>& loss) {
    check(!consumed_, ErrorCode::StateError, "backward called twice on the same tape; re-run forward or reset");
    check(loss != nullptr && loss->owner == this, ErrorCode::StateError,
          "loss was not recorded on this tape; tape and forward pass must match");
    check(loss->value.shape() == Shape{1, 1, 1, 1}, ErrorCode::ShapeMismatch,
          "backward requires a scalar loss, got " + loss->value.shape().str());
    check(loss->requires_grad, ErrorCode::StateError, "loss does not depend on any trainable input");
    consumed_ = true;

    // Fresh slate: recorded nodes and every leaf they reference start at zero
    // so accumulation below yields the exact derivative of this loss.
    for (auto& n : nodes_) {
      zero_grad_of(*n);
      for (auto& in : n->inputs)
        if (in->requires_grad) zero_grad_of(*in);
    }

    grad_buffer(*loss).fill(T(1));
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<T>& n = **it;
      if (n.backprop) n.backprop(n);
    }
  }

  void reset() {
    nodes_.clear();
    consumed_ = false;
  }

 private:
  static void zero_grad_of(Node<T>& n) {
    if (n.grad.empty())
      n.grad = Tensor<T>::zeros(n.value.shape());
    else
      n.grad.fill(T(0));
  }

  std::vector<Value<T>> nodes_;
  bool consumed_ = false;
};

}  // namespace udc
