#pragma once

#include <cstddef>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "drysep/errors.hpp"

namespace drysep::nn {

// Allocator that recycles buffers through a process-wide pool and skips
// zero-initialization of trivial element types. Training builds and tears
// down the whole graph every step; without pooling that is hundreds of MB
// of mmap/fault/zero traffic per step.
template <typename T>
class PoolAllocator {
 public:
  using value_type = T;

  PoolAllocator() = default;
  template <typename U>
  PoolAllocator(const PoolAllocator<U>&) {}

  T* allocate(size_t n) {
    if (n >= kMinPooled) {
      std::lock_guard<std::mutex> lock(mutex());
      auto& bucket = pool()[n];
      if (!bucket.empty()) {
        T* p = bucket.back();
        bucket.pop_back();
        return p;
      }
    }
    return static_cast<T*>(::operator new(n * sizeof(T)));
  }

  void deallocate(T* p, size_t n) noexcept {
    if (n >= kMinPooled) {
      std::lock_guard<std::mutex> lock(mutex());
      auto& bucket = pool()[n];
      if (bucket.size() < kMaxPerBucket) {
        bucket.push_back(p);
        return;
      }
    }
    ::operator delete(p);
  }

  // default-initialize: no zero fill for trivial types
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    if constexpr (sizeof...(Args) == 0 && std::is_trivially_default_constructible_v<U>) {
      (void)p;
    } else {
      ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
  }

  bool operator==(const PoolAllocator&) const { return true; }
  bool operator!=(const PoolAllocator&) const { return false; }

 private:
  static constexpr size_t kMinPooled = 1 << 12;
  static constexpr size_t kMaxPerBucket = 64;
  static std::mutex& mutex() {
    static std::mutex m;
    return m;
  }
  static std::unordered_map<size_t, std::vector<T*>>& pool() {
    static std::unordered_map<size_t, std::vector<T*>> p;
    return p;
  }
};

template <typename T>
using ValueArray = std::vector<T, PoolAllocator<T>>;

// One value array in the autodiff graph. Nodes carry their creation
// parents and a closure that scatters the node's gradient into them;
// inference-mode results (no input requires grad) carry neither.
template <typename T>
struct Node {
  std::vector<size_t> shape;
  ValueArray<T> value;
  ValueArray<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backward_fn;

  size_t numel() const {
    return std::accumulate(shape.begin(), shape.end(), size_t{1}, std::multiplies<>());
  }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

template <typename T>
using Tensor = std::shared_ptr<Node<T>>;

template <typename T>
Tensor<T> make_tensor(std::vector<size_t> shape, bool requires_grad = false) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value.assign(node->numel(), T(0));
  node->requires_grad = requires_grad;
  return node;
}

template <typename T>
Tensor<T> make_tensor(std::vector<size_t> shape, const std::vector<T>& values,
                      bool requires_grad = false) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  if (values.size() != node->numel()) {
    throw DataError("tensor: value count does not match shape");
  }
  node->value.assign(values.begin(), values.end());
  node->requires_grad = requires_grad;
  return node;
}

template <typename T>
bool same_shape(const Tensor<T>& a, const Tensor<T>& b) {
  return a->shape == b->shape;
}

template <typename T>
std::string shape_str(const Tensor<T>& t) {
  std::string s = "[";
  for (size_t i = 0; i < t->shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t->shape[i]);
  }
  return s + "]";
}

// Result node wiring: the output requires grad iff any input does, and
// only then is the graph edge recorded. The value buffer is left
// uninitialized; every op writes all of its output.
template <typename T>
Tensor<T> make_op_result(std::vector<size_t> shape, std::vector<Tensor<T>> inputs,
                         std::function<void(Node<T>&)> backward_fn) {
  auto out = std::make_shared<Node<T>>();
  out->shape = std::move(shape);
  out->value.resize(out->numel());
  bool any = false;
  for (const auto& in : inputs) any = any || in->requires_grad;
  if (any) {
    out->requires_grad = true;
    out->parents = std::move(inputs);
    out->backward_fn = std::move(backward_fn);
  }
  return out;
}

// Reverse-mode sweep from a scalar loss. Gradients of all reachable nodes
// are zeroed first, so repeated calls do not accumulate across sweeps while
// fan-out within one sweep does.
template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss->numel() != 1) {
    throw DataError("backward: loss must be scalar, got shape " + shape_str(loss));
  }
  if (!loss->requires_grad) {
    throw DataError("backward: loss does not depend on any parameter");
  }

  // iterative DFS, post-order; tri-state marks catch cycles
  std::vector<Node<T>*> order;
  std::unordered_map<Node<T>*, int> mark;  // 1 = in stack, 2 = done
  std::vector<std::pair<Node<T>*, size_t>> stack;
  stack.push_back({loss.get(), 0});
  mark[loss.get()] = 1;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next].get();
      ++next;
      if (!parent->requires_grad) continue;
      auto it = mark.find(parent);
      if (it == mark.end()) {
        mark[parent] = 1;
        stack.push_back({parent, 0});
      } else if (it->second == 1) {
        throw DataError("backward: cycle in autodiff graph");
      }
    } else {
      order.push_back(node);
      mark[node] = 2;
      stack.pop_back();
    }
  }

  for (Node<T>* node : order) {
    node->grad.assign(node->value.size(), T(0));
  }
  loss->grad[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

// Named parameter registry with stable iteration order (registration order),
// shared by the optimizer and the checkpoint writer.
template <typename T>
class ParamStore {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> t) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    t->requires_grad = true;
    index_[name] = params_.size();
    params_.push_back({name, std::move(t)});
    return params_.back().second;
  }

  Tensor<T>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return params_[it->second].second;
  }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::pair<std::string, Tensor<T>>>& items() const { return params_; }
  size_t size() const { return params_.size(); }

  void zero_grad() {
    for (auto& [name, p] : params_) p->grad.assign(p->value.size(), T(0));
  }

 private:
  std::vector<std::pair<std::string, Tensor<T>>> params_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace drysep::nn
