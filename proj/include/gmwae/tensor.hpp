#pragma once

// Dense tensors with define-by-run reverse-mode differentiation.
//
// Every differentiable op whose operands require gradients appends its result
// node to the calling thread's Tape. backward() replays that tape in reverse
// and then clears it, so one tape corresponds to one training step.
//
// Tensors are instantiated for float (training) and double (gradient checks).

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gmwae/error.hpp"

namespace gmwae {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until something propagates into it
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t cols() const;
  std::size_t rows() const { return size() / cols(); }

  std::span<const T> values() const { return node_->value; }
  // Only meaningful on leaves; mutating a recorded intermediate invalidates its tape entry.
  std::span<T> mutable_values() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  void clear_grad() { node_->grad.clear(); }
  /// Gradient or zeros when nothing flowed into this tensor.
  std::vector<T> grad_or_zeros() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  const char* op_name() const { return node_->op; }

  T item() const;
  T at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  /// Copy of the values with no history.
  Tensor detach() const;

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Thread-local switch that stops ops from recording history.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
class Tape {
 public:
  static Tape& current();

  void record(std::shared_ptr<Node<T>> node) { nodes_.push_back(std::move(node)); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::shared_ptr<Node<T>>>& nodes() const { return nodes_; }
  void clear() { nodes_.clear(); }

  /// Populates grads of everything reachable from `loss`, then clears the tape.
  /// Leaf grads are reset first unless `accumulate` is set; intermediates are always reset.
  /// `visit`, when given, is called with each replayed node in order.
  void backward(const Tensor<T>& loss, bool accumulate = false,
                const std::function<void(const Node<T>&)>& visit = {});

 private:
  std::vector<std::shared_ptr<Node<T>>> nodes_;
};

template <typename T>
void backward(const Tensor<T>& loss, bool accumulate = false) {
  Tape<T>::current().backward(loss, accumulate);
}

// ---- ops ------------------------------------------------------------------
//
// Binary elementwise ops accept `b` with the same shape as `a`, as a row
// ([n] or [1 x n]) broadcast over the rows of `a`, or as a single element.

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T s);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T> Tensor<T> tanh(const Tensor<T>& a);
template <typename T> Tensor<T> exp(const Tensor<T>& a);
template <typename T> Tensor<T> log(const Tensor<T>& a);
template <typename T> Tensor<T> square(const Tensor<T>& a);
/// Concatenates two matrices with equal row counts along columns.
template <typename T> Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b);
/// Columns [begin, end) of a matrix.
template <typename T> Tensor<T> slice_cols(const Tensor<T>& a, std::size_t begin, std::size_t end);
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);
/// Sum of a square matrix excluding its diagonal.
template <typename T> Tensor<T> sum_off_diagonal(const Tensor<T>& a);
/// Rows of `table` selected by `ids`.
template <typename T> Tensor<T> gather_rows(const Tensor<T>& table, std::span<const int> ids);
/// Fused log-softmax + negative log-likelihood:
/// sum_b weights[b] * -log softmax(logits[b])[targets[b]], as a scalar.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> targets,
                                std::span<const T> weights);
/// Gram matrix of the inverse multi-quadratic kernel, K[n][m] = c / (c + |x_n - y_m|^2).
template <typename T> Tensor<T> imq_gram(const Tensor<T>& x, const Tensor<T>& y, T c);

/// Largest |analytic - numeric| / max(1, |analytic|, |numeric|) over all input
/// coordinates, using central differences with step `eps`. Inputs must be
/// leaves; `f` must rebuild its graph on each call.
template <typename T>
double grad_check(const std::function<Tensor<T>()>& f, std::span<Tensor<T>> inputs,
                  double eps = 1e-4);

}  // namespace gmwae
