#include "gmwae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

namespace gmwae {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

thread_local bool grad_mode_enabled = true;

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename T>
std::shared_ptr<Node<T>> new_node(Shape shape, const char* op) {
  for (std::size_t extent : shape) {
    if (extent == 0) throw DimensionError(std::string(op) + ": zero extent in shape " + shape_str(shape));
  }
  auto node = std::make_shared<Node<T>>();
  node->value.assign(shape_size(shape), T(0));
  node->shape = std::move(shape);
  node->op = op;
  return node;
}

// Result node wired to its parents. Records on the tape only when some parent
// requires grad and grad mode is on.
template <typename T>
std::shared_ptr<Node<T>> result_node(Shape shape, const char* op,
                                     std::vector<std::shared_ptr<Node<T>>> parents) {
  auto node = new_node<T>(std::move(shape), op);
  bool needs = false;
  if (GradMode::enabled()) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  node->requires_grad = needs;
  if (needs) node->parents = std::move(parents);
  return node;
}

template <typename T>
Tensor<T> finish(std::shared_ptr<Node<T>> node, std::function<void(Node<T>&)> fn) {
  if (node->requires_grad) {
    node->backward_fn = std::move(fn);
    Tape<T>::current().record(node);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
void require_matrix(const Tensor<T>& a, const char* op) {
  if (!a.defined()) throw ContractError(std::string(op) + ": undefined tensor");
  if (a.shape().size() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(a.shape()));
  }
}

enum class Broadcast { kSame, kRow, kScalar };

template <typename T>
Broadcast broadcast_kind(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.defined() || !b.defined()) throw ContractError(std::string(op) + ": undefined tensor");
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (b.size() == 1) return Broadcast::kScalar;
  const bool b_is_row = b.shape().size() == 1 || (b.shape().size() == 2 && b.shape()[0] == 1);
  if (b_is_row && a.shape().size() == 2 && b.size() == a.shape()[1]) return Broadcast::kRow;
  throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(b.shape()) + " onto " +
                       shape_str(a.shape()));
}

inline std::size_t bindex(Broadcast kind, std::size_t i, std::size_t cols) {
  switch (kind) {
    case Broadcast::kSame: return i;
    case Broadcast::kRow: return i % cols;
    case Broadcast::kScalar: return 0;
  }
  return 0;
}

template <typename T, typename Fwd, typename DA, typename DB>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, const char* op, Fwd fwd, DA da, DB db) {
  const Broadcast kind = broadcast_kind(a, b, op);
  auto out = result_node<T>(a.shape(), op, {a.node_ptr(), b.node_ptr()});
  const std::size_t n = a.size();
  const std::size_t cols = a.shape().empty() ? 1 : a.shape().back();
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  for (std::size_t i = 0; i < n; ++i) out->value[i] = fwd(av[i], bv[bindex(kind, i, cols)]);
  return finish<T>(out, [kind, n, cols, da, db](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    Node<T>& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        g[i] += self.grad[i] * da(pa.value[i], pb.value[bindex(kind, i, cols)], self.value[i]);
      }
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = bindex(kind, i, cols);
        g[j] += self.grad[i] * db(pa.value[i], pb.value[j], self.value[i]);
      }
    }
  });
}

// `dy` receives (x, y) and returns dy/dx.
template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const Tensor<T>& a, const char* op, Fwd fwd, Deriv dy) {
  if (!a.defined()) throw ContractError(std::string(op) + ": undefined tensor");
  auto out = result_node<T>(a.shape(), op, {a.node_ptr()});
  const auto& av = a.node()->value;
  for (std::size_t i = 0; i < av.size(); ++i) out->value[i] = fwd(av[i]);
  return finish<T>(out, [dy](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    auto& g = pa.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dy(pa.value[i], self.value[i]);
  });
}

template <typename T>
bool all_finite(const std::vector<T>& v) {
  return std::all_of(v.begin(), v.end(), [](T x) { return std::isfinite(x); });
}

}  // namespace

bool GradMode::enabled() { return grad_mode_enabled; }
void GradMode::set_enabled(bool on) { grad_mode_enabled = on; }

// ---- Tensor ---------------------------------------------------------------

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  auto node = new_node<T>(std::move(shape), "leaf");
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  std::fill(t.node_->value.begin(), t.node_->value.end(), value);
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("Tensor::from: shape " + shape_str(shape) + " needs " +
                         std::to_string(shape_size(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = new_node<T>(std::move(shape), "leaf");
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::cols() const {
  return node_->shape.empty() ? 1 : node_->shape.back();
}

template <typename T>
std::vector<T> Tensor<T>::grad_or_zeros() const {
  if (node_->grad.empty()) return std::vector<T>(size(), T(0));
  return node_->grad;
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ContractError("item(): tensor " + shape_str(shape()) + " is not a scalar");
  return node_->value[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(shape(), node_->value, false);
}

// ---- Tape -----------------------------------------------------------------

template <typename T>
Tape<T>& Tape<T>::current() {
  thread_local Tape<T> tape;
  return tape;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss, bool accumulate,
                       const std::function<void(const Node<T>&)>& visit) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  auto it = std::find(nodes_.begin(), nodes_.end(), loss.node_ptr());
  if (it == nodes_.end()) throw ContractError("backward: loss is not on the active tape");
  if (!std::isfinite(loss.item())) {
    std::string producer = loss.op_name();
    for (const auto& n : nodes_) {
      if (!all_finite(n->value)) {
        producer = n->op;
        break;
      }
    }
    nodes_.clear();
    throw NumericError(std::string("backward: non-finite loss, first produced by op '") + producer + "'");
  }
  const std::size_t end = static_cast<std::size_t>(it - nodes_.begin()) + 1;
  for (std::size_t i = 0; i < end; ++i) {
    nodes_[i]->grad.clear();
    if (!accumulate) {
      for (const auto& p : nodes_[i]->parents) {
        if (!p->backward_fn) p->grad.clear();
      }
    }
  }
  loss.node()->ensure_grad()[0] = T(1);
  for (std::size_t i = end; i-- > 0;) {
    Node<T>& node = *nodes_[i];
    if (node.grad.empty()) continue;  // not reachable from the loss
    if (!all_finite(node.grad)) {
      nodes_.clear();
      throw NumericError(std::string("backward: non-finite gradient at op '") + node.op + "'");
    }
    if (visit) visit(node);
    node.backward_fn(node);
  }
  nodes_.clear();
}

// ---- ops ------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner extents differ for " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  auto out = result_node<T>({m, n}, "matmul", {a.node_ptr(), b.node_ptr()});
  MatMap<T>(out->value.data(), m, n).noalias() =
      ConstMatMap<T>(a.node()->value.data(), m, k) * ConstMatMap<T>(b.node()->value.data(), k, n);
  return finish<T>(out, [m, k, n](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    Node<T>& pb = *self.parents[1];
    ConstMatMap<T> dc(self.grad.data(), m, n);
    if (pa.requires_grad) {
      MatMap<T>(pa.ensure_grad().data(), m, k).noalias() +=
          dc * ConstMatMap<T>(pb.value.data(), k, n).transpose();
    }
    if (pb.requires_grad) {
      MatMap<T>(pb.ensure_grad().data(), k, n).noalias() +=
          ConstMatMap<T>(pa.value.data(), m, k).transpose() * dc;
    }
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      a, b, "add", [](T x, T y) { return x + y; }, [](T, T, T) { return T(1); },
      [](T, T, T) { return T(1); });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      a, b, "sub", [](T x, T y) { return x - y; }, [](T, T, T) { return T(1); },
      [](T, T, T) { return T(-1); });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      a, b, "mul", [](T x, T y) { return x * y; }, [](T, T y, T) { return y; },
      [](T x, T, T) { return x; });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  return unary(a, "scale", [s](T x) { return s * x; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  return unary(a, "add_scalar", [s](T x) { return x + s; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary(
      a, "sigmoid",
      [](T x) {
        if (x >= 0) return T(1) / (T(1) + std::exp(-x));
        const T e = std::exp(x);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary(a, "tanh", [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary(a, "exp", [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  return unary(a, "log", [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  return unary(a, "square", [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "concat_cols");
  require_matrix(b, "concat_cols");
  const std::size_t rows = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
  if (b.shape()[0] != rows) {
    throw DimensionError("concat_cols: row counts differ for " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t cols = ca + cb;
  auto out = result_node<T>({rows, cols}, "concat_cols", {a.node_ptr(), b.node_ptr()});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.node()->value.begin() + r * ca, ca, out->value.begin() + r * cols);
    std::copy_n(b.node()->value.begin() + r * cb, cb, out->value.begin() + r * cols + ca);
  }
  return finish<T>(out, [rows, ca, cb, cols](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    Node<T>& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < ca; ++c) g[r * ca + c] += self.grad[r * cols + c];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cb; ++c) g[r * cb + c] += self.grad[r * cols + ca + c];
    }
  });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_cols");
  const std::size_t rows = a.shape()[0], cols = a.shape()[1];
  if (begin >= end || end > cols) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for " + shape_str(a.shape()));
  }
  const std::size_t width = end - begin;
  auto out = result_node<T>({rows, width}, "slice_cols", {a.node_ptr()});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.node()->value.begin() + r * cols + begin, width, out->value.begin() + r * width);
  }
  return finish<T>(out, [rows, cols, begin, width](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < width; ++c) g[r * cols + begin + c] += self.grad[r * width + c];
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  if (!a.defined()) throw ContractError("sum: undefined tensor");
  auto out = result_node<T>({}, "sum", {a.node_ptr()});
  T total = 0;
  for (T v : a.node()->value) total += v;
  out->value[0] = total;
  return finish<T>(out, [](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& x : g) x += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.size()));
}

template <typename T>
Tensor<T> sum_off_diagonal(const Tensor<T>& a) {
  require_matrix(a, "sum_off_diagonal");
  const std::size_t n = a.shape()[0];
  if (a.shape()[1] != n) {
    throw DimensionError("sum_off_diagonal: matrix " + shape_str(a.shape()) + " is not square");
  }
  auto out = result_node<T>({}, "sum_off_diagonal", {a.node_ptr()});
  T total = 0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      if (r != c) total += a.node()->value[r * n + c];
  out->value[0] = total;
  return finish<T>(out, [n](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        if (r != c) g[r * n + c] += self.grad[0];
  });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const int> ids) {
  require_matrix(table, "gather_rows");
  if (ids.empty()) throw ContractError("gather_rows: no ids");
  const std::size_t vocab = table.shape()[0], width = table.shape()[1];
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw IndexError("gather_rows: id " + std::to_string(id) + " outside table of " +
                       std::to_string(vocab) + " rows");
    }
  }
  std::vector<int> rows(ids.begin(), ids.end());
  auto out = result_node<T>({rows.size(), width}, "gather_rows", {table.node_ptr()});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(table.node()->value.begin() + rows[r] * width, width, out->value.begin() + r * width);
  }
  return finish<T>(out, [rows = std::move(rows), width](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < width; ++c) g[rows[r] * width + c] += self.grad[r * width + c];
  });
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> targets,
                                std::span<const T> weights) {
  require_matrix(logits, "softmax_cross_entropy");
  const std::size_t batch = logits.shape()[0], classes = logits.shape()[1];
  if (targets.size() != batch || weights.size() != batch) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(batch) + " rows but " +
                         std::to_string(targets.size()) + " targets and " +
                         std::to_string(weights.size()) + " weights");
  }
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= classes) {
      throw IndexError("softmax_cross_entropy: target " + std::to_string(t) + " outside " +
                       std::to_string(classes) + " classes");
    }
  }
  auto out = result_node<T>({}, "softmax_cross_entropy", {logits.node_ptr()});
  // Probabilities are kept for the backward pass.
  std::vector<T> probs(batch * classes);
  const auto& x = logits.node()->value;
  T total = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const T* row = x.data() + b * classes;
    const T peak = *std::max_element(row, row + classes);
    T denom = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs[b * classes + c] = std::exp(row[c] - peak);
      denom += probs[b * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) probs[b * classes + c] /= denom;
    const T log_z = peak + std::log(denom);
    if (weights[b] != T(0)) total += weights[b] * (log_z - row[targets[b]]);
  }
  out->value[0] = total;
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<T> w(weights.begin(), weights.end());
  return finish<T>(out, [probs = std::move(probs), tgt = std::move(tgt), w = std::move(w), batch,
                         classes](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t b = 0; b < batch; ++b) {
      if (w[b] == T(0)) continue;
      const T coef = self.grad[0] * w[b];
      for (std::size_t c = 0; c < classes; ++c) g[b * classes + c] += coef * probs[b * classes + c];
      g[b * classes + tgt[b]] -= coef;
    }
  });
}

template <typename T>
Tensor<T> imq_gram(const Tensor<T>& x, const Tensor<T>& y, T c) {
  require_matrix(x, "imq_gram");
  require_matrix(y, "imq_gram");
  if (x.shape()[1] != y.shape()[1]) {
    throw DimensionError("imq_gram: sample dimensions differ for " + shape_str(x.shape()) + " and " +
                         shape_str(y.shape()));
  }
  if (!(c > T(0))) throw ContractError("imq_gram: kernel constant must be positive");
  const std::size_t n = x.shape()[0], m = y.shape()[0], d = x.shape()[1];
  auto out = result_node<T>({n, m}, "imq_gram", {x.node_ptr(), y.node_ptr()});
  const auto& xv = x.node()->value;
  const auto& yv = y.node()->value;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      T dist = 0;
      for (std::size_t k = 0; k < d; ++k) {
        const T diff = xv[i * d + k] - yv[j * d + k];
        dist += diff * diff;
      }
      out->value[i * m + j] = c / (c + dist);
    }
  }
  return finish<T>(out, [n, m, d, c](Node<T>& self) {
    Node<T>& px = *self.parents[0];
    Node<T>& py = *self.parents[1];
    // dK/d|x-y|^2 = -K^2 / c
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const T kv = self.value[i * m + j];
        const T coef = self.grad[i * m + j] * T(-2) * kv * kv / c;
        if (coef == T(0)) continue;
        for (std::size_t k = 0; k < d; ++k) {
          const T diff = px.value[i * d + k] - py.value[j * d + k];
          if (px.requires_grad) px.ensure_grad()[i * d + k] += coef * diff;
          if (py.requires_grad) py.ensure_grad()[j * d + k] -= coef * diff;
        }
      }
    }
  });
}

template <typename T>
double grad_check(const std::function<Tensor<T>()>& f, std::span<Tensor<T>> inputs, double eps) {
  if (!(eps > 0)) throw ContractError("grad_check: eps must be positive");
  for (auto& in : inputs) {
    if (in.node()->backward_fn) throw ContractError("grad_check: inputs must be leaf tensors");
    in.set_requires_grad(true);
  }
  auto& tape = Tape<T>::current();
  tape.clear();
  Tensor<T> loss = f();
  const double base = static_cast<double>(loss.item());
  tape.backward(loss);
  std::vector<std::vector<T>> analytic;
  analytic.reserve(inputs.size());
  for (const auto& in : inputs) analytic.push_back(in.grad_or_zeros());

  NoGradGuard no_grad;
  auto evaluate = [&] { return static_cast<double>(f().item()); };
  if (evaluate() != base) throw CheckInvalidError("grad_check: f is not deterministic");

  double worst = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto values = inputs[t].mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T saved = values[i];
      values[i] = static_cast<T>(saved + eps);
      const double plus = evaluate();
      values[i] = static_cast<T>(saved - eps);
      const double minus = evaluate();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = static_cast<double>(analytic[t][i]);
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  if (evaluate() != base) throw CheckInvalidError("grad_check: f is not deterministic");
  return worst;
}

#define GMWAE_INSTANTIATE_TENSOR(T)                                                              \
  template class Tensor<T>;                                                                       \
  template class Tape<T>;                                                                         \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> scale(const Tensor<T>&, T);                                                  \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                             \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                   \
  template Tensor<T> tanh(const Tensor<T>&);                                                      \
  template Tensor<T> exp(const Tensor<T>&);                                                       \
  template Tensor<T> log(const Tensor<T>&);                                                       \
  template Tensor<T> square(const Tensor<T>&);                                                    \
  template Tensor<T> concat_cols(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                      \
  template Tensor<T> sum(const Tensor<T>&);                                                       \
  template Tensor<T> mean(const Tensor<T>&);                                                      \
  template Tensor<T> sum_off_diagonal(const Tensor<T>&);                                          \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const int>);                         \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::span<const int>,                \
                                           std::span<const T>);                                   \
  template Tensor<T> imq_gram(const Tensor<T>&, const Tensor<T>&, T);                             \
  template double grad_check(const std::function<Tensor<T>()>&, std::span<Tensor<T>>, double);

GMWAE_INSTANTIATE_TENSOR(float)
GMWAE_INSTANTIATE_TENSOR(double)

}  // namespace gmwae
