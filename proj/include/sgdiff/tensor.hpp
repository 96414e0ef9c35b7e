// Copyright 2026 The sgdiff Authors.
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

#ifndef SGDIFF_TENSOR_HPP
#define SGDIFF_TENSOR_HPP

// Define-by-run reverse-mode autodiff over dense row-major matrices.
//
// Tensors are rank <= 2 (rows x cols); higher-rank data such as per-edge
// feature maps are stored flattened, one row per slot. A tensor is a cheap
// handle to a shared node, so copies alias. Results of an op remember their
// inputs only while gradient recording is on and some input requires grad.

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sgdiff/errors.hpp"

namespace sgdiff {

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

namespace detail {
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode(); }

/// Disables gradient recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename Scalar>
struct TensorNode {
  using Matrix = RowMatrix<Scalar>;

  Matrix value;
  Matrix grad;  // empty until something accumulates into it
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> pullback;

  template <typename Derived>
  void accumulate(const Eigen::MatrixBase<Derived>& g) {
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

template <typename Scalar>
class BasicTensor {
 public:
  using Matrix = RowMatrix<Scalar>;
  using Node = TensorNode<Scalar>;

  BasicTensor() : node_(std::make_shared<Node>()) {}

  static BasicTensor constant(Matrix value) {
    BasicTensor t;
    t.node_->value = std::move(value);
    return t;
  }

  static BasicTensor parameter(Matrix value) {
    BasicTensor t;
    t.node_->value = std::move(value);
    t.node_->requires_grad = true;
    return t;
  }

  static BasicTensor scalar(Scalar x) {
    Matrix m(1, 1);
    m(0, 0) = x;
    return constant(std::move(m));
  }

  static BasicTensor from_node(std::shared_ptr<Node> node) {
    BasicTensor t;
    t.node_ = std::move(node);
    return t;
  }

  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index size() const { return node_->value.size(); }
  std::array<Index, 2> shape() const { return {rows(), cols()}; }

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  Scalar item() const {
    if (size() != 1) throw DimensionError("item() on non-scalar " + shape_string());
    return node_->value(0, 0);
  }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  /// Accumulated gradient, or zeros when nothing has reached this tensor.
  Matrix grad() const {
    return has_grad() ? node_->grad : Matrix::Zero(rows(), cols());
  }
  void zero_grad() {
    if (has_grad()) node_->grad.setZero();
  }

  std::string shape_string() const {
    return "(" + std::to_string(rows()) + "x" + std::to_string(cols()) + ")";
  }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

using Tensor = BasicTensor<double>;

namespace detail {

template <typename Scalar>
using NodePtr = std::shared_ptr<TensorNode<Scalar>>;

// Builds an op result. `pullback` is only retained when recording.
template <typename Scalar, typename Pullback>
BasicTensor<Scalar> make_result(RowMatrix<Scalar> value,
                                std::vector<NodePtr<Scalar>> parents,
                                Pullback&& pullback) {
  auto node = std::make_shared<TensorNode<Scalar>>();
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->is_leaf = false;
    node->parents = std::move(parents);
    node->pullback = std::forward<Pullback>(pullback);
  }
  return BasicTensor<Scalar>::from_node(std::move(node));
}

inline std::string shape_str(Index r, Index c) {
  return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
}

inline Index broadcast_dim(Index a, Index b, const char* op, Index ar, Index ac,
                           Index br, Index bc) {
  if (a == b || b == 1) return a;
  if (a == 1) return b;
  throw DimensionError(std::string(op) + ": cannot broadcast " +
                       shape_str(ar, ac) + " with " + shape_str(br, bc));
}

template <typename Scalar>
RowMatrix<Scalar> expand(const RowMatrix<Scalar>& m, Index rows, Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

// Sums `g` down to shape (rows x cols), undoing a broadcast.
template <typename Scalar>
RowMatrix<Scalar> reduce_to(const RowMatrix<Scalar>& g, Index rows, Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) {
    RowMatrix<Scalar> s(1, 1);
    s(0, 0) = g.sum();
    return s;
  }
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic with broadcasting of 1x1, 1xc and rx1 operands.

template <typename Scalar>
BasicTensor<Scalar> add(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  const Index r = detail::broadcast_dim(a.rows(), b.rows(), "add", a.rows(), a.cols(), b.rows(), b.cols());
  const Index c = detail::broadcast_dim(a.cols(), b.cols(), "add", a.rows(), a.cols(), b.rows(), b.cols());
  RowMatrix<Scalar> out = detail::expand(a.value(), r, c);
  out += detail::expand(b.value(), r, c);
  auto* pa = a.node().get();
  auto* pb = b.node().get();
  return detail::make_result<Scalar>(std::move(out), {a.node(), b.node()},
      [pa, pb](TensorNode<Scalar>& self) {
        if (pa->requires_grad) pa->accumulate(detail::reduce_to(self.grad, pa->value.rows(), pa->value.cols()));
        if (pb->requires_grad) pb->accumulate(detail::reduce_to(self.grad, pb->value.rows(), pb->value.cols()));
      });
}

template <typename Scalar>
BasicTensor<Scalar> sub(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  const Index r = detail::broadcast_dim(a.rows(), b.rows(), "sub", a.rows(), a.cols(), b.rows(), b.cols());
  const Index c = detail::broadcast_dim(a.cols(), b.cols(), "sub", a.rows(), a.cols(), b.rows(), b.cols());
  RowMatrix<Scalar> out = detail::expand(a.value(), r, c);
  out -= detail::expand(b.value(), r, c);
  auto* pa = a.node().get();
  auto* pb = b.node().get();
  return detail::make_result<Scalar>(std::move(out), {a.node(), b.node()},
      [pa, pb](TensorNode<Scalar>& self) {
        if (pa->requires_grad) pa->accumulate(detail::reduce_to(self.grad, pa->value.rows(), pa->value.cols()));
        if (pb->requires_grad) {
          RowMatrix<Scalar> neg = -self.grad;
          pb->accumulate(detail::reduce_to(neg, pb->value.rows(), pb->value.cols()));
        }
      });
}

template <typename Scalar>
BasicTensor<Scalar> mul(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  const Index r = detail::broadcast_dim(a.rows(), b.rows(), "mul", a.rows(), a.cols(), b.rows(), b.cols());
  const Index c = detail::broadcast_dim(a.cols(), b.cols(), "mul", a.rows(), a.cols(), b.rows(), b.cols());
  RowMatrix<Scalar> ea = detail::expand(a.value(), r, c);
  RowMatrix<Scalar> eb = detail::expand(b.value(), r, c);
  RowMatrix<Scalar> out = ea.cwiseProduct(eb);
  auto* pa = a.node().get();
  auto* pb = b.node().get();
  return detail::make_result<Scalar>(std::move(out), {a.node(), b.node()},
      [pa, pb, ea = std::move(ea), eb = std::move(eb)](TensorNode<Scalar>& self) {
        if (pa->requires_grad) {
          RowMatrix<Scalar> g = self.grad.cwiseProduct(eb);
          pa->accumulate(detail::reduce_to(g, pa->value.rows(), pa->value.cols()));
        }
        if (pb->requires_grad) {
          RowMatrix<Scalar> g = self.grad.cwiseProduct(ea);
          pb->accumulate(detail::reduce_to(g, pb->value.rows(), pb->value.cols()));
        }
      });
}

template <typename Scalar>
BasicTensor<Scalar> scale(const BasicTensor<Scalar>& a, Scalar s) {
  auto* pa = a.node().get();
  return detail::make_result<Scalar>(RowMatrix<Scalar>(a.value() * s), {a.node()},
      [pa, s](TensorNode<Scalar>& self) { pa->accumulate(self.grad * s); });
}

template <typename Scalar>
BasicTensor<Scalar> operator+(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) { return add(a, b); }
template <typename Scalar>
BasicTensor<Scalar> operator-(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) { return sub(a, b); }
template <typename Scalar>
BasicTensor<Scalar> operator*(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) { return mul(a, b); }
template <typename Scalar>
BasicTensor<Scalar> operator-(const BasicTensor<Scalar>& a) { return scale(a, Scalar(-1)); }

// ---------------------------------------------------------------------------
// Linear algebra and shape ops.

template <typename Scalar>
BasicTensor<Scalar> matmul(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + a.shape_string() + " x " + b.shape_string());
  }
  RowMatrix<Scalar> out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  auto* pa = a.node().get();
  auto* pb = b.node().get();
  return detail::make_result<Scalar>(std::move(out), {a.node(), b.node()},
      [pa, pb](TensorNode<Scalar>& self) {
        if (pa->requires_grad) {
          RowMatrix<Scalar> g(pa->value.rows(), pa->value.cols());
          g.noalias() = self.grad * pb->value.transpose();
          pa->accumulate(g);
        }
        if (pb->requires_grad) {
          RowMatrix<Scalar> g(pb->value.rows(), pb->value.cols());
          g.noalias() = pa->value.transpose() * self.grad;
          pb->accumulate(g);
        }
      });
}

template <typename Scalar>
BasicTensor<Scalar> transpose(const BasicTensor<Scalar>& a) {
  auto* pa = a.node().get();
  return detail::make_result<Scalar>(RowMatrix<Scalar>(a.value().transpose()), {a.node()},
      [pa](TensorNode<Scalar>& self) { pa->accumulate(self.grad.transpose()); });
}

/// Reinterprets the row-major data with a new shape of equal size.
template <typename Scalar>
BasicTensor<Scalar> reshape(const BasicTensor<Scalar>& a, Index rows, Index cols) {
  if (rows * cols != a.size()) {
    throw DimensionError("reshape: " + a.shape_string() + " to " + detail::shape_str(rows, cols));
  }
  RowMatrix<Scalar> out = Eigen::Map<const RowMatrix<Scalar>>(a.value().data(), rows, cols);
  auto* pa = a.node().get();
  return detail::make_result<Scalar>(std::move(out), {a.node()},
      [pa](TensorNode<Scalar>& self) {
        pa->accumulate(Eigen::Map<const RowMatrix<Scalar>>(
            self.grad.data(), pa->value.rows(), pa->value.cols()));
      });
}

template <typename Scalar>
BasicTensor<Scalar> slice_cols(const BasicTensor<Scalar>& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw DimensionError("slice_cols [" + std::to_string(start) + ", +" +
                         std::to_string(count) + ") of " + a.shape_string());
  }
  auto* pa = a.node().get();
  return detail::make_result<Scalar>(RowMatrix<Scalar>(a.value().middleCols(start, count)), {a.node()},
      [pa, start, count](TensorNode<Scalar>& self) {
        RowMatrix<Scalar> g = RowMatrix<Scalar>::Zero(pa->value.rows(), pa->value.cols());
        g.middleCols(start, count) = self.grad;
        pa->accumulate(g);
      });
}

/// Concatenates along axis 0 (stack rows) or axis 1 (side by side).
template <typename Scalar>
BasicTensor<Scalar> concat(const std::vector<BasicTensor<Scalar>>& parts, int axis) {
  if (parts.empty()) throw ArgumentError("concat of nothing");
  if (axis != 0 && axis != 1) throw ArgumentError("concat axis must be 0 or 1");
  Index rows = 0;
  Index cols = 0;
  for (const auto& p : parts) {
    if (axis == 0) {
      if (p.cols() != parts.front().cols()) {
        throw DimensionError("concat(axis=0): " + parts.front().shape_string() + " vs " + p.shape_string());
      }
      rows += p.rows();
      cols = p.cols();
    } else {
      if (p.rows() != parts.front().rows()) {
        throw DimensionError("concat(axis=1): " + parts.front().shape_string() + " vs " + p.shape_string());
      }
      cols += p.cols();
      rows = p.rows();
    }
  }
  RowMatrix<Scalar> out(rows, cols);
  std::vector<detail::NodePtr<Scalar>> nodes;
  std::vector<TensorNode<Scalar>*> raw;
  Index offset = 0;
  for (const auto& p : parts) {
    if (axis == 0) {
      out.middleRows(offset, p.rows()) = p.value();
      offset += p.rows();
    } else {
      out.middleCols(offset, p.cols()) = p.value();
      offset += p.cols();
    }
    nodes.push_back(p.node());
    raw.push_back(p.node().get());
  }
  return detail::make_result<Scalar>(std::move(out), std::move(nodes),
      [raw, axis](TensorNode<Scalar>& self) {
        Index off = 0;
        for (auto* p : raw) {
          if (axis == 0) {
            if (p->requires_grad) p->accumulate(self.grad.middleRows(off, p->value.rows()));
            off += p->value.rows();
          } else {
            if (p->requires_grad) p->accumulate(self.grad.middleCols(off, p->value.cols()));
            off += p->value.cols();
          }
        }
      });
}

/// out.row(i) = a.row(index[i]); the pullback scatter-adds.
template <typename Scalar>
BasicTensor<Scalar> gather_rows(const BasicTensor<Scalar>& a,
                                std::shared_ptr<const std::vector<Index>> index) {
  RowMatrix<Scalar> out(static_cast<Index>(index->size()), a.cols());
  for (Index i = 0; i < out.rows(); ++i) {
    const Index src = (*index)[i];
    if (src < 0 || src >= a.rows()) {
      throw IndexError("gather_rows: row " + std::to_string(src) + " of " + a.shape_string());
    }
    out.row(i) = a.value().row(src);
  }
  auto* pa = a.node().get();
  return detail::make_result<Scalar>(std::move(out), {a.node()},
      [pa, index](TensorNode<Scalar>& self) {
        RowMatrix<Scalar> g = RowMatrix<Scalar>::Zero(pa->value.rows(), pa->value.cols());
        for (Index i = 0; i < self.grad.rows(); ++i) g.row((*index)[i]) += self.grad.row(i);
        pa->accumulate(g);
      });
}

template <typename Scalar>
BasicTensor<Scalar> gather_rows(const BasicTensor<Scalar>& a, std::vector<Index> index) {
  return gather_rows(a, std::make_shared<const std::vector<Index>>(std::move(index)));
}

// ---------------------------------------------------------------------------
// Nonlinearities and normalization.

template <typename Scalar>
BasicTensor<Scalar> relu(const BasicTensor<Scalar>& a) {
  auto* pa = a.node().get();
  return detail::make_result<Scalar>(RowMatrix<Scalar>(a.value().cwiseMax(Scalar(0))), {a.node()},
      [pa](TensorNode<Scalar>& self) {
        pa->accumulate((pa->value.array() > Scalar(0)).template cast<Scalar>().matrix().cwiseProduct(self.grad));
      });
}

namespace detail {
template <typename Scalar>
RowMatrix<Scalar> softmax_rows(const RowMatrix<Scalar>& x) {
  RowMatrix<Scalar> out = x.colwise() - x.rowwise().maxCoeff();
  out = out.array().exp();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

template <typename Scalar>
RowMatrix<Scalar> log_softmax_rows(const RowMatrix<Scalar>& x) {
  RowMatrix<Scalar> shifted = x.colwise() - x.rowwise().maxCoeff();
  auto lse = shifted.array().exp().rowwise().sum().log();
  shifted.array().colwise() -= lse;
  return shifted;
}
}  // namespace detail

/// Softmax along `axis` (1: each row sums to one, 0: each column).
template <typename Scalar>
BasicTensor<Scalar> softmax(const BasicTensor<Scalar>& a, int axis = 1) {
  if (axis != 0 && axis != 1) throw ArgumentError("softmax axis must be 0 or 1");
  RowMatrix<Scalar> out = axis == 1 ? detail::softmax_rows<Scalar>(a.value())
                                    : RowMatrix<Scalar>(detail::softmax_rows<Scalar>(a.value().transpose()).transpose());
  auto* pa = a.node().get();
  return detail::make_result<Scalar>(std::move(out), {a.node()},
      [pa, axis](TensorNode<Scalar>& self) {
        const auto& s = self.value;
        RowMatrix<Scalar> gs = self.grad.cwiseProduct(s);
        if (axis == 1) {
          RowMatrix<Scalar> g = gs - (s.array().colwise() * gs.rowwise().sum().array()).matrix();
          pa->accumulate(g);
        } else {
          RowMatrix<Scalar> g = gs - (s.array().rowwise() * gs.colwise().sum().array()).matrix();
          pa->accumulate(g);
        }
      });
}

/// Row-wise log-softmax.
template <typename Scalar>
BasicTensor<Scalar> log_softmax(const BasicTensor<Scalar>& a) {
  auto* pa = a.node().get();
  return detail::make_result<Scalar>(detail::log_softmax_rows<Scalar>(a.value()), {a.node()},
      [pa](TensorNode<Scalar>& self) {
        RowMatrix<Scalar> p = self.value.array().exp();
        RowMatrix<Scalar> g = self.grad - (p.array().colwise() * self.grad.rowwise().sum().array()).matrix();
        pa->accumulate(g);
      });
}

/// Normalizes each row to zero mean / unit variance, then applies the
/// per-column affine (gamma, beta), both 1 x cols.
template <typename Scalar>
BasicTensor<Scalar> layer_norm(const BasicTensor<Scalar>& x, const BasicTensor<Scalar>& gamma,
                               const BasicTensor<Scalar>& beta, Scalar eps = Scalar(1e-5)) {
  const Index c = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != c || beta.rows() != 1 || beta.cols() != c) {
    throw DimensionError("layer_norm: x " + x.shape_string() + ", gamma " +
                         gamma.shape_string() + ", beta " + beta.shape_string());
  }
  const auto& xv = x.value();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean = xv.rowwise().mean();
  RowMatrix<Scalar> centered = xv.colwise() - mean;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std =
      ((centered.array().square().rowwise().sum() / Scalar(c)) + eps).rsqrt();
  RowMatrix<Scalar> xhat = centered.array().colwise() * inv_std.array();
  RowMatrix<Scalar> out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
                          beta.value().row(0).array();
  auto* px = x.node().get();
  auto* pg = gamma.node().get();
  auto* pb = beta.node().get();
  return detail::make_result<Scalar>(std::move(out), {x.node(), gamma.node(), beta.node()},
      [px, pg, pb, xhat = std::move(xhat), inv_std = std::move(inv_std), c](TensorNode<Scalar>& self) {
        if (pg->requires_grad) pg->accumulate(self.grad.cwiseProduct(xhat).colwise().sum());
        if (pb->requires_grad) pb->accumulate(self.grad.colwise().sum());
        if (px->requires_grad) {
          RowMatrix<Scalar> dxhat = self.grad.array().rowwise() * pg->value.row(0).array();
          Eigen::Matrix<Scalar, Eigen::Dynamic, 1> m1 = dxhat.rowwise().mean();
          Eigen::Matrix<Scalar, Eigen::Dynamic, 1> m2 = dxhat.cwiseProduct(xhat).rowwise().sum() / Scalar(c);
          RowMatrix<Scalar> g = dxhat.colwise() - m1;
          g -= (xhat.array().colwise() * m2.array()).matrix();
          g.array().colwise() *= inv_std.array();
          px->accumulate(g);
        }
      });
}

// ---------------------------------------------------------------------------
// Reductions and losses.

template <typename Scalar>
BasicTensor<Scalar> sum(const BasicTensor<Scalar>& a) {
  RowMatrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  auto* pa = a.node().get();
  return detail::make_result<Scalar>(std::move(out), {a.node()},
      [pa](TensorNode<Scalar>& self) {
        pa->accumulate(RowMatrix<Scalar>::Constant(pa->value.rows(), pa->value.cols(), self.grad(0, 0)));
      });
}

template <typename Scalar>
BasicTensor<Scalar> mean(const BasicTensor<Scalar>& a) {
  if (a.size() == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(a), Scalar(1) / Scalar(a.size()));
}

/// Mean along `axis`: 0 averages rows into 1 x cols, 1 averages columns into
/// rows x 1.
template <typename Scalar>
BasicTensor<Scalar> mean(const BasicTensor<Scalar>& a, int axis) {
  if (axis != 0 && axis != 1) throw ArgumentError("mean axis must be 0 or 1");
  if (a.size() == 0) throw DimensionError("mean of empty tensor");
  RowMatrix<Scalar> out = axis == 0 ? RowMatrix<Scalar>(a.value().colwise().mean())
                                    : RowMatrix<Scalar>(a.value().rowwise().mean());
  auto* pa = a.node().get();
  return detail::make_result<Scalar>(std::move(out), {a.node()},
      [pa, axis](TensorNode<Scalar>& self) {
        const Index r = pa->value.rows();
        const Index c = pa->value.cols();
        if (axis == 0) {
          pa->accumulate(self.grad.replicate(r, 1) / Scalar(r));
        } else {
          pa->accumulate(self.grad.replicate(1, c) / Scalar(c));
        }
      });
}

/// Mean over rows of -sum_c target(r, c) * log softmax(logits)(r, c). The
/// target is treated as a constant distribution (usually one-hot).
template <typename Scalar>
BasicTensor<Scalar> cross_entropy(const BasicTensor<Scalar>& logits, const RowMatrix<Scalar>& target) {
  if (logits.rows() != target.rows() || logits.cols() != target.cols()) {
    throw DimensionError("cross_entropy: logits " + logits.shape_string() +
                         " vs target " + detail::shape_str(target.rows(), target.cols()));
  }
  if (logits.rows() == 0) throw DimensionError("cross_entropy on zero rows");
  RowMatrix<Scalar> logp = detail::log_softmax_rows<Scalar>(logits.value());
  RowMatrix<Scalar> out(1, 1);
  out(0, 0) = -(target.cwiseProduct(logp)).sum() / Scalar(logits.rows());
  auto* pl = logits.node().get();
  return detail::make_result<Scalar>(std::move(out), {logits.node()},
      [pl, target, logp = std::move(logp)](TensorNode<Scalar>& self) {
        RowMatrix<Scalar> p = logp.array().exp();
        RowMatrix<Scalar> g = (p.array().colwise() * target.rowwise().sum().array()).matrix() - target;
        pl->accumulate(g * (self.grad(0, 0) / Scalar(pl->value.rows())));
      });
}

template <typename Scalar>
BasicTensor<Scalar> cross_entropy(const BasicTensor<Scalar>& logits, const BasicTensor<Scalar>& target) {
  return cross_entropy(logits, target.value());
}

/// Mean squared difference over all elements.
template <typename Scalar>
BasicTensor<Scalar> mse(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("mse: " + a.shape_string() + " vs " + b.shape_string());
  }
  if (a.size() == 0) throw DimensionError("mse of empty tensors");
  RowMatrix<Scalar> diff = a.value() - b.value();
  RowMatrix<Scalar> out(1, 1);
  out(0, 0) = diff.squaredNorm() / Scalar(diff.size());
  auto* pa = a.node().get();
  auto* pb = b.node().get();
  return detail::make_result<Scalar>(std::move(out), {a.node(), b.node()},
      [pa, pb, diff = std::move(diff)](TensorNode<Scalar>& self) {
        const Scalar k = Scalar(2) * self.grad(0, 0) / Scalar(diff.size());
        if (pa->requires_grad) pa->accumulate(diff * k);
        if (pb->requires_grad) pb->accumulate(diff * (-k));
      });
}

/// x W + b with b broadcast over rows.
template <typename Scalar>
BasicTensor<Scalar> linear(const BasicTensor<Scalar>& x, const BasicTensor<Scalar>& w,
                           const BasicTensor<Scalar>& b) {
  return add(matmul(x, w), b);
}

// ---------------------------------------------------------------------------
// Backward pass.

/// Fills grads of every parameter reachable from the scalar `loss`.
/// Parameter gradients accumulate across calls until zeroed.
template <typename Scalar>
void backward(const BasicTensor<Scalar>& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ArgumentError("backward needs a scalar loss, got " + loss.shape_string());
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<TensorNode<Scalar>*> order;
  std::unordered_set<TensorNode<Scalar>*> seen;
  std::vector<std::pair<TensorNode<Scalar>*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      auto* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  for (auto* node : order) {
    if (!node->is_leaf) node->grad = RowMatrix<Scalar>::Zero(node->value.rows(), node->value.cols());
  }
  loss.node()->accumulate(RowMatrix<Scalar>::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->pullback) (*it)->pullback(**it);
  }
}

// ---------------------------------------------------------------------------
// Adam.

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
};

/// Bias-corrected Adam over a fixed parameter list.
template <typename Scalar>
class BasicAdam {
 public:
  using Matrix = RowMatrix<Scalar>;

  BasicAdam(std::vector<BasicTensor<Scalar>> params, AdamOptions options)
      : params_(std::move(params)), options_(options) {
    for (const auto& p : params_) {
      first_.push_back(Matrix::Zero(p.rows(), p.cols()));
      second_.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }

  void step() {
    for (const auto& p : params_) {
      if (!p.has_grad()) {
        throw StateError("adam step: parameter " + p.shape_string() + " has no gradient");
      }
    }
    Scalar clip = Scalar(1);
    if (options_.clip_norm > 0) {
      Scalar norm2 = 0;
      for (const auto& p : params_) norm2 += p.node()->grad.squaredNorm();
      const Scalar norm = std::sqrt(norm2);
      if (norm > options_.clip_norm) clip = Scalar(options_.clip_norm) / norm;
    }
    ++steps_;
    const Scalar b1 = options_.beta1;
    const Scalar b2 = options_.beta2;
    const Scalar c1 = Scalar(1) - std::pow(b1, Scalar(steps_));
    const Scalar c2 = Scalar(1) - std::pow(b2, Scalar(steps_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const Matrix g = params_[i].node()->grad * clip;
      first_[i] = b1 * first_[i] + (Scalar(1) - b1) * g;
      second_[i] = b2 * second_[i] + (Scalar(1) - b2) * g.cwiseAbs2();
      auto& w = params_[i].mutable_value();
      w.array() -= Scalar(options_.lr) * (first_[i].array() / c1) /
                   ((second_[i].array() / c2).sqrt() + Scalar(options_.eps));
    }
  }

  void zero_grad() {
    for (auto& p : params_) {
      if (p.has_grad()) {
        p.zero_grad();
      } else {
        p.node()->grad = Matrix::Zero(p.rows(), p.cols());
      }
    }
  }

  long step_count() const { return steps_; }
  AdamOptions& options() { return options_; }
  const std::vector<Matrix>& first_moments() const { return first_; }
  const std::vector<Matrix>& second_moments() const { return second_; }

 private:
  std::vector<BasicTensor<Scalar>> params_;
  AdamOptions options_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  long steps_ = 0;
};

using Adam = BasicAdam<double>;

}  // namespace sgdiff

#endif  // SGDIFF_TENSOR_HPP
