// Copyright 2026 The xmer authors
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
#include <functional>
#include <memory>
#include <vector>

#include "xmer/error.hpp"
#include "xmer/random.hpp"

namespace xmer {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense row-major 64-bit tensor with reverse-mode automatic
/// differentiation.
///
/// Tensors built by the free-function operations below record their parents
/// and a backward closure; calling backward() on a scalar result runs the
/// tape in reverse topological order and accumulates gradients into every
/// node that requires them. Nodes whose parents all have requires_grad ==
/// false carry no tape at all, so inference-time evaluation allocates no
/// graph.
///
/// All forward computations are deterministic functions of their inputs
/// plus an explicit RandomState; there is no shared mutable state, so
/// distinct graphs may be evaluated concurrently.
class Tensor : public std::enable_shared_from_this<Tensor> {
 public:
  using BackwardFn = std::function<void(Tensor&)>;

  static TensorPtr create(std::vector<std::size_t> shape,
                          std::vector<double> values,
                          bool requires_grad = false);
  static TensorPtr scalar(double v, bool requires_grad = false);
  static TensorPtr vector(std::vector<double> v, bool requires_grad = false);
  static TensorPtr matrix(std::size_t rows, std::size_t cols,
                          std::vector<double> v, bool requires_grad = false);
  static TensorPtr zeros(std::vector<std::size_t> shape,
                         bool requires_grad = false);
  static TensorPtr full(std::vector<std::size_t> shape, double v,
                        bool requires_grad = false);
  static TensorPtr identity(std::size_t d);

  /// Used by operation implementations: wires parents and the backward
  /// closure, dropping both when no parent requires a gradient.
  static TensorPtr make_op(std::vector<std::size_t> shape,
                           std::vector<double> values,
                           std::vector<TensorPtr> parents,
                           BackwardFn backward);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const { return v_.size(); }
  bool is_scalar() const { return v_.size() == 1 && shape_.size() <= 1; }
  bool is_vector() const { return shape_.size() == 1; }
  bool is_matrix() const { return shape_.size() == 2; }
  std::size_t rows() const;
  std::size_t cols() const;

  double value() const;  // scalar tensors only
  double at(std::size_t i) const { return v_[i]; }
  double at(std::size_t i, std::size_t j) const { return v_[i * cols() + j]; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& mutable_values() { return v_; }

  bool requires_grad() const { return requires_grad_; }
  /// Gradient storage, allocated (zero-filled) on first access.
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  void zero_grad();

  /// Reverse-mode sweep from a scalar root. Seeds d(root)/d(root) = 1 and
  /// visits the tape once in reverse topological order.
  void backward();

 private:
  Tensor() = default;

  std::vector<std::size_t> shape_;
  std::vector<double> v_;
  mutable std::vector<double> g_;
  bool requires_grad_ = false;
  std::vector<TensorPtr> parents_;
  BackwardFn backward_;
};

std::size_t shape_count(const std::vector<std::size_t>& shape);

// ---------------------------------------------------------------------------
// Elementwise and structural operations. Each returns a new node; gradients
// are defined everywhere stated in the comments.
// ---------------------------------------------------------------------------

TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr divide(const TensorPtr& a, const TensorPtr& b);
TensorPtr neg(const TensorPtr& a);
TensorPtr scale(const TensorPtr& a, double c);
TensorPtr add_scalar(const TensorPtr& a, double c);

/// Elementwise log; inputs must be strictly positive.
TensorPtr log(const TensorPtr& a);
/// Elementwise natural softplus log(1 + e^x), stable for large |x|.
TensorPtr softplus(const TensorPtr& a);
TensorPtr sigmoid(const TensorPtr& a);
TensorPtr tanh(const TensorPtr& a);
/// max(x, 0) with subgradient 0 at the kink.
TensorPtr relu(const TensorPtr& a);
/// Elementwise square.
TensorPtr square(const TensorPtr& a);
/// sqrt(max(x, floor)); gradient is 0 where the floor is active or the
/// result is 0, 1/(2 sqrt(x)) elsewhere.
TensorPtr sqrt_clamped(const TensorPtr& a, double floor);

/// Sum of all elements -> scalar.
TensorPtr sum(const TensorPtr& a);
/// Mean of all elements -> scalar.
TensorPtr mean(const TensorPtr& a);
/// Mean absolute difference -> scalar; sign subgradient at zero is 0.
TensorPtr mean_abs_error(const TensorPtr& pred, const TensorPtr& target);

/// Inverted dropout: training=false or rate=0 is the identity; otherwise
/// each element is zeroed with probability `rate` and survivors are scaled
/// by 1/(1-rate). Masks are drawn from `rng` in element order.
TensorPtr dropout(const TensorPtr& a, double rate, RandomState& rng,
                  bool training);

/// Column-wise arithmetic mean of a [T x k] matrix -> [k].
TensorPtr mean_over_time(const TensorPtr& seq);
/// Vector concatenation [p] ++ [q] -> [p+q].
TensorPtr concat(const TensorPtr& a, const TensorPtr& b);
/// Contiguous vector slice.
TensorPtr slice(const TensorPtr& v, std::size_t start, std::size_t len);
/// Row i of a matrix as a [1 x k] matrix.
TensorPtr row_of(const TensorPtr& m, std::size_t i);
/// Stack vectors of equal length into an [N x d] matrix.
TensorPtr stack_rows(const std::vector<TensorPtr>& rows);
/// Vertically concatenate matrices with equal column counts.
TensorPtr concat_rows(const std::vector<TensorPtr>& blocks);
/// Horizontally concatenate two matrices with equal row counts.
TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b);
/// Row permutation: out[i] = m[perm[i]].
TensorPtr permute_rows(const TensorPtr& m, const std::vector<std::size_t>& perm);

// ---------------------------------------------------------------------------
// Linear maps.
// ---------------------------------------------------------------------------

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(const TensorPtr& a);
/// W[m x n] . x[n] + b[m] -> [m].
TensorPtr affine(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);
/// Batched affine over rows: X[N x n] W^T + b -> [N x m].
TensorPtr linear_rows(const TensorPtr& x, const TensorPtr& w,
                      const TensorPtr& b);

}  // namespace xmer
