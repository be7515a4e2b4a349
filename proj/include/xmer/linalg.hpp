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

#include <utility>
#include <vector>

#include "xmer/tensor.hpp"

namespace xmer {

/// Plain (non-differentiating) cyclic Jacobi eigendecomposition of a
/// symmetric d x d matrix stored row-major. Outputs eigenvalues in
/// ascending order and eigenvectors as the columns of `vecs`, with each
/// column's largest-magnitude entry made positive so results are
/// reproducible. Throws NumericError on non-convergence.
void jacobi_eigh(const std::vector<double>& s, std::size_t d,
                 std::vector<double>& vals, std::vector<double>& vecs);

/// Sample covariance (1/(N-1)) Xc^T Xc + ridge I of an [N x d] batch,
/// columns centered. N >= 2. The result is exactly symmetric (the lower
/// triangle is mirrored from the upper one).
TensorPtr centered_covariance(const TensorPtr& x, double ridge);

/// Cross-covariance (1/(N-1)) Xc^T Yc of two [N x p], [N x q] batches with
/// matched rows; no ridge term.
TensorPtr cross_covariance(const TensorPtr& x, const TensorPtr& y);

/// Eigendecomposition of a symmetric matrix: S = V diag(vals) V^T with
/// eigenvalues ascending. Input must be symmetric within an absolute
/// tolerance of 1e-9 (scaled by max(1, max|S|)).
///
/// The gradient uses the standard eigenvector-perturbation formula; it is
/// valid only when eigenvalue gaps exceed ~1e-8, and fixtures with smaller
/// gaps are rejected in the gradient-check suites rather than special-cased.
std::pair<TensorPtr, TensorPtr> sym_eig(const TensorPtr& s);

/// V diag(w) V^T with an exactly symmetric result.
TensorPtr reconstruct_sym(const TensorPtr& vecs, const TensorPtr& w);

/// Inverse matrix square root of a PSD matrix:
/// V diag(max(vals, floor))^(-1/2) V^T. Eigenvalues below -1e-9 (scaled)
/// raise NumericError; a zero eigenvalue with floor = 0 does too.
TensorPtr inv_sqrt_psd(const TensorPtr& s, double floor);

/// Sum of the k largest singular values of a square matrix, computed via
/// sym_eig(T^T T); singular values are sqrt of eigenvalues clamped at 0.
TensorPtr singular_value_sum(const TensorPtr& t, std::size_t k);

}  // namespace xmer
