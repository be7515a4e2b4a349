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
//
// Test-only reference implementations. These deliberately take different
// algorithmic routes than the library (Cholesky whitening + one-sided
// Jacobi SVD instead of symmetric eigendecompositions, Gaussian
// elimination for dense inverses) so they can serve as independent
// oracles.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace xmer::test {

using Mat = std::vector<double>;  // row-major

// Plain double-loop sample covariance with optional ridge.
inline Mat brute_covariance(const Mat& x, std::size_t n, std::size_t d,
                            double ridge) {
  std::vector<double> mu(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mu[j] += x[i * d + j];
  for (double& m : mu) m /= static_cast<double>(n);
  Mat c(d * d, 0.0);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += (x[i * d + a] - mu[a]) * (x[i * d + b] - mu[b]);
      c[a * d + b] = s / static_cast<double>(n - 1);
    }
  for (std::size_t a = 0; a < d; ++a) c[a * d + a] += ridge;
  return c;
}

inline Mat brute_cross_covariance(const Mat& x, const Mat& y, std::size_t n,
                                  std::size_t p, std::size_t q) {
  std::vector<double> mx(p, 0.0), my(q, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) mx[j] += x[i * p + j];
    for (std::size_t j = 0; j < q; ++j) my[j] += y[i * q + j];
  }
  for (double& m : mx) m /= static_cast<double>(n);
  for (double& m : my) m /= static_cast<double>(n);
  Mat c(p * q, 0.0);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < q; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += (x[i * p + a] - mx[a]) * (y[i * q + b] - my[b]);
      c[a * q + b] = s / static_cast<double>(n - 1);
    }
  return c;
}

// Lower-triangular Cholesky factor of a PD matrix.
inline Mat cholesky(const Mat& s, std::size_t d) {
  Mat l(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = s[i * d + j];
      for (std::size_t k = 0; k < j; ++k) sum -= l[i * d + k] * l[j * d + k];
      if (i == j) {
        if (sum <= 0.0) throw std::runtime_error("cholesky: not PD");
        l[i * d + i] = std::sqrt(sum);
      } else {
        l[i * d + j] = sum / l[j * d + j];
      }
    }
  }
  return l;
}

// Solves L z = b for lower-triangular L.
inline std::vector<double> forward_solve(const Mat& l, std::size_t d,
                                         const std::vector<double>& b) {
  std::vector<double> z(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double sum = b[i];
    for (std::size_t k = 0; k < i; ++k) sum -= l[i * d + k] * z[k];
    z[i] = sum / l[i * d + i];
  }
  return z;
}

// Singular values via one-sided Jacobi column orthogonalization,
// descending.
inline std::vector<double> jacobi_svd_values(Mat a, std::size_t rows,
                                             std::size_t cols) {
  if (rows < cols) {
    // work on the transpose so columns are the short side
    Mat t(cols * rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
    std::swap(a, t);
    std::swap(rows, cols);
  }
  auto col_dot = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += a[r * cols + i] * a[r * cols + j];
    return s;
  };
  bool changed = true;
  int sweeps = 0;
  while (changed && sweeps++ < 60) {
    changed = false;
    for (std::size_t i = 0; i + 1 < cols; ++i) {
      for (std::size_t j = i + 1; j < cols; ++j) {
        const double aii = col_dot(i, i), ajj = col_dot(j, j), aij = col_dot(i, j);
        if (std::abs(aij) <= 1e-15 * std::sqrt(aii * ajj) + 1e-300) continue;
        changed = true;
        const double tau = (ajj - aii) / (2.0 * aij);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (std::size_t r = 0; r < rows; ++r) {
          const double vi = a[r * cols + i], vj = a[r * cols + j];
          a[r * cols + i] = c * vi - sn * vj;
          a[r * cols + j] = sn * vi + c * vj;
        }
      }
    }
  }
  std::vector<double> sv(cols);
  for (std::size_t j = 0; j < cols; ++j) sv[j] = std::sqrt(col_dot(j, j));
  std::sort(sv.rbegin(), sv.rend());
  return sv;
}

// Closed-form canonical correlations between [n x p] and [n x q] batches:
// Cholesky-whitened cross-covariance, singular values by one-sided Jacobi.
inline std::vector<double> closed_form_cca(const Mat& x, const Mat& y,
                                           std::size_t n, std::size_t p,
                                           std::size_t q, double ridge) {
  Mat sxx = brute_covariance(x, n, p, ridge);
  Mat syy = brute_covariance(y, n, q, ridge);
  Mat sxy = brute_cross_covariance(x, y, n, p, q);
  Mat lx = cholesky(sxx, p);
  Mat ly = cholesky(syy, q);
  // T = Lx^{-1} Sxy Ly^{-T}: forward-solve per column, then per row.
  Mat t(p * q, 0.0);
  for (std::size_t col = 0; col < q; ++col) {
    std::vector<double> b(p);
    for (std::size_t i = 0; i < p; ++i) b[i] = sxy[i * q + col];
    auto z = forward_solve(lx, p, b);
    for (std::size_t i = 0; i < p; ++i) t[i * q + col] = z[i];
  }
  for (std::size_t row = 0; row < p; ++row) {
    std::vector<double> b(q);
    for (std::size_t j = 0; j < q; ++j) b[j] = t[row * q + j];
    auto z = forward_solve(ly, q, b);  // (Ly^{-1} t_row^T)^T = t_row Ly^{-T}
    for (std::size_t j = 0; j < q; ++j) t[row * q + j] = z[j];
  }
  auto sv = jacobi_svd_values(t, p, q);
  sv.resize(std::min(p, q));
  return sv;
}

// Dense inverse and log-determinant by Gaussian elimination with partial
// pivoting; the determinant must be positive (covariance use only).
inline void invert_logdet(Mat a, std::size_t d, Mat& inv, double& logdet) {
  inv.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) inv[i * d + i] = 1.0;
  logdet = 0.0;
  double sign = 1.0;
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::abs(a[r * d + col]) > std::abs(a[piv * d + col])) piv = r;
    if (piv != col) {
      for (std::size_t j = 0; j < d; ++j) {
        std::swap(a[piv * d + j], a[col * d + j]);
        std::swap(inv[piv * d + j], inv[col * d + j]);
      }
      sign = -sign;
    }
    const double diag = a[col * d + col];
    if (diag == 0.0) throw std::runtime_error("invert_logdet: singular");
    logdet += std::log(std::abs(diag));
    if (diag < 0.0) sign = -sign;
    const double inv_diag = 1.0 / diag;
    for (std::size_t j = 0; j < d; ++j) {
      a[col * d + j] *= inv_diag;
      inv[col * d + j] *= inv_diag;
    }
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = a[r * d + col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) {
        a[r * d + j] -= f * a[col * d + j];
        inv[r * d + j] -= f * inv[col * d + j];
      }
    }
  }
  if (sign < 0.0) throw std::runtime_error("invert_logdet: negative det");
}

// Full-matrix Gaussian KL divergence:
// 0.5 { tr(S2^-1 S1) - d + ln det S2 - ln det S1 + (m2-m1)^T S2^-1 (m2-m1) }
inline double dense_kl(const std::vector<double>& mu1, const Mat& s1,
                       const std::vector<double>& mu2, const Mat& s2,
                       std::size_t d) {
  Mat inv2;
  double logdet2 = 0.0;
  invert_logdet(s2, d, inv2, logdet2);
  Mat inv1_unused;
  double logdet1 = 0.0;
  invert_logdet(s1, d, inv1_unused, logdet1);
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) trace += inv2[i * d + k] * s1[k * d + i];
  double quad = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      quad += (mu2[i] - mu1[i]) * inv2[i * d + j] * (mu2[j] - mu1[j]);
  return 0.5 * (trace - static_cast<double>(d) + logdet2 - logdet1 + quad);
}

}  // namespace xmer::test
