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

#include "xmer/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xmer {

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_symmetric(const TensorPtr& s, const char* op) {
  if (!s->is_matrix() || s->rows() != s->cols()) {
    throw DimensionError(std::string(op) + ": expected a square matrix");
  }
  const std::size_t d = s->rows();
  const double tol = 1e-9 * std::max(1.0, max_abs(s->values()));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      if (std::abs(s->at(i, j) - s->at(j, i)) > tol) {
        throw NumericError(std::string(op) + ": input is not symmetric");
      }
    }
  }
}

}  // namespace

void jacobi_eigh(const std::vector<double>& s, std::size_t d,
                 std::vector<double>& vals, std::vector<double>& vecs) {
  std::vector<double> a(s);  // working copy, mutated in place
  vecs.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) vecs[i * d + i] = 1.0;

  auto off_norm = [&]() {
    double sum = 0.0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) sum += a[p * d + q] * a[p * d + q];
    return std::sqrt(2.0 * sum);
  };

  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  const double stop = 1e-14 * std::max(scale, 1e-300) * static_cast<double>(d);

  const int kMaxSweeps = 100;
  int sweep = 0;
  while (off_norm() > stop) {
    if (++sweep > kMaxSweeps) {
      throw NumericError("jacobi_eigh: did not converge");
    }
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a[p * d + q];
        if (apq == 0.0) continue;
        const double app = a[p * d + p], aqq = a[q * d + q];
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (std::size_t i = 0; i < d; ++i) {
          const double aip = a[i * d + p], aiq = a[i * d + q];
          a[i * d + p] = c * aip - sn * aiq;
          a[i * d + q] = sn * aip + c * aiq;
        }
        for (std::size_t i = 0; i < d; ++i) {
          const double api = a[p * d + i], aqi = a[q * d + i];
          a[p * d + i] = c * api - sn * aqi;
          a[q * d + i] = sn * api + c * aqi;
        }
        for (std::size_t i = 0; i < d; ++i) {
          const double vip = vecs[i * d + p], viq = vecs[i * d + q];
          vecs[i * d + p] = c * vip - sn * viq;
          vecs[i * d + q] = sn * vip + c * viq;
        }
      }
    }
  }

  // Sort ascending and fix each eigenvector's sign.
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return a[i * d + i] < a[j * d + j];
  });
  vals.resize(d);
  std::vector<double> sorted(d * d);
  for (std::size_t col = 0; col < d; ++col) {
    const std::size_t from = idx[col];
    vals[col] = a[from * d + from];
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double x = std::abs(vecs[i * d + from]);
      if (x > best) {
        best = x;
        arg = i;
      }
    }
    const double flip = vecs[arg * d + from] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < d; ++i)
      sorted[i * d + col] = flip * vecs[i * d + from];
  }
  vecs.swap(sorted);
}

TensorPtr centered_covariance(const TensorPtr& x, double ridge) {
  if (!x->is_matrix()) {
    throw DimensionError("centered_covariance: expected an [N x d] matrix");
  }
  if (ridge < 0.0) {
    throw InvalidArgument("centered_covariance: negative ridge");
  }
  const std::size_t n = x->rows(), d = x->cols();
  if (n < 2) {
    throw InvalidArgument("centered_covariance: needs at least 2 samples");
  }
  std::vector<double> mu(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mu[j] += x->at(i, j);
  for (double& m : mu) m /= static_cast<double>(n);
  std::vector<double> xc(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) xc[i * d + j] = x->at(i, j) - mu[j];

  const double inv = 1.0 / static_cast<double>(n - 1);
  std::vector<double> out(d * d, 0.0);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += xc[i * d + a] * xc[i * d + b];
      s *= inv;
      if (a == b) s += ridge;
      out[a * d + b] = s;
      out[b * d + a] = s;  // mirrored, exactly symmetric
    }
  }
  Tensor* px = x.get();
  return Tensor::make_op(
      {d, d}, std::move(out), {x},
      [px, xc = std::move(xc), n, d, inv](Tensor& self) {
        if (!px->requires_grad()) return;
        // dX = (1/(N-1)) Xc (G + G^T); the centering term vanishes because
        // Xc columns sum to zero.
        const auto& up = self.grad();
        auto& g = px->grad();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t c = 0; c < d; ++c) {
            double s = 0.0;
            for (std::size_t b = 0; b < d; ++b)
              s += (up[c * d + b] + up[b * d + c]) * xc[i * d + b];
            g[i * d + c] += inv * s;
          }
        }
      });
}

TensorPtr cross_covariance(const TensorPtr& x, const TensorPtr& y) {
  if (!x->is_matrix() || !y->is_matrix() || x->rows() != y->rows()) {
    throw DimensionError("cross_covariance: row counts must match");
  }
  const std::size_t n = x->rows(), p = x->cols(), q = y->cols();
  if (n < 2) {
    throw InvalidArgument("cross_covariance: needs at least 2 samples");
  }
  const double inv = 1.0 / static_cast<double>(n - 1);
  auto center = [n](const TensorPtr& m, std::size_t w) {
    std::vector<double> mu(w, 0.0), out(n * w);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) mu[j] += m->at(i, j);
    for (double& v : mu) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * w + j] = m->at(i, j) - mu[j];
    return out;
  };
  std::vector<double> xc = center(x, p), yc = center(y, q);
  std::vector<double> out(p * q, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a) {
      const double xa = xc[i * p + a];
      for (std::size_t b = 0; b < q; ++b) out[a * q + b] += xa * yc[i * q + b];
    }
  for (double& v : out) v *= inv;
  Tensor *px = x.get(), *py = y.get();
  return Tensor::make_op(
      {p, q}, std::move(out), {x, y},
      [px, py, xc = std::move(xc), yc = std::move(yc), n, p, q,
       inv](Tensor& self) {
        const auto& up = self.grad();
        if (px->requires_grad()) {
          auto& g = px->grad();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < p; ++a) {
              double s = 0.0;
              for (std::size_t b = 0; b < q; ++b)
                s += up[a * q + b] * yc[i * q + b];
              g[i * p + a] += inv * s;
            }
        }
        if (py->requires_grad()) {
          auto& g = py->grad();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t b = 0; b < q; ++b) {
              double s = 0.0;
              for (std::size_t a = 0; a < p; ++a)
                s += up[a * q + b] * xc[i * p + a];
              g[i * q + b] += inv * s;
            }
        }
      });
}

std::pair<TensorPtr, TensorPtr> sym_eig(const TensorPtr& s) {
  check_symmetric(s, "sym_eig");
  const std::size_t d = s->rows();
  // Work on the exactly symmetrized copy.
  std::vector<double> sym(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      sym[i * d + j] = 0.5 * (s->at(i, j) + s->at(j, i));
  std::vector<double> vals, vecs;
  jacobi_eigh(sym, d, vals, vecs);

  Tensor* ps = s.get();
  // dS from eigenvalue gradients: V diag(dvals) V^T (already symmetric).
  auto val_node = Tensor::make_op(
      {d}, std::vector<double>(vals), {s}, [ps, vecs, d](Tensor& self) {
        if (!ps->requires_grad()) return;
        const auto& dv = self.grad();
        auto& g = ps->grad();
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k)
              acc += dv[k] * vecs[i * d + k] * vecs[j * d + k];
            g[i * d + j] += acc;
          }
      });
  // dS from eigenvector gradients: sym(V (F o (V^T dV)) V^T) with
  // F_ij = 1/(vals_j - vals_i) off the diagonal.
  auto vec_node = Tensor::make_op(
      {d, d}, std::vector<double>(vecs), {s},
      [ps, vals, vecs, d](Tensor& self) {
        if (!ps->requires_grad()) return;
        const auto& dv = self.grad();
        std::vector<double> inner(d * d, 0.0);  // F o (V^T dV)
        for (std::size_t i = 0; i < d; ++i) {
          for (std::size_t j = 0; j < d; ++j) {
            if (i == j) continue;
            double s_ij = 0.0;
            for (std::size_t k = 0; k < d; ++k)
              s_ij += vecs[k * d + i] * dv[k * d + j];
            inner[i * d + j] = s_ij / (vals[j] - vals[i]);
          }
        }
        std::vector<double> tmp(d * d, 0.0);  // V . inner
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t k = 0; k < d; ++k) {
            const double vik = vecs[i * d + k];
            if (vik == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j)
              tmp[i * d + j] += vik * inner[k * d + j];
          }
        auto& g = ps->grad();
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) {
            double a_ij = 0.0, a_ji = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
              a_ij += tmp[i * d + k] * vecs[j * d + k];
              a_ji += tmp[j * d + k] * vecs[i * d + k];
            }
            g[i * d + j] += 0.5 * (a_ij + a_ji);
          }
      });
  return {val_node, vec_node};
}

TensorPtr reconstruct_sym(const TensorPtr& vecs, const TensorPtr& w) {
  if (!vecs->is_matrix() || vecs->rows() != vecs->cols() || !w->is_vector() ||
      w->size() != vecs->rows()) {
    throw DimensionError("reconstruct_sym: shapes do not conform");
  }
  const std::size_t d = vecs->rows();
  std::vector<double> out(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k)
        s += vecs->at(i, k) * w->at(k) * vecs->at(j, k);
      out[i * d + j] = s;
      out[j * d + i] = s;
    }
  }
  Tensor *pv = vecs.get(), *pw = w.get();
  return Tensor::make_op(
      {d, d}, std::move(out), {vecs, w}, [pv, pw, d](Tensor& self) {
        const auto& up = self.grad();
        // Fold the upstream gradient to its symmetric part first.
        std::vector<double> m(d * d);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j)
            m[i * d + j] = 0.5 * (up[i * d + j] + up[j * d + i]);
        if (pv->requires_grad()) {
          // dV = 2 M V diag(w)
          auto& g = pv->grad();
          for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = 0; k < d; ++k) {
              double s = 0.0;
              for (std::size_t j = 0; j < d; ++j)
                s += m[i * d + j] * pv->at(j, k);
              g[i * d + k] += 2.0 * s * pw->at(k);
            }
        }
        if (pw->requires_grad()) {
          // dw_k = v_k^T M v_k
          auto& g = pw->grad();
          for (std::size_t k = 0; k < d; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
              double vi = pv->at(i, k);
              for (std::size_t j = 0; j < d; ++j)
                s += vi * m[i * d + j] * pv->at(j, k);
            }
            g[k] += s;
          }
        }
      });
}

TensorPtr inv_sqrt_psd(const TensorPtr& s, double floor) {
  if (floor < 0.0) throw InvalidArgument("inv_sqrt_psd: negative floor");
  auto [vals, vecs] = sym_eig(s);
  const std::size_t d = vals->size();
  const double lam_max = max_abs(vals->values());
  const double neg_tol = 1e-9 * std::max(1.0, lam_max);
  for (std::size_t i = 0; i < d; ++i) {
    const double lam = vals->at(i);
    if (lam < -neg_tol) {
      throw NumericError("inv_sqrt_psd: matrix is not PSD (eigenvalue " +
                         std::to_string(lam) + ")");
    }
    if (std::max(lam, floor) <= 0.0) {
      throw NumericError(
          "inv_sqrt_psd: zero eigenvalue with zero floor; raise the floor "
          "or regularize the input");
    }
  }
  // w = max(vals, floor)^(-1/2), built from differentiable pieces:
  // sqrt(max(vals, floor)) then reciprocal.
  auto root = sqrt_clamped(vals, floor);
  auto w = divide(Tensor::full({d}, 1.0), root);
  return reconstruct_sym(vecs, w);
}

TensorPtr singular_value_sum(const TensorPtr& t, std::size_t k) {
  if (!t->is_matrix() || t->rows() != t->cols()) {
    throw DimensionError("singular_value_sum: expected a square matrix");
  }
  const std::size_t d = t->rows();
  if (k < 1 || k > d) {
    throw InvalidArgument("singular_value_sum: k out of range");
  }
  auto gram = matmul(transpose(t), t);  // exactly symmetric by construction
  auto [vals, vecs] = sym_eig(gram);
  (void)vecs;
  // Eigenvalues are ascending, so the k largest are the trailing slice.
  auto top = slice(vals, d - k, k);
  return sum(sqrt_clamped(top, 0.0));
}

}  // namespace xmer
