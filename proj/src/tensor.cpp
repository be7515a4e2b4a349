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

#include "xmer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>

namespace xmer {

std::size_t shape_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

void check_same_shape(const TensorPtr& a, const TensorPtr& b,
                      const char* op) {
  if (a->shape() != b->shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a->shape()) + " vs " +
                         shape_str(b->shape()));
  }
}

// Builds an elementwise node whose local derivative w.r.t. the single input
// is `dfdx[i]`.
TensorPtr unary_elementwise(const TensorPtr& a, std::vector<double> out,
                            std::vector<double> dfdx) {
  Tensor* pa = a.get();
  return Tensor::make_op(
      a->shape(), std::move(out), {a},
      [pa, dfdx = std::move(dfdx)](Tensor& self) {
        if (!pa->requires_grad()) return;
        auto& g = pa->grad();
        const auto& up = self.grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += up[i] * dfdx[i];
      });
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

TensorPtr Tensor::create(std::vector<std::size_t> shape,
                         std::vector<double> values, bool requires_grad) {
  if (shape_count(shape) != values.size()) {
    throw DimensionError("tensor: " + std::to_string(values.size()) +
                         " values do not fill shape " + shape_str(shape));
  }
  auto t = TensorPtr(new Tensor());
  t->shape_ = std::move(shape);
  t->v_ = std::move(values);
  t->requires_grad_ = requires_grad;
  return t;
}

TensorPtr Tensor::scalar(double v, bool requires_grad) {
  return create({}, {v}, requires_grad);
}

TensorPtr Tensor::vector(std::vector<double> v, bool requires_grad) {
  std::size_t n = v.size();
  return create({n}, std::move(v), requires_grad);
}

TensorPtr Tensor::matrix(std::size_t rows, std::size_t cols,
                         std::vector<double> v, bool requires_grad) {
  return create({rows, cols}, std::move(v), requires_grad);
}

TensorPtr Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::vector<double> v(shape_count(shape), 0.0);
  return create(std::move(shape), std::move(v), requires_grad);
}

TensorPtr Tensor::full(std::vector<std::size_t> shape, double value,
                       bool requires_grad) {
  std::vector<double> v(shape_count(shape), value);
  return create(std::move(shape), std::move(v), requires_grad);
}

TensorPtr Tensor::identity(std::size_t d) {
  std::vector<double> v(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;
  return create({d, d}, std::move(v));
}

TensorPtr Tensor::make_op(std::vector<std::size_t> shape,
                          std::vector<double> values,
                          std::vector<TensorPtr> parents,
                          BackwardFn backward) {
  bool needs = false;
  for (const auto& p : parents) needs = needs || p->requires_grad();
  auto t = create(std::move(shape), std::move(values), needs);
  if (needs) {
    t->parents_ = std::move(parents);
    t->backward_ = std::move(backward);
  }
  return t;
}

std::size_t Tensor::rows() const {
  if (!is_matrix()) throw DimensionError("rows(): tensor is not a matrix");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (!is_matrix()) throw DimensionError("cols(): tensor is not a matrix");
  return shape_[1];
}

double Tensor::value() const {
  if (v_.size() != 1) {
    throw DimensionError("value(): tensor is not a scalar");
  }
  return v_[0];
}

std::vector<double>& Tensor::grad() {
  if (g_.size() != v_.size()) g_.assign(v_.size(), 0.0);
  return g_;
}

const std::vector<double>& Tensor::grad() const {
  if (g_.size() != v_.size()) g_.assign(v_.size(), 0.0);
  return g_;
}

void Tensor::zero_grad() {
  std::fill(g_.begin(), g_.end(), 0.0);
}

void Tensor::backward() {
  if (!is_scalar()) {
    throw InvalidArgument("backward(): root must be a scalar");
  }
  // Iterative post-order DFS; recursion would overflow on long recurrences.
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> seen;
  std::vector<std::pair<Tensor*, std::size_t>> stack;
  stack.emplace_back(this, 0);
  seen.insert(this);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents_.size()) {
      Tensor* p = node->parents_[next++].get();
      if (p->requires_grad() && seen.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_) (*it)->backward_(**it);
  }
}

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a->values()[i] + b->values()[i];
  Tensor *pa = a.get(), *pb = b.get();
  return Tensor::make_op(a->shape(), std::move(out), {a, b},
                         [pa, pb](Tensor& self) {
                           const auto& up = self.grad();
                           if (pa->requires_grad()) {
                             auto& g = pa->grad();
                             for (std::size_t i = 0; i < g.size(); ++i)
                               g[i] += up[i];
                           }
                           if (pb->requires_grad()) {
                             auto& g = pb->grad();
                             for (std::size_t i = 0; i < g.size(); ++i)
                               g[i] += up[i];
                           }
                         });
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a->values()[i] - b->values()[i];
  Tensor *pa = a.get(), *pb = b.get();
  return Tensor::make_op(a->shape(), std::move(out), {a, b},
                         [pa, pb](Tensor& self) {
                           const auto& up = self.grad();
                           if (pa->requires_grad()) {
                             auto& g = pa->grad();
                             for (std::size_t i = 0; i < g.size(); ++i)
                               g[i] += up[i];
                           }
                           if (pb->requires_grad()) {
                             auto& g = pb->grad();
                             for (std::size_t i = 0; i < g.size(); ++i)
                               g[i] -= up[i];
                           }
                         });
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a->values()[i] * b->values()[i];
  Tensor *pa = a.get(), *pb = b.get();
  return Tensor::make_op(a->shape(), std::move(out), {a, b},
                         [pa, pb](Tensor& self) {
                           const auto& up = self.grad();
                           if (pa->requires_grad()) {
                             auto& g = pa->grad();
                             for (std::size_t i = 0; i < g.size(); ++i)
                               g[i] += up[i] * pb->values()[i];
                           }
                           if (pb->requires_grad()) {
                             auto& g = pb->grad();
                             for (std::size_t i = 0; i < g.size(); ++i)
                               g[i] += up[i] * pa->values()[i];
                           }
                         });
}

TensorPtr divide(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "divide");
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a->values()[i] / b->values()[i];
  Tensor *pa = a.get(), *pb = b.get();
  return Tensor::make_op(
      a->shape(), std::move(out), {a, b}, [pa, pb](Tensor& self) {
        const auto& up = self.grad();
        if (pa->requires_grad()) {
          auto& g = pa->grad();
          for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += up[i] / pb->values()[i];
        }
        if (pb->requires_grad()) {
          auto& g = pb->grad();
          for (std::size_t i = 0; i < g.size(); ++i) {
            double bi = pb->values()[i];
            g[i] -= up[i] * pa->values()[i] / (bi * bi);
          }
        }
      });
}

TensorPtr neg(const TensorPtr& a) { return scale(a, -1.0); }

TensorPtr scale(const TensorPtr& a, double c) {
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->values()[i] * c;
  Tensor* pa = a.get();
  return Tensor::make_op(a->shape(), std::move(out), {a},
                         [pa, c](Tensor& self) {
                           if (!pa->requires_grad()) return;
                           auto& g = pa->grad();
                           const auto& up = self.grad();
                           for (std::size_t i = 0; i < g.size(); ++i)
                             g[i] += up[i] * c;
                         });
}

TensorPtr add_scalar(const TensorPtr& a, double c) {
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->values()[i] + c;
  Tensor* pa = a.get();
  return Tensor::make_op(a->shape(), std::move(out), {a},
                         [pa](Tensor& self) {
                           if (!pa->requires_grad()) return;
                           auto& g = pa->grad();
                           const auto& up = self.grad();
                           for (std::size_t i = 0; i < g.size(); ++i)
                             g[i] += up[i];
                         });
}

TensorPtr log(const TensorPtr& a) {
  std::vector<double> out(a->size()), d(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a->values()[i];
    if (!(x > 0.0)) throw InvalidArgument("log: nonpositive input");
    out[i] = std::log(x);
    d[i] = 1.0 / x;
  }
  return unary_elementwise(a, std::move(out), std::move(d));
}

TensorPtr softplus(const TensorPtr& a) {
  std::vector<double> out(a->size()), d(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a->values()[i];
    // x + log1p(e^-x) for x > 0 avoids overflow; log1p(e^x) otherwise.
    out[i] = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    d[i] = x > 0.0 ? 1.0 / (1.0 + std::exp(-x))
                   : std::exp(x) / (1.0 + std::exp(x));
  }
  return unary_elementwise(a, std::move(out), std::move(d));
}

TensorPtr sigmoid(const TensorPtr& a) {
  std::vector<double> out(a->size()), d(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a->values()[i];
    double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
    out[i] = s;
    d[i] = s * (1.0 - s);
  }
  return unary_elementwise(a, std::move(out), std::move(d));
}

TensorPtr tanh(const TensorPtr& a) {
  std::vector<double> out(a->size()), d(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double t = std::tanh(a->values()[i]);
    out[i] = t;
    d[i] = 1.0 - t * t;
  }
  return unary_elementwise(a, std::move(out), std::move(d));
}

TensorPtr relu(const TensorPtr& a) {
  std::vector<double> out(a->size()), d(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a->values()[i];
    out[i] = x > 0.0 ? x : 0.0;
    d[i] = x > 0.0 ? 1.0 : 0.0;
  }
  return unary_elementwise(a, std::move(out), std::move(d));
}

TensorPtr square(const TensorPtr& a) {
  std::vector<double> out(a->size()), d(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a->values()[i];
    out[i] = x * x;
    d[i] = 2.0 * x;
  }
  return unary_elementwise(a, std::move(out), std::move(d));
}

TensorPtr sqrt_clamped(const TensorPtr& a, double floor) {
  if (floor < 0.0) throw InvalidArgument("sqrt_clamped: negative floor");
  std::vector<double> out(a->size()), d(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a->values()[i];
    double s = std::sqrt(x > floor ? x : floor);
    out[i] = s;
    d[i] = (x > floor && s > 0.0) ? 0.5 / s : 0.0;
  }
  return unary_elementwise(a, std::move(out), std::move(d));
}

TensorPtr sum(const TensorPtr& a) {
  double s = 0.0;
  for (double x : a->values()) s += x;
  Tensor* pa = a.get();
  return Tensor::make_op({}, {s}, {a}, [pa](Tensor& self) {
    if (!pa->requires_grad()) return;
    auto& g = pa->grad();
    double up = self.grad()[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += up;
  });
}

TensorPtr mean(const TensorPtr& a) {
  if (a->size() == 0) throw InvalidArgument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a->size()));
}

TensorPtr mean_abs_error(const TensorPtr& pred, const TensorPtr& target) {
  check_same_shape(pred, target, "mean_abs_error");
  const std::size_t n = pred->size();
  if (n == 0) throw InvalidArgument("mean_abs_error: empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += std::abs(pred->values()[i] - target->values()[i]);
  Tensor *pp = pred.get(), *pt = target.get();
  return Tensor::make_op(
      {}, {s / static_cast<double>(n)}, {pred, target},
      [pp, pt, n](Tensor& self) {
        double up = self.grad()[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          double diff = pp->values()[i] - pt->values()[i];
          double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
          if (pp->requires_grad()) pp->grad()[i] += up * sgn;
          if (pt->requires_grad()) pt->grad()[i] -= up * sgn;
        }
      });
}

TensorPtr dropout(const TensorPtr& a, double rate, RandomState& rng,
                  bool training) {
  if (rate < 0.0 || rate >= 1.0) {
    throw InvalidArgument("dropout: rate must lie in [0, 1)");
  }
  if (!training || rate == 0.0) return a;
  const double keep = 1.0 - rate;
  std::vector<double> mask(a->size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform01() < rate ? 0.0 : 1.0 / keep;
  }
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a->values()[i] * mask[i];
  return unary_elementwise(a, std::move(out), std::move(mask));
}

// ---------------------------------------------------------------------------
// Structural ops
// ---------------------------------------------------------------------------

TensorPtr mean_over_time(const TensorPtr& seq) {
  if (!seq->is_matrix()) {
    throw DimensionError("mean_over_time: expected a [T x k] matrix");
  }
  const std::size_t t = seq->rows(), k = seq->cols();
  if (t == 0) throw InvalidArgument("mean_over_time: empty sequence");
  std::vector<double> out(k, 0.0);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < k; ++j) out[j] += seq->at(i, j);
  for (std::size_t j = 0; j < k; ++j) out[j] /= static_cast<double>(t);
  Tensor* ps = seq.get();
  return Tensor::make_op({k}, std::move(out), {seq}, [ps, t, k](Tensor& self) {
    if (!ps->requires_grad()) return;
    auto& g = ps->grad();
    const auto& up = self.grad();
    const double inv = 1.0 / static_cast<double>(t);
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < k; ++j) g[i * k + j] += up[j] * inv;
  });
}

TensorPtr concat(const TensorPtr& a, const TensorPtr& b) {
  if (!a->is_vector() || !b->is_vector()) {
    throw DimensionError("concat: both inputs must be vectors");
  }
  std::vector<double> out;
  out.reserve(a->size() + b->size());
  out.insert(out.end(), a->values().begin(), a->values().end());
  out.insert(out.end(), b->values().begin(), b->values().end());
  Tensor *pa = a.get(), *pb = b.get();
  const std::size_t na = a->size();
  return Tensor::make_op(
      {a->size() + b->size()}, std::move(out), {a, b},
      [pa, pb, na](Tensor& self) {
        const auto& up = self.grad();
        if (pa->requires_grad()) {
          auto& g = pa->grad();
          for (std::size_t i = 0; i < na; ++i) g[i] += up[i];
        }
        if (pb->requires_grad()) {
          auto& g = pb->grad();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += up[na + i];
        }
      });
}

TensorPtr slice(const TensorPtr& v, std::size_t start, std::size_t len) {
  if (!v->is_vector()) throw DimensionError("slice: expected a vector");
  if (start + len > v->size()) throw DimensionError("slice: out of range");
  std::vector<double> out(v->values().begin() + start,
                          v->values().begin() + start + len);
  Tensor* pv = v.get();
  return Tensor::make_op({len}, std::move(out), {v},
                         [pv, start, len](Tensor& self) {
                           if (!pv->requires_grad()) return;
                           auto& g = pv->grad();
                           const auto& up = self.grad();
                           for (std::size_t i = 0; i < len; ++i)
                             g[start + i] += up[i];
                         });
}

TensorPtr row_of(const TensorPtr& m, std::size_t i) {
  const std::size_t k = m->cols();
  if (i >= m->rows()) throw DimensionError("row_of: row out of range");
  std::vector<double> out(m->values().begin() + i * k,
                          m->values().begin() + (i + 1) * k);
  Tensor* pm = m.get();
  return Tensor::make_op({1, k}, std::move(out), {m},
                         [pm, i, k](Tensor& self) {
                           if (!pm->requires_grad()) return;
                           auto& g = pm->grad();
                           const auto& up = self.grad();
                           for (std::size_t j = 0; j < k; ++j)
                             g[i * k + j] += up[j];
                         });
}

TensorPtr stack_rows(const std::vector<TensorPtr>& rows) {
  if (rows.empty()) throw InvalidArgument("stack_rows: no rows");
  const std::size_t d = rows[0]->size();
  std::vector<double> out;
  out.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (!r->is_vector() || r->size() != d) {
      throw DimensionError("stack_rows: rows must be equal-length vectors");
    }
    out.insert(out.end(), r->values().begin(), r->values().end());
  }
  std::vector<Tensor*> raw;
  raw.reserve(rows.size());
  for (const auto& r : rows) raw.push_back(r.get());
  return Tensor::make_op(
      {rows.size(), d}, std::move(out), rows, [raw, d](Tensor& self) {
        const auto& up = self.grad();
        for (std::size_t i = 0; i < raw.size(); ++i) {
          if (!raw[i]->requires_grad()) continue;
          auto& g = raw[i]->grad();
          for (std::size_t j = 0; j < d; ++j) g[j] += up[i * d + j];
        }
      });
}

TensorPtr concat_rows(const std::vector<TensorPtr>& blocks) {
  if (blocks.empty()) throw InvalidArgument("concat_rows: no blocks");
  const std::size_t d = blocks[0]->cols();
  std::size_t n = 0;
  for (const auto& b : blocks) {
    if (b->cols() != d) {
      throw DimensionError("concat_rows: column count mismatch");
    }
    n += b->rows();
  }
  std::vector<double> out;
  out.reserve(n * d);
  std::vector<std::size_t> offsets;
  for (const auto& b : blocks) {
    offsets.push_back(out.size());
    out.insert(out.end(), b->values().begin(), b->values().end());
  }
  std::vector<Tensor*> raw;
  for (const auto& b : blocks) raw.push_back(b.get());
  return Tensor::make_op(
      {n, d}, std::move(out), blocks, [raw, offsets](Tensor& self) {
        const auto& up = self.grad();
        for (std::size_t i = 0; i < raw.size(); ++i) {
          if (!raw[i]->requires_grad()) continue;
          auto& g = raw[i]->grad();
          for (std::size_t j = 0; j < g.size(); ++j)
            g[j] += up[offsets[i] + j];
        }
      });
}

TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b) {
  if (!a->is_matrix() || !b->is_matrix() || a->rows() != b->rows()) {
    throw DimensionError("concat_cols: row counts must match");
  }
  const std::size_t n = a->rows(), ca = a->cols(), cb = b->cols();
  std::vector<double> out(n * (ca + cb));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a->values().begin() + i * ca, ca, out.begin() + i * (ca + cb));
    std::copy_n(b->values().begin() + i * cb, cb,
                out.begin() + i * (ca + cb) + ca);
  }
  Tensor *pa = a.get(), *pb = b.get();
  return Tensor::make_op(
      {n, ca + cb}, std::move(out), {a, b}, [pa, pb, n, ca, cb](Tensor& self) {
        const auto& up = self.grad();
        if (pa->requires_grad()) {
          auto& g = pa->grad();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < ca; ++j)
              g[i * ca + j] += up[i * (ca + cb) + j];
        }
        if (pb->requires_grad()) {
          auto& g = pb->grad();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < cb; ++j)
              g[i * cb + j] += up[i * (ca + cb) + ca + j];
        }
      });
}

TensorPtr permute_rows(const TensorPtr& m,
                       const std::vector<std::size_t>& perm) {
  const std::size_t n = m->rows(), d = m->cols();
  if (perm.size() != n) throw DimensionError("permute_rows: bad permutation");
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    if (perm[i] >= n) throw DimensionError("permute_rows: index out of range");
    std::copy_n(m->values().begin() + perm[i] * d, d, out.begin() + i * d);
  }
  Tensor* pm = m.get();
  return Tensor::make_op({n, d}, std::move(out), {m},
                         [pm, perm, d](Tensor& self) {
                           if (!pm->requires_grad()) return;
                           auto& g = pm->grad();
                           const auto& up = self.grad();
                           for (std::size_t i = 0; i < perm.size(); ++i)
                             for (std::size_t j = 0; j < d; ++j)
                               g[perm[i] * d + j] += up[i * d + j];
                         });
}

// ---------------------------------------------------------------------------
// Linear maps
// ---------------------------------------------------------------------------

namespace {

// out[m x n] += A[m x k] . B[k x n], plain ikj loop.
void gemm_acc(const double* a, const double* b, double* out, std::size_t m,
              std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = b + p * n;
      double* orow = out + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
}

// out[m x n] += A[k x m]^T . B[k x n]
void gemm_tn_acc(const double* a, const double* b, double* out, std::size_t m,
                 std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aip = arow[i];
      if (aip == 0.0) continue;
      double* orow = out + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
}

// out[m x n] += A[m x k] . B[n x k]^T
void gemm_nt_acc(const double* a, const double* b, double* out, std::size_t m,
                 std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* orow = out + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      orow[j] += s;
    }
  }
}

}  // namespace

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  if (!a->is_matrix() || !b->is_matrix() || a->cols() != b->rows()) {
    throw DimensionError("matmul: incompatible shapes");
  }
  const std::size_t m = a->rows(), k = a->cols(), n = b->cols();
  std::vector<double> out(m * n, 0.0);
  gemm_acc(a->values().data(), b->values().data(), out.data(), m, k, n);
  Tensor *pa = a.get(), *pb = b.get();
  return Tensor::make_op(
      {m, n}, std::move(out), {a, b}, [pa, pb, m, k, n](Tensor& self) {
        const auto& up = self.grad();
        if (pa->requires_grad()) {
          // dA += dC . B^T
          gemm_nt_acc(up.data(), pb->values().data(), pa->grad().data(), m, n,
                      k);
        }
        if (pb->requires_grad()) {
          // dB += A^T . dC
          gemm_tn_acc(pa->values().data(), up.data(), pb->grad().data(), k, m,
                      n);
        }
      });
}

TensorPtr transpose(const TensorPtr& a) {
  const std::size_t m = a->rows(), n = a->cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a->at(i, j);
  Tensor* pa = a.get();
  return Tensor::make_op({n, m}, std::move(out), {a},
                         [pa, m, n](Tensor& self) {
                           if (!pa->requires_grad()) return;
                           auto& g = pa->grad();
                           const auto& up = self.grad();
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < n; ++j)
                               g[i * n + j] += up[j * m + i];
                         });
}

TensorPtr affine(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
  if (!x->is_vector() || !w->is_matrix() || !b->is_vector() ||
      w->cols() != x->size() || w->rows() != b->size()) {
    throw DimensionError("affine: shapes do not conform");
  }
  const std::size_t m = w->rows(), n = w->cols();
  // Accumulation order matches linear_rows so the vector and batched paths
  // agree bitwise.
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* wrow = w->values().data() + i * n;
    double s = b->values()[i];
    for (std::size_t j = 0; j < n; ++j) s += x->values()[j] * wrow[j];
    out[i] = s;
  }
  Tensor *px = x.get(), *pw = w.get(), *pb = b.get();
  return Tensor::make_op(
      {m}, std::move(out), {x, w, b}, [px, pw, pb, m, n](Tensor& self) {
        const auto& up = self.grad();
        if (px->requires_grad()) {
          auto& g = px->grad();
          for (std::size_t i = 0; i < m; ++i) {
            const double* wrow = pw->values().data() + i * n;
            for (std::size_t j = 0; j < n; ++j) g[j] += up[i] * wrow[j];
          }
        }
        if (pw->requires_grad()) {
          auto& g = pw->grad();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
              g[i * n + j] += up[i] * px->values()[j];
        }
        if (pb->requires_grad()) {
          auto& g = pb->grad();
          for (std::size_t i = 0; i < m; ++i) g[i] += up[i];
        }
      });
}

TensorPtr linear_rows(const TensorPtr& x, const TensorPtr& w,
                      const TensorPtr& b) {
  if (!x->is_matrix() || !w->is_matrix() || !b->is_vector() ||
      x->cols() != w->cols() || w->rows() != b->size()) {
    throw DimensionError("linear_rows: shapes do not conform");
  }
  const std::size_t rows = x->rows(), in = x->cols(), out_w = w->rows();
  std::vector<double> out(rows * out_w);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xrow = x->values().data() + i * in;
    double* orow = out.data() + i * out_w;
    for (std::size_t o = 0; o < out_w; ++o) {
      const double* wrow = w->values().data() + o * in;
      double s = b->values()[o];
      for (std::size_t j = 0; j < in; ++j) s += xrow[j] * wrow[j];
      orow[o] = s;
    }
  }
  Tensor *px = x.get(), *pw = w.get(), *pb = b.get();
  return Tensor::make_op(
      {rows, out_w}, std::move(out), {x, w, b},
      [px, pw, pb, rows, in, out_w](Tensor& self) {
        const auto& up = self.grad();
        if (px->requires_grad()) {
          // dX += dY . W
          gemm_acc(up.data(), pw->values().data(), px->grad().data(), rows,
                   out_w, in);
        }
        if (pw->requires_grad()) {
          // dW += dY^T . X
          gemm_tn_acc(up.data(), px->values().data(), pw->grad().data(), out_w,
                      rows, in);
        }
        if (pb->requires_grad()) {
          auto& g = pb->grad();
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t o = 0; o < out_w; ++o) g[o] += up[i * out_w + o];
        }
      });
}

}  // namespace xmer
