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

#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "xmer/gradcheck.hpp"
#include "xmer/linalg.hpp"

using namespace xmer;

namespace {

TensorPtr random_matrix(std::size_t r, std::size_t c, RandomState& rng,
                        bool requires_grad = false) {
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.normal();
  return Tensor::matrix(r, c, std::move(v), requires_grad);
}

// Symmetric part of a free matrix, in-graph, so finite differences stay
// inside sym_eig's symmetry tolerance.
TensorPtr sym_part(const TensorPtr& m) {
  return scale(add(m, transpose(m)), 0.5);
}

TensorPtr random_psd(std::size_t d, RandomState& rng, double jitter) {
  auto a = random_matrix(d + 3, d, rng);
  auto c = centered_covariance(a, jitter);
  return c;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("centered covariance: two-point arithmetic") {
  auto x = Tensor::matrix(2, 2, {1, 0, -1, 0});
  auto c = centered_covariance(x, 0.0);
  CHECK(c->at(0, 0) == 2.0);
  CHECK(c->at(0, 1) == 0.0);
  CHECK(c->at(1, 0) == 0.0);
  CHECK(c->at(1, 1) == 0.0);
}

TEST_CASE("centered covariance: ridge additivity and errors") {
  RandomState rng(2);
  auto x = random_matrix(7, 3, rng);
  auto c0 = centered_covariance(x, 0.0);
  auto cr = centered_covariance(x, 0.25);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const double expect = c0->at(i, j) + (i == j ? 0.25 : 0.0);
      CHECK(cr->at(i, j) == expect);
    }
  CHECK_THROWS_AS(centered_covariance(Tensor::matrix(1, 2, {1, 2}), 0.0),
                  InvalidArgument);
  CHECK_THROWS_AS(centered_covariance(x, -1e-9), InvalidArgument);
}

TEST_CASE("centered covariance matches the brute-force oracle") {
  RandomState rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 6 + trial, d = 4;
    auto x = random_matrix(n, d, rng);
    auto c = centered_covariance(x, 0.0);
    auto oracle = test::brute_covariance(x->values(), n, d, 0.0);
    for (std::size_t i = 0; i < d * d; ++i) {
      CHECK(std::abs(c->values()[i] - oracle[i]) < 1e-12);
    }
    // exact (bitwise) symmetry
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) CHECK(c->at(i, j) == c->at(j, i));
    // PSD within tolerance
    std::vector<double> vals, vecs;
    jacobi_eigh(c->values(), d, vals, vecs);
    CHECK(vals.front() > -1e-10);
  }
}

TEST_CASE("covariance gradients pass finite differences") {
  RandomState rng(4);
  auto x = random_matrix(6, 3, rng);
  CHECK(grad_check(
            [](const TensorPtr& t) {
              return sum(square(centered_covariance(t, 1e-3)));
            },
            x, 1e-6) < 1e-6);
  auto y = random_matrix(6, 2, rng);
  CHECK(grad_check(
            [&](const TensorPtr& t) {
              return sum(square(cross_covariance(t, y)));
            },
            x, 1e-6) < 1e-6);
  CHECK(grad_check(
            [&](const TensorPtr& t) {
              return sum(square(cross_covariance(x, t)));
            },
            y, 1e-6) < 1e-6);
}

TEST_CASE("cross covariance matches the brute-force oracle") {
  RandomState rng(5);
  const std::size_t n = 9, p = 3, q = 2;
  auto x = random_matrix(n, p, rng);
  auto y = random_matrix(n, q, rng);
  auto c = cross_covariance(x, y);
  auto oracle = test::brute_cross_covariance(x->values(), y->values(), n, p, q);
  for (std::size_t i = 0; i < p * q; ++i)
    CHECK(std::abs(c->values()[i] - oracle[i]) < 1e-12);
}

TEST_CASE("sym_eig on small known matrices") {
  auto d23 = Tensor::matrix(2, 2, {2, 0, 0, 3});
  auto [vals, vecs] = sym_eig(d23);
  CHECK(vals->at(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(vals->at(1) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(vecs->at(0, 0) == doctest::Approx(1.0));
  CHECK(vecs->at(1, 1) == doctest::Approx(1.0));

  auto flip = Tensor::matrix(2, 2, {0, 1, 1, 0});
  auto [fv, fw] = sym_eig(flip);
  CHECK(fv->at(0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(fv->at(1) == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(sym_eig(Tensor::matrix(2, 2, {0, 1, 0.5, 0})), NumericError);
}

TEST_CASE("sym_eig reconstruction and orthonormality up to d=64") {
  RandomState rng(7);
  for (std::size_t d : {3ul, 8ul, 25ul, 64ul}) {
    auto m = random_matrix(d, d, rng);
    // sym values
    std::vector<double> s(d * d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        s[i * d + j] = 0.5 * (m->at(i, j) + m->at(j, i));
    auto sm = Tensor::matrix(d, d, s);
    auto [vals, vecs] = sym_eig(sm);
    // reconstruction, relative Frobenius
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double r = 0.0;
        for (std::size_t k = 0; k < d; ++k)
          r += vecs->at(i, k) * vals->at(k) * vecs->at(j, k);
        num += (r - s[i * d + j]) * (r - s[i * d + j]);
        den += s[i * d + j] * s[i * d + j];
      }
    CHECK(std::sqrt(num / den) < 1e-10);
    // orthonormality, infinity norm
    double worst = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k)
          dot += vecs->at(k, i) * vecs->at(k, j);
        worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
      }
    CHECK(worst < 1e-8);
    // ascending order
    for (std::size_t i = 1; i < d; ++i) CHECK(vals->at(i - 1) <= vals->at(i));
  }
}

TEST_CASE("sym_eig eigenvalue gradients") {
  RandomState rng(9);
  auto m = random_matrix(5, 5, rng);
  auto weights = Tensor::vector({0.3, -1.0, 2.0, 0.7, -0.2});
  auto f = [&](const TensorPtr& t) {
    auto [vals, vecs] = sym_eig(sym_part(t));
    (void)vecs;
    return sum(mul(vals, weights));
  };
  CHECK(grad_check(f, m, 1e-6) < 1e-6);
}

TEST_CASE("inv_sqrt_psd on diagonal and identity") {
  auto d49 = Tensor::matrix(2, 2, {4, 0, 0, 9});
  auto r = inv_sqrt_psd(d49, 0.0);
  CHECK(r->at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r->at(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(r->at(0, 1)) < 1e-14);

  auto eye = Tensor::identity(4);
  auto ri = inv_sqrt_psd(eye, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(ri->at(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("inv_sqrt_psd algebraic property and PSD guard") {
  RandomState rng(11);
  auto s = random_psd(6, rng, 1e-6);
  auto r = inv_sqrt_psd(s, 0.0);
  // r s r == identity within 1e-8
  const std::size_t d = 6;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
          acc += r->at(i, a) * s->at(a, b) * r->at(b, j);
      CHECK(std::abs(acc - (i == j ? 1.0 : 0.0)) < 1e-8);
    }
  // exact symmetry of the result
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) CHECK(r->at(i, j) == r->at(j, i));

  auto notpsd = Tensor::matrix(2, 2, {1, 0, 0, -0.5});
  CHECK_THROWS_AS(inv_sqrt_psd(notpsd, 0.0), NumericError);
  auto singular = Tensor::matrix(2, 2, {1, 0, 0, 0});
  CHECK_THROWS_AS(inv_sqrt_psd(singular, 0.0), NumericError);
  CHECK_NOTHROW(inv_sqrt_psd(singular, 1e-12));
}

TEST_CASE("inv_sqrt_psd gradient (exercises eigenvector gradients)") {
  RandomState rng(13);
  auto m = random_matrix(4, 4, rng);
  auto f = [](const TensorPtr& t) {
    auto s = add(scale(add(t, transpose(t)), 0.5),
                 scale(Tensor::identity(4), 6.0));  // keep it PD
    return sum(square(inv_sqrt_psd(s, 0.0)));
  };
  CHECK(grad_check(f, m, 1e-6) < 1e-5);
}

TEST_CASE("singular_value_sum on known matrices") {
  CHECK(singular_value_sum(Tensor::identity(2), 2)->value() ==
        doctest::Approx(2.0).epsilon(1e-12));
  auto d34 = Tensor::matrix(2, 2, {3, 0, 0, -4});
  CHECK(singular_value_sum(d34, 2)->value() ==
        doctest::Approx(7.0).epsilon(1e-12));
  CHECK(singular_value_sum(d34, 1)->value() ==
        doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(singular_value_sum(d34, 0), InvalidArgument);
  CHECK_THROWS_AS(singular_value_sum(d34, 3), InvalidArgument);
}

TEST_CASE("singular_value_sum matches the one-sided Jacobi SVD oracle") {
  RandomState rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    auto t = random_matrix(5, 5, rng);
    auto sv = test::jacobi_svd_values(t->values(), 5, 5);
    double expect = 0.0;
    for (double s : sv) expect += s;
    CHECK(singular_value_sum(t, 5)->value() ==
          doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("singular_value_sum gradient") {
  RandomState rng(19);
  auto t = random_matrix(4, 4, rng);
  CHECK(grad_check(
            [](const TensorPtr& m) { return singular_value_sum(m, 4); }, t,
            1e-6) < 1e-5);
  CHECK(grad_check(
            [](const TensorPtr& m) { return singular_value_sum(m, 2); }, t,
            1e-6) < 1e-5);
}

}  // TEST_SUITE
