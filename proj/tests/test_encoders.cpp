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

#include "xmer/encoders.hpp"
#include "xmer/gradcheck.hpp"

using namespace xmer;

namespace {

TensorPtr random_seq(std::size_t t, std::size_t k, RandomState& rng) {
  std::vector<double> v(t * k);
  for (double& x : v) x = rng.normal();
  return Tensor::matrix(t, k, std::move(v));
}

// All-0.5 1-d GRU cell for the hand trace.
GruCellParams half_cell() {
  GruCellParams c;
  auto half = [] { return Tensor::matrix(1, 1, {0.5}); };
  auto zero = [] { return Tensor::zeros({1}); };
  c.wu = half();
  c.uu = half();
  c.bu = zero();
  c.wr = half();
  c.ur = half();
  c.br = zero();
  c.wc = half();
  c.uc = half();
  c.bc = zero();
  return c;
}

}  // namespace

TEST_SUITE("encoders") {

TEST_CASE("init_params is deterministic and fan-in scaled") {
  MlpSpec spec;
  spec.input = 16;
  spec.widths = {8, 4};
  spec.dropout = 0.0;
  RandomState r1(5), r2(5);
  auto p1 = init_mlp(spec, r1);
  auto p2 = init_mlp(spec, r2);
  for (std::size_t i = 0; i < p1.layers.size(); ++i) {
    CHECK(p1.layers[i].w->values() == p2.layers[i].w->values());
    CHECK(p1.layers[i].b->values() == p2.layers[i].b->values());
    for (double b : p1.layers[i].b->values()) CHECK(b == 0.0);
  }

  // statistics over many draws: mean within 3 sigma of 0, variance within
  // 5% of 1/(3 fan-in)
  const std::size_t fan_in = 64, rows = 1600;  // ~1e5 draws
  RandomState rng(7);
  MlpSpec big;
  big.input = fan_in;
  big.widths = {rows};
  big.dropout = 0.0;
  auto p = init_mlp(big, rng);
  const auto& w = p.layers[0].w->values();
  const double n = static_cast<double>(w.size());
  double mean = 0.0;
  for (double x : w) mean += x;
  mean /= n;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  const double draw_sigma = bound / std::sqrt(3.0);
  CHECK(std::abs(mean) < 3.0 * draw_sigma / std::sqrt(n));
  double var = 0.0;
  for (double x : w) var += (x - mean) * (x - mean);
  var /= n;
  const double expect_var = 1.0 / (3.0 * static_cast<double>(fan_in));
  CHECK(var == doctest::Approx(expect_var).epsilon(0.05));
}

TEST_CASE("mlp_encode: constant propagation with zero input") {
  MlpSpec spec;
  spec.input = 3;
  spec.widths = {4, 2};
  spec.dropout = 0.5;
  RandomState rng(11);
  auto params = init_mlp(spec, rng);
  auto seq = Tensor::matrix(2, 3, std::vector<double>(6, 0.0));
  RandomState unused(0);
  auto out = mlp_encode(seq, params, unused, false);

  // independently fold the constants: v_{l+1} = softplus(W_l v_l)
  std::vector<double> v(3, 0.0);
  for (const auto& layer : params.layers) {
    const std::size_t m = layer.w->rows(), n = layer.w->cols();
    std::vector<double> next(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += layer.w->at(i, j) * v[j];
      next[i] = std::log1p(std::exp(s));
    }
    v = std::move(next);
  }
  REQUIRE(out->size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(out->at(i) == doctest::Approx(v[i]).epsilon(1e-14));
}

TEST_CASE("mlp_encode is order- and length-invariant over constant frames") {
  MlpSpec spec;
  spec.input = 2;
  spec.widths = {4, 3};
  RandomState rng(13);
  auto params = init_mlp(spec, rng);
  RandomState unused(0);

  auto seq = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6});
  auto permuted = Tensor::matrix(3, 2, {5, 6, 1, 2, 3, 4});
  auto a = mlp_encode(seq, params, unused, false);
  auto b = mlp_encode(permuted, params, unused, false);
  for (std::size_t i = 0; i < a->size(); ++i)
    CHECK(a->at(i) == doctest::Approx(b->at(i)).epsilon(1e-15));

  auto constant = Tensor::matrix(2, 2, {0.3, -0.7, 0.3, -0.7});
  auto doubled =
      Tensor::matrix(4, 2, {0.3, -0.7, 0.3, -0.7, 0.3, -0.7, 0.3, -0.7});
  auto ca = mlp_encode(constant, params, unused, false);
  auto cb = mlp_encode(doubled, params, unused, false);
  for (std::size_t i = 0; i < ca->size(); ++i)
    CHECK(ca->at(i) == doctest::Approx(cb->at(i)).epsilon(1e-15));

  CHECK_THROWS_AS(mlp_encode(Tensor::matrix(2, 3, std::vector<double>(6, 0.0)),
                             params, unused, false),
                  DimensionError);
}

TEST_CASE("mlp_encode gradient through the full stack") {
  MlpSpec spec;
  spec.input = 4;
  spec.widths = {5, 3};
  spec.dropout = 0.0;
  RandomState rng(17);
  auto params = init_mlp(spec, rng);
  auto seq = random_seq(3, 4, rng);
  RandomState unused(0);
  auto f = [&](const TensorPtr& s) {
    return sum(mlp_encode(s, params, unused, false));
  };
  CHECK(grad_check(f, seq, 1e-6) < 1e-4);
  // w.r.t. a middle-layer weight
  auto fw = [&](const TensorPtr& w) {
    MlpEncoderParams p2 = params;
    p2.layers[1].w = w;
    return sum(mlp_encode(seq, p2, unused, false));
  };
  CHECK(grad_check(fw, params.layers[1].w, 1e-6) < 1e-4);
}

TEST_CASE("gru cell matches the hand-derived 1-d trace") {
  // Recurrence (all weights 0.5, biases 0, h0 = 0), derived by hand before
  // the implementation:
  //   u_t = sigmoid(0.5 x_t + 0.5 h_{t-1})
  //   r_t = sigmoid(0.5 x_t + 0.5 h_{t-1})
  //   c_t = tanh(0.5 x_t + 0.5 r_t h_{t-1})
  //   h_t = u_t h_{t-1} + (1 - u_t) c_t
  // For x = [1, -1]:
  //   t=1: u=r=sigmoid(0.5)=0.62245933120185459, c=tanh(0.5)
  //        h1 = (1-u)*c = 0.17446802061504182
  //   t=2: u=r=sigmoid(-0.5+0.5*h1)=0.39824907452715796
  //        c=tanh(-0.5+0.5*r*h1)=-0.43436083973457296
  //        h2 = u*h1 + (1-u)*c = -0.1918953095549146
  // Backward direction consumes [-1, 1]; final state -0.0072745467168844891.
  BiGruSpec spec;
  spec.input = 1;
  spec.hidden = 1;
  spec.post_widths = {2};
  spec.dropout = 0.0;
  BiGruEncoderParams params;
  params.spec = spec;
  params.forward = half_cell();
  params.backward = half_cell();
  // identity post layer so the output is softplus(concat(h_fwd, h_bwd))
  params.post = {{Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor::zeros({2})}};

  auto seq = Tensor::matrix(2, 1, {1.0, -1.0});
  RandomState unused(0);
  auto out = bigru_encode(seq, params, unused, false);
  const double h_fwd = -0.1918953095549146;
  const double h_bwd = -0.0072745467168844891;
  CHECK(out->at(0) ==
        doctest::Approx(std::log1p(std::exp(h_fwd))).epsilon(1e-14));
  CHECK(out->at(1) ==
        doctest::Approx(std::log1p(std::exp(h_bwd))).epsilon(1e-14));
}

TEST_CASE("bigru with one frame: both directions agree") {
  BiGruSpec spec;
  spec.input = 2;
  spec.hidden = 3;
  spec.post_widths = {4};
  spec.dropout = 0.0;
  RandomState rng(19);
  auto params = init_bigru(spec, rng);
  params.backward = params.forward;  // same cell both ways
  auto seq = random_seq(1, 2, rng);
  RandomState unused(0);
  // peek below the post stack: encode with identity-ish single post layer
  BiGruEncoderParams probe = params;
  std::vector<double> eye(6 * 6, 0.0);
  for (int i = 0; i < 6; ++i) eye[i * 6 + i] = 1.0;
  probe.post = {{Tensor::matrix(6, 6, eye), Tensor::zeros({6})}};
  probe.spec.post_widths = {6};
  auto out = bigru_encode(seq, probe, unused, false);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(out->at(j) == doctest::Approx(out->at(3 + j)).epsilon(1e-15));
}

TEST_CASE("bigru time reversal with swapped parameter sets") {
  BiGruSpec spec;
  spec.input = 2;
  spec.hidden = 3;
  spec.post_widths = {4, 3};
  spec.dropout = 0.0;
  RandomState rng(23);
  auto params = init_bigru(spec, rng);
  auto seq = random_seq(5, 2, rng);
  std::vector<double> reversed(5 * 2);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t j = 0; j < 2; ++j)
      reversed[t * 2 + j] = seq->at(4 - t, j);

  // swap direction cells and the first post layer's column blocks
  BiGruEncoderParams swapped = params;
  std::swap(swapped.forward, swapped.backward);
  const std::size_t h = spec.hidden;
  const auto& w0 = params.post[0].w;
  std::vector<double> wsw(w0->values().size());
  for (std::size_t i = 0; i < w0->rows(); ++i)
    for (std::size_t j = 0; j < 2 * h; ++j)
      wsw[i * 2 * h + j] = w0->at(i, (j + h) % (2 * h));
  swapped.post[0].w = Tensor::matrix(w0->rows(), w0->cols(), wsw);

  RandomState unused(0);
  auto a = bigru_encode(seq, params, unused, false);
  auto b = bigru_encode(Tensor::matrix(5, 2, reversed), swapped, unused, false);
  for (std::size_t i = 0; i < a->size(); ++i)
    CHECK(a->at(i) == doctest::Approx(b->at(i)).epsilon(1e-12));
}

TEST_CASE("bigru gradients through the recurrence") {
  BiGruSpec spec;
  spec.input = 3;
  spec.hidden = 4;
  spec.post_widths = {5};
  spec.dropout = 0.0;
  RandomState rng(29);
  auto params = init_bigru(spec, rng);
  auto seq = random_seq(6, 3, rng);
  RandomState unused(0);
  auto f = [&](const TensorPtr& s) {
    return sum(bigru_encode(s, params, unused, false));
  };
  CHECK(grad_check(f, seq, 1e-6) < 1e-4);
  auto fu = [&](const TensorPtr& w) {
    BiGruEncoderParams p2 = params;
    p2.forward.uc = w;
    return sum(bigru_encode(seq, p2, unused, false));
  };
  CHECK(grad_check(fu, params.forward.uc, 1e-6) < 1e-4);
  auto fb = [&](const TensorPtr& w) {
    BiGruEncoderParams p2 = params;
    p2.backward.wr = w;
    return sum(bigru_encode(seq, p2, unused, false));
  };
  CHECK(grad_check(fb, params.backward.wr, 1e-6) < 1e-4);
}

TEST_CASE("batched paths match the single-sample paths") {
  RandomState rng(31);
  RandomState unused(0);

  MlpSpec mspec;
  mspec.input = 3;
  mspec.widths = {4, 2};
  mspec.dropout = 0.0;
  auto mparams = init_mlp(mspec, rng);
  std::vector<TensorPtr> seqs = {random_seq(2, 3, rng), random_seq(5, 3, rng),
                                 random_seq(3, 3, rng)};
  auto batch = mlp_encode_batch(seqs, mparams, unused, false);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    auto single = mlp_encode(seqs[i], mparams, unused, false);
    for (std::size_t j = 0; j < single->size(); ++j)
      CHECK(batch->at(i, j) == single->at(j));
  }

  BiGruSpec gspec;
  gspec.input = 3;
  gspec.hidden = 4;
  gspec.post_widths = {5, 4};
  gspec.dropout = 0.0;
  auto gparams = init_bigru(gspec, rng);
  // mixed lengths exercise grouping and the inverse permutation
  std::vector<TensorPtr> gseqs = {random_seq(4, 3, rng), random_seq(2, 3, rng),
                                  random_seq(4, 3, rng), random_seq(7, 3, rng),
                                  random_seq(2, 3, rng)};
  auto gbatch = bigru_encode_batch(gseqs, gparams, unused, false);
  for (std::size_t i = 0; i < gseqs.size(); ++i) {
    auto single = bigru_encode(gseqs[i], gparams, unused, false);
    for (std::size_t j = 0; j < single->size(); ++j)
      CHECK(gbatch->at(i, j) == doctest::Approx(single->at(j)).epsilon(1e-13));
  }
}

TEST_CASE("project_heads: zero heads, positivity and gradients") {
  HeadSpec spec{4, 3};
  RandomState rng(37);
  auto heads = init_heads(spec, rng);
  // zero heads -> e_raw = 0, mu = 0, var = softplus(0) + 1e-6
  HeadParams zero = heads;
  zero.e = {Tensor::zeros({3, 4}, true), Tensor::zeros({3}, true)};
  zero.mu = {Tensor::zeros({3, 4}, true), Tensor::zeros({3}, true)};
  zero.s = {Tensor::zeros({3, 4}, true), Tensor::zeros({3}, true)};
  auto f_hat = Tensor::vector({1.0, -2.0, 0.5, 3.0});
  auto out = project_heads(f_hat, zero);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out.e_raw->at(i) == 0.0);
    CHECK(out.mu->at(i) == 0.0);
    CHECK(out.var->at(i) ==
          doctest::Approx(std::log1p(1.0) + 1e-6).epsilon(1e-15));
  }

  // variance strictly positive across a large random sweep
  RandomState sweep(41);
  double min_var = 1e9;
  std::vector<TensorPtr> rows;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> v(4);
    for (double& x : v) x = 10.0 * sweep.normal();
    rows.push_back(Tensor::vector(std::move(v)));
  }
  auto batch_out = project_heads_batch(stack_rows(rows), heads);
  for (double v : batch_out.var->values()) min_var = std::min(min_var, v);
  CHECK(min_var > 1e-6);

  // gradients through all three heads
  auto fh = [&](const TensorPtr& x) {
    auto o = project_heads(x, heads);
    return add(sum(o.e_raw), add(sum(o.mu), sum(log(o.var))));
  };
  CHECK(grad_check(fh, f_hat, 1e-6) < 1e-5);
}

}  // TEST_SUITE
