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

#include "xmer/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace xmer {

namespace {

// Row t of a matrix node as a vector node.
TensorPtr slice_row_as_vector(const TensorPtr& m, std::size_t t) {
  const std::size_t k = m->cols();
  std::vector<double> out(m->values().begin() + t * k,
                          m->values().begin() + (t + 1) * k);
  Tensor* pm = m.get();
  return Tensor::make_op({k}, std::move(out), {m}, [pm, t, k](Tensor& self) {
    if (!pm->requires_grad()) return;
    auto& g = pm->grad();
    const auto& up = self.grad();
    for (std::size_t j = 0; j < k; ++j) g[t * k + j] += up[j];
  });
}

TensorPtr uniform_weights(std::size_t out, std::size_t in, RandomState& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<double> v(out * in);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor::matrix(out, in, std::move(v), /*requires_grad=*/true);
}

AffineLayer init_affine(std::size_t out, std::size_t in, RandomState& rng) {
  return {uniform_weights(out, in, rng),
          Tensor::zeros({out}, /*requires_grad=*/true)};
}

void check_input_width(const TensorPtr& seq, std::size_t expected,
                       const char* who) {
  if (!seq->is_matrix()) {
    throw DimensionError(std::string(who) + ": expected a [T x k] sequence");
  }
  if (seq->cols() != expected) {
    throw DimensionError(std::string(who) + ": sequence width " +
                         std::to_string(seq->cols()) +
                         " does not match configured input width " +
                         std::to_string(expected));
  }
  if (seq->rows() == 0) {
    throw InvalidArgument(std::string(who) + ": empty sequence");
  }
}

// Shared affine+softplus stack; dropout after every layer except the last.
TensorPtr fc_stack_vec(TensorPtr x, const std::vector<AffineLayer>& layers,
                       double rate, RandomState& rng, bool training) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = softplus(affine(x, layers[i].w, layers[i].b));
    if (i + 1 < layers.size()) x = dropout(x, rate, rng, training);
  }
  return x;
}

TensorPtr fc_stack_rows(TensorPtr x, const std::vector<AffineLayer>& layers,
                        double rate, RandomState& rng, bool training) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = softplus(linear_rows(x, layers[i].w, layers[i].b));
    if (i + 1 < layers.size()) x = dropout(x, rate, rng, training);
  }
  return x;
}

GruCellParams init_cell(std::size_t hidden, std::size_t input,
                        RandomState& rng) {
  GruCellParams c;
  c.wu = uniform_weights(hidden, input, rng);
  c.uu = uniform_weights(hidden, hidden, rng);
  c.bu = Tensor::zeros({hidden}, true);
  c.wr = uniform_weights(hidden, input, rng);
  c.ur = uniform_weights(hidden, hidden, rng);
  c.br = Tensor::zeros({hidden}, true);
  c.wc = uniform_weights(hidden, input, rng);
  c.uc = uniform_weights(hidden, hidden, rng);
  c.bc = Tensor::zeros({hidden}, true);
  return c;
}

void push_cell(std::vector<TensorPtr>& out, const GruCellParams& c) {
  out.insert(out.end(),
             {c.wu, c.uu, c.bu, c.wr, c.ur, c.br, c.wc, c.uc, c.bc});
}

// One recurrence step over vector state (single-sample path).
TensorPtr gru_step_vec(const TensorPtr& x, const TensorPtr& h,
                       const GruCellParams& c, const TensorPtr& zero_bias,
                       const TensorPtr& ones) {
  auto u = sigmoid(add(affine(x, c.wu, c.bu), affine(h, c.uu, zero_bias)));
  auto r = sigmoid(add(affine(x, c.wr, c.br), affine(h, c.ur, zero_bias)));
  auto cand =
      tanh(add(affine(x, c.wc, c.bc), affine(mul(r, h), c.uc, zero_bias)));
  return add(mul(u, h), mul(sub(ones, u), cand));
}

// One recurrence step over [G x hidden] row batches.
TensorPtr gru_step_rows(const TensorPtr& x, const TensorPtr& h,
                        const GruCellParams& c, const TensorPtr& zero_bias,
                        const TensorPtr& ones) {
  auto u =
      sigmoid(add(linear_rows(x, c.wu, c.bu), linear_rows(h, c.uu, zero_bias)));
  auto r =
      sigmoid(add(linear_rows(x, c.wr, c.br), linear_rows(h, c.ur, zero_bias)));
  auto cand = tanh(
      add(linear_rows(x, c.wc, c.bc), linear_rows(mul(r, h), c.uc, zero_bias)));
  return add(mul(u, h), mul(sub(ones, u), cand));
}

// Final state of one direction over a single sequence; `reversed` walks the
// frames back to front.
TensorPtr gru_run_vec(const TensorPtr& seq, const GruCellParams& c,
                      std::size_t hidden, bool reversed) {
  const std::size_t t_len = seq->rows();
  auto zero_bias = Tensor::zeros({hidden});
  auto ones = Tensor::full({hidden}, 1.0);
  TensorPtr h = Tensor::zeros({hidden});
  for (std::size_t s = 0; s < t_len; ++s) {
    const std::size_t t = reversed ? t_len - 1 - s : s;
    auto xt = slice_row_as_vector(seq, t);
    h = gru_step_vec(xt, h, c, zero_bias, ones);
  }
  return h;
}

}  // namespace

std::vector<TensorPtr> MlpEncoderParams::leaves() const {
  std::vector<TensorPtr> out;
  for (const auto& l : layers) {
    out.push_back(l.w);
    out.push_back(l.b);
  }
  return out;
}

std::vector<TensorPtr> BiGruEncoderParams::leaves() const {
  std::vector<TensorPtr> out;
  push_cell(out, forward);
  push_cell(out, backward);
  for (const auto& l : post) {
    out.push_back(l.w);
    out.push_back(l.b);
  }
  return out;
}

std::vector<TensorPtr> HeadParams::leaves() const {
  return {e.w, e.b, mu.w, mu.b, s.w, s.b};
}

MlpEncoderParams init_mlp(const MlpSpec& spec, RandomState& rng) {
  if (spec.widths.empty()) throw InvalidArgument("init_mlp: no layers");
  if (spec.dropout < 0.0 || spec.dropout >= 1.0) {
    throw InvalidArgument("init_mlp: dropout rate must lie in [0, 1)");
  }
  MlpEncoderParams p;
  p.spec = spec;
  std::size_t in = spec.input;
  for (std::size_t w : spec.widths) {
    p.layers.push_back(init_affine(w, in, rng));
    in = w;
  }
  return p;
}

BiGruEncoderParams init_bigru(const BiGruSpec& spec, RandomState& rng) {
  if (spec.post_widths.empty()) throw InvalidArgument("init_bigru: no layers");
  if (spec.dropout < 0.0 || spec.dropout >= 1.0) {
    throw InvalidArgument("init_bigru: dropout rate must lie in [0, 1)");
  }
  BiGruEncoderParams p;
  p.spec = spec;
  p.forward = init_cell(spec.hidden, spec.input, rng);
  p.backward = init_cell(spec.hidden, spec.input, rng);
  std::size_t in = 2 * spec.hidden;
  for (std::size_t w : spec.post_widths) {
    p.post.push_back(init_affine(w, in, rng));
    in = w;
  }
  return p;
}

HeadParams init_heads(const HeadSpec& spec, RandomState& rng) {
  HeadParams p;
  p.spec = spec;
  p.e = init_affine(spec.embed_dim, spec.feature_width, rng);
  p.mu = init_affine(spec.embed_dim, spec.feature_width, rng);
  p.s = init_affine(spec.embed_dim, spec.feature_width, rng);
  return p;
}

TensorPtr mlp_encode(const TensorPtr& seq, const MlpEncoderParams& params,
                     RandomState& rng, bool training) {
  check_input_width(seq, params.spec.input, "mlp_encode");
  return fc_stack_vec(mean_over_time(seq), params.layers, params.spec.dropout,
                      rng, training);
}

TensorPtr bigru_encode(const TensorPtr& seq, const BiGruEncoderParams& params,
                       RandomState& rng, bool training) {
  check_input_width(seq, params.spec.input, "bigru_encode");
  auto h_fwd = gru_run_vec(seq, params.forward, params.spec.hidden, false);
  auto h_bwd = gru_run_vec(seq, params.backward, params.spec.hidden, true);
  return fc_stack_vec(concat(h_fwd, h_bwd), params.post, params.spec.dropout,
                      rng, training);
}

TensorPtr mlp_encode_batch(const std::vector<TensorPtr>& seqs,
                           const MlpEncoderParams& params, RandomState& rng,
                           bool training) {
  if (seqs.empty()) throw InvalidArgument("mlp_encode_batch: empty batch");
  std::vector<TensorPtr> pooled;
  pooled.reserve(seqs.size());
  for (const auto& s : seqs) {
    check_input_width(s, params.spec.input, "mlp_encode_batch");
    pooled.push_back(mean_over_time(s));
  }
  return fc_stack_rows(stack_rows(pooled), params.layers, params.spec.dropout,
                       rng, training);
}

TensorPtr bigru_states_batch(const std::vector<TensorPtr>& seqs,
                             const GruCellParams& forward,
                             const GruCellParams& backward,
                             std::size_t hidden) {
  if (seqs.empty()) throw InvalidArgument("bigru_states_batch: empty batch");
  const std::size_t in = seqs.front()->cols();
  // Group samples by length so each recurrence step is one batched matmul.
  std::map<std::size_t, std::vector<std::size_t>> by_len;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    by_len[seqs[i]->rows()].push_back(i);
  }
  std::vector<TensorPtr> blocks;
  std::vector<std::size_t> order;
  for (const auto& [t_len, members] : by_len) {
    const std::size_t g = members.size();
    // Per-step input matrices, gathered as plain values.
    std::vector<TensorPtr> step_inputs(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
      std::vector<double> v(g * in);
      for (std::size_t r = 0; r < g; ++r) {
        const auto& sv = seqs[members[r]]->values();
        std::copy_n(sv.begin() + t * in, in, v.begin() + r * in);
      }
      step_inputs[t] = Tensor::matrix(g, in, std::move(v));
    }
    auto zero_bias = Tensor::zeros({hidden});
    auto ones = Tensor::full({g, hidden}, 1.0);
    TensorPtr hf = Tensor::zeros({g, hidden});
    for (std::size_t t = 0; t < t_len; ++t) {
      hf = gru_step_rows(step_inputs[t], hf, forward, zero_bias, ones);
    }
    TensorPtr hb = Tensor::zeros({g, hidden});
    for (std::size_t t = t_len; t-- > 0;) {
      hb = gru_step_rows(step_inputs[t], hb, backward, zero_bias, ones);
    }
    blocks.push_back(concat_cols(hf, hb));
    order.insert(order.end(), members.begin(), members.end());
  }
  TensorPtr h = blocks.size() == 1 ? blocks[0] : concat_rows(blocks);
  // Restore input order: row i of the result must be sample i.
  std::vector<std::size_t> inverse(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) inverse[order[pos]] = pos;
  if (!std::is_sorted(order.begin(), order.end())) {
    h = permute_rows(h, inverse);
  }
  return h;
}

TensorPtr bigru_encode_batch(const std::vector<TensorPtr>& seqs,
                             const BiGruEncoderParams& params,
                             RandomState& rng, bool training) {
  if (seqs.empty()) throw InvalidArgument("bigru_encode_batch: empty batch");
  for (const auto& s : seqs) {
    check_input_width(s, params.spec.input, "bigru_encode_batch");
  }
  auto h = bigru_states_batch(seqs, params.forward, params.backward,
                              params.spec.hidden);
  return fc_stack_rows(h, params.post, params.spec.dropout, rng, training);
}

SingleEncoderOutput project_heads(const TensorPtr& f_hat,
                                  const HeadParams& heads) {
  SingleEncoderOutput out;
  out.e_raw = affine(f_hat, heads.e.w, heads.e.b);
  out.mu = affine(f_hat, heads.mu.w, heads.mu.b);
  out.var =
      add_scalar(softplus(affine(f_hat, heads.s.w, heads.s.b)), kVarianceFloor);
  return out;
}

EncoderOutput project_heads_batch(const TensorPtr& f_hat,
                                  const HeadParams& heads) {
  EncoderOutput out;
  out.f_hat = f_hat;
  out.e_raw = linear_rows(f_hat, heads.e.w, heads.e.b);
  out.mu = linear_rows(f_hat, heads.mu.w, heads.mu.b);
  out.var = add_scalar(softplus(linear_rows(f_hat, heads.s.w, heads.s.b)),
                       kVarianceFloor);
  return out;
}

}  // namespace xmer
