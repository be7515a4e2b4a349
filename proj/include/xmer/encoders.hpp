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

#include <vector>

#include "xmer/random.hpp"
#include "xmer/tensor.hpp"

namespace xmer {

enum class EncoderKind { kMlp, kBiGru };

struct AffineLayer {
  TensorPtr w;  // [out x in]
  TensorPtr b;  // [out]
};

/// MLP encoder: mean pooling over time, then a stack of affine+softplus
/// layers with dropout between layers (never after the last). The default
/// widths are the music-encoder configuration; pass other widths for the
/// emotion input (width 2) or for desk-scale runs.
struct MlpSpec {
  std::size_t input = 128;
  std::vector<std::size_t> widths = {256, 512, 512, 1024, 1024};
  double dropout = 0.5;

  std::size_t output_width() const { return widths.back(); }
};

/// Bidirectional GRU: one forward and one backward cell, final states
/// concatenated, then a stack of affine+softplus layers. Dropout sits
/// behind every post-recurrent layer except the output layer; the
/// recurrent layer itself is never dropped.
struct BiGruSpec {
  std::size_t input = 2;
  std::size_t hidden = 512;
  std::vector<std::size_t> post_widths = {512, 512, 512, 1024, 1024};
  double dropout = 0.5;

  std::size_t output_width() const { return post_widths.back(); }
};

/// Gated recurrent cell, gates as in the conventional formulation:
///   u_t = sigmoid(Wu x_t + Uu h_{t-1} + bu)        update
///   r_t = sigmoid(Wr x_t + Ur h_{t-1} + br)        reset
///   c_t = tanh(Wc x_t + Uc (r_t o h_{t-1}) + bc)   candidate
///   h_t = u_t o h_{t-1} + (1 - u_t) o c_t
struct GruCellParams {
  TensorPtr wu, uu, bu;
  TensorPtr wr, ur, br;
  TensorPtr wc, uc, bc;
};

struct MlpEncoderParams {
  MlpSpec spec;
  std::vector<AffineLayer> layers;

  std::vector<TensorPtr> leaves() const;
};

struct BiGruEncoderParams {
  BiGruSpec spec;
  GruCellParams forward;
  GruCellParams backward;
  std::vector<AffineLayer> post;

  std::vector<TensorPtr> leaves() const;
};

/// Three projection heads from the encoder feature f-hat: a linear map to
/// the correlation embedding, a linear map to the Gaussian mean and a
/// linear pre-variance map whose output passes through softplus + 1e-6 to
/// stay strictly positive.
struct HeadSpec {
  std::size_t feature_width = 1024;
  std::size_t embed_dim = 16;
};

struct HeadParams {
  HeadSpec spec;
  AffineLayer e;   // correlation embedding head
  AffineLayer mu;  // Gaussian mean head
  AffineLayer s;   // pre-variance head

  std::vector<TensorPtr> leaves() const;
};

/// Minimum variance emitted by the variance head.
inline constexpr double kVarianceFloor = 1e-6;

/// Batched head outputs; rows index batch samples.
struct EncoderOutput {
  TensorPtr f_hat;  // [N x F]
  TensorPtr e_raw;  // [N x d]
  TensorPtr mu;     // [N x d]
  TensorPtr var;    // [N x d], every entry > 1e-6
};

// Initialization: weights uniform on +-1/sqrt(fan-in) (variance
// 1/(3 fan-in)), biases zero, drawn from `rng` in documented field order.
MlpEncoderParams init_mlp(const MlpSpec& spec, RandomState& rng);
BiGruEncoderParams init_bigru(const BiGruSpec& spec, RandomState& rng);
HeadParams init_heads(const HeadSpec& spec, RandomState& rng);

// Single-sample paths; seq is a [T x k] node and gradients flow into it.
TensorPtr mlp_encode(const TensorPtr& seq, const MlpEncoderParams& params,
                     RandomState& rng, bool training);
TensorPtr bigru_encode(const TensorPtr& seq, const BiGruEncoderParams& params,
                       RandomState& rng, bool training);

// Batched paths; sequences are value inputs (no input gradients), grouped
// internally by length so the recurrence runs on whole batches. Outputs
// follow the input order.
TensorPtr mlp_encode_batch(const std::vector<TensorPtr>& seqs,
                           const MlpEncoderParams& params, RandomState& rng,
                           bool training);
TensorPtr bigru_encode_batch(const std::vector<TensorPtr>& seqs,
                             const BiGruEncoderParams& params,
                             RandomState& rng, bool training);

/// Concatenated final forward/backward states [N x 2*hidden] for a batch of
/// sequences, grouped by length internally; rows follow the input order.
/// Shared by the cross-modal encoders and the regression baselines.
TensorPtr bigru_states_batch(const std::vector<TensorPtr>& seqs,
                             const GruCellParams& forward,
                             const GruCellParams& backward,
                             std::size_t hidden);

/// Heads over a single feature vector [F].
struct SingleEncoderOutput {
  TensorPtr e_raw;
  TensorPtr mu;
  TensorPtr var;
};
SingleEncoderOutput project_heads(const TensorPtr& f_hat,
                                  const HeadParams& heads);

/// Heads over a feature batch [N x F].
EncoderOutput project_heads_batch(const TensorPtr& f_hat,
                                  const HeadParams& heads);

}  // namespace xmer
