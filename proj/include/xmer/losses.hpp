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

#include <cstdint>
#include <utility>
#include <vector>

#include "xmer/linalg.hpp"
#include "xmer/tensor.hpp"

namespace xmer {

/// A point in the probabilistic embedding space: a diagonal Gaussian given
/// by its mean and strictly positive per-dimension variances.
struct GaussianEmbedding {
  std::vector<double> mu;
  std::vector<double> var;
};

/// Canonical projection pair recovered from batch statistics. Columns of
/// w_music / w_emotion are canonical directions; applied as W^T x they map
/// a raw embedding to its k-dimensional canonical coordinates.
/// `correlations` holds the per-direction canonical correlations, sorted
/// descending.
struct CcaSolution {
  std::size_t dim = 0;  // raw embedding dimension d
  std::size_t k = 0;    // number of canonical directions
  std::vector<double> w_music;    // d x k, row-major
  std::vector<double> w_emotion;  // d x k, row-major
  std::vector<double> correlations;
  double ridge = 0.0;
  std::size_t batch_size = 0;

  /// W^T x for the given side.
  std::vector<double> project_music(const std::vector<double>& x) const;
  std::vector<double> project_emotion(const std::vector<double>& x) const;
};

/// Hinge-margin placement. kPaper writes the triplet condition as
/// D(pos) <= alpha + D(neg), so the constraint loosens as alpha grows;
/// kConventional uses the usual D(pos) + alpha <= D(neg).
enum class MarginConvention { kPaper, kConventional };

struct LossConfig {
  double lambda = 0.5;  // composite weight, in [0, 1]
  double alpha = 1.0;   // ranking margin, > 0
  double ridge = 1e-3;  // covariance conditioner, > 0
  std::size_t k = 0;    // canonical directions; 0 means "use d"
  double eig_floor = 1e-12;
  MarginConvention margin = MarginConvention::kPaper;

  void validate() const;
};

/// KL divergence between diagonal Gaussians (variances, not standard
/// deviations):
///   0.5 { sum v1/v2 - d + sum ln v2 - sum ln v1 + sum (mu2-mu1)^2 / v2 }
/// Nonnegative, zero iff the distributions coincide, and asymmetric.
double kl_diag(const GaussianEmbedding& g1, const GaussianEmbedding& g2);

/// Graph form of kl_diag over vector nodes.
TensorPtr kl_diag(const TensorPtr& mu1, const TensorPtr& var1,
                  const TensorPtr& mu2, const TensorPtr& var2);

/// Canonical-correlation loss over two [N x d] embedding batches:
///   loss = -(sum of the k largest singular values of
///            Smm^(-1/2) Sme See^(-1/2))
/// with Smm, See ridge-regularized. The returned solution's projections
/// satisfy W^T S W = I against the regularized covariances.
std::pair<TensorPtr, CcaSolution> cca_loss(const TensorPtr& hm,
                                           const TensorPtr& he,
                                           const LossConfig& cfg);

/// Triplet ranking loss with KL distances over a batch of positive pairs
/// (same row index = positive pair, every other combination = negative):
/// for each n, sum over n' != n of
///   max{0, D(m_n, e_n) - alpha - D(m_n, e_n')}
/// + max{0, D(e_n, m_n) - alpha - D(e_n, m_n')}.
/// Graph form; all four inputs are [N x d] matrices (means and variances
/// per modality).
TensorPtr ranking_loss(const TensorPtr& music_mu, const TensorPtr& music_var,
                       const TensorPtr& emotion_mu,
                       const TensorPtr& emotion_var, double alpha,
                       MarginConvention margin = MarginConvention::kPaper);

/// Value form over explicit pairs (music, emotion).
double ranking_loss(
    const std::vector<std::pair<GaussianEmbedding, GaussianEmbedding>>& pairs,
    double alpha, MarginConvention margin = MarginConvention::kPaper);

struct CompositeBatch {
  TensorPtr hm;  // [N x d] music CCA-space embeddings
  TensorPtr he;  // [N x d] emotion CCA-space embeddings
  TensorPtr music_mu;
  TensorPtr music_var;
  TensorPtr emotion_mu;
  TensorPtr emotion_var;
};

struct CompositeResult {
  TensorPtr loss;
  double cca_value = 0.0;  // 0 when the term was skipped (lambda = 0)
  double kl_value = 0.0;   // 0 when the term was skipped (lambda = 1)
  CcaSolution solution;    // empty when lambda = 0
};

/// lambda * CCA + (1 - lambda) * KL over batches indexing the same N
/// samples in the same order. The endpoints short-circuit: lambda = 1
/// computes only cca_loss and lambda = 0 only ranking_loss, so endpoint
/// runs are bitwise identical to the single-loss modes.
CompositeResult composite_loss(const CompositeBatch& batch,
                               const LossConfig& cfg);

}  // namespace xmer
