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

#include <optional>
#include <string>
#include <vector>

#include "xmer/config.hpp"
#include "xmer/data.hpp"
#include "xmer/encoders.hpp"
#include "xmer/losses.hpp"
#include "xmer/retrieval.hpp"

namespace xmer {

/// Adaptive-moment first-order optimizer with the canonical constants
/// (beta1 = 0.9, beta2 = 0.999, eps = 1e-8). A step from a fresh state
/// with zero gradients leaves parameters unchanged.
class Adam {
 public:
  Adam(std::vector<TensorPtr> params, double lr);

  void zero_grad();
  void step();

 private:
  std::vector<TensorPtr> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_;
  std::size_t t_ = 0;
};

/// One encoder of either kind.
struct EncoderParams {
  EncoderKind kind = EncoderKind::kMlp;
  MlpEncoderParams mlp;
  BiGruEncoderParams gru;

  std::vector<TensorPtr> leaves() const;
  TensorPtr encode_batch(const std::vector<TensorPtr>& seqs, RandomState& rng,
                         bool training) const;
};

/// Everything the trainer learns: two encoders plus their three projection
/// heads each.
struct ModelParams {
  EncoderParams music;
  EncoderParams emotion;
  HeadParams music_heads;
  HeadParams emotion_heads;

  std::vector<TensorPtr> leaves() const;
};

ModelParams init_model(const TrainConfig& cfg, RandomState& rng);

struct TrainResult {
  ModelParams params;
  CcaSolution solution;
  std::vector<double> loss_trace;  // one entry per epoch
};

/// Full training loop. Per epoch: forward both encoders over the batch,
/// composite loss, Adam update. After the last epoch the CcaSolution is
/// recomputed on the full training batch with a no-dropout forward pass and
/// frozen for inference.
TrainResult train(const TrainConfig& cfg,
                  const std::vector<PairedSample>& train_set);

struct DirectionMetrics {
  std::vector<RankedResult> per_query;
  std::vector<std::size_t> ranks;
  double mrr = 0.0;
  double ar = 0.0;
  double cosine_mean = 0.0;
  double cosine_std = 0.0;
  std::size_t skipped = 0;  // queries skipped due to undefined similarity
};

struct EvalReport {
  DirectionMetrics m2e;
  DirectionMetrics e2m;
};

/// Every eval sample serves once as query against all eval samples of the
/// other modality; evaluation never mutates parameters.
EvalReport evaluate(const ModelParams& params, const CcaSolution& solution,
                    const std::vector<PairedSample>& eval_set,
                    const TrainConfig& cfg);

struct SessionRow {
  std::uint64_t seed = 0;
  double m2e_mrr = 0.0, m2e_ar = 0.0;
  double e2m_mrr = 0.0, e2m_ar = 0.0;
  double m2e_cos = 0.0, e2m_cos = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct ExperimentReport {
  std::vector<SessionRow> sessions;
  Aggregate m2e_mrr, m2e_ar, e2m_mrr, e2m_ar, m2e_cos, e2m_cos;
  double wall_seconds = 0.0;
  TrainConfig config;
};

/// Session i re-splits and re-trains with seed = config.seed + i, then
/// aggregates mean and population standard deviation across sessions.
ExperimentReport repeat_experiment(const TrainConfig& cfg,
                                   const std::vector<PairedSample>& samples,
                                   std::size_t sessions);

struct LambdaPoint {
  double lambda = 0.0;
  ExperimentReport report;
};

/// Sweeps lambda over `values` (default 0.0 .. 1.0 in steps of 0.1) with the
/// composite loss; the endpoints reproduce the single-loss modes bitwise.
std::vector<LambdaPoint> lambda_sweep(const TrainConfig& cfg,
                                      const std::vector<PairedSample>& samples,
                                      std::size_t sessions,
                                      const std::vector<double>& values = {
                                          0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6,
                                          0.7, 0.8, 0.9, 1.0});

Aggregate aggregate(const std::vector<double>& xs);

}  // namespace xmer
