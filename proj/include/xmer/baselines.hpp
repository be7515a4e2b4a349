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
#include <string>
#include <vector>

#include "xmer/data.hpp"
#include "xmer/encoders.hpp"
#include "xmer/trainer.hpp"

namespace xmer {

enum class Direction { kM2E, kE2M };

/// One-way regression baseline: an encoder of either kind regressing the
/// time-averaged target of the other modality under mean absolute error.
/// The hidden layers follow the main-encoder conventions (softplus +
/// dropout); the final layer is linear since targets are signed. fc_widths
/// includes the output layer, which must be 2 wide for M2E and 128 wide
/// for E2M.
struct BaselineSpec {
  Direction direction = Direction::kM2E;
  EncoderKind kind = EncoderKind::kMlp;
  std::vector<std::size_t> fc_widths = {32, 2};
  std::size_t hidden = 32;  // BiGRU hidden width
  std::size_t epochs = 400;
  double lr = 1e-3;
  double dropout = 0.0;

  void validate() const;
  std::string name() const;  // e.g. "RegMLP-M2E"
};

struct BaselineParams {
  BaselineSpec spec;
  // MLP variant: the whole stack lives in `layers` (input = averaged
  // opposite-modality vector). BiGRU variant: cells + post layers.
  std::vector<AffineLayer> layers;
  GruCellParams forward, backward;

  std::vector<TensorPtr> leaves() const;
};

/// Trains with full-batch Adam on MAE; throws NumericError with the epoch
/// number if the loss ever goes non-finite.
struct BaselineTrainResult {
  BaselineParams params;
  std::vector<double> mae_trace;
};
BaselineTrainResult baseline_train(const BaselineSpec& spec,
                                   const std::vector<PairedSample>& train_set,
                                   std::uint64_t seed);

/// Predicted target vectors for each sample, inference mode.
std::vector<std::vector<double>> baseline_predict(
    const BaselineParams& params, const std::vector<PairedSample>& samples);

/// Ranks ground-truth targets by ascending absolute error against each
/// prediction (similarity = negative mean absolute error) and feeds the
/// ranks to the shared mrr/ar metrics.
struct BaselineMetrics {
  std::vector<std::size_t> ranks;
  double mrr = 0.0;
  double ar = 0.0;
};
BaselineMetrics baseline_rank(
    const std::vector<std::vector<double>>& predictions,
    const std::vector<std::vector<double>>& ground_truths);

/// Train + evaluate on a prepared split.
BaselineMetrics baseline_evaluate(const BaselineParams& params,
                                  const std::vector<PairedSample>& eval_set);

/// Time-averaged regression target of a sample for the given direction.
std::vector<double> baseline_target(const PairedSample& s, Direction dir);

}  // namespace xmer
