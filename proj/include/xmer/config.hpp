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
#include <filesystem>
#include <string>
#include <vector>

#include "xmer/encoders.hpp"
#include "xmer/losses.hpp"
#include "xmer/retrieval.hpp"

namespace xmer {

enum class LossMode { kComposite, kCcaOnly, kKlOnly };
enum class BatchMode { kFull, kMinibatch };

/// Full training configuration. Defaults are the desk-scale synthetic
/// benchmark; configs/ contains presets with the published DEAM/PMEmo
/// hyper-parameters (d=1024, lr=1e-5, 5001/10001 epochs, dropout 0.5).
///
/// Serialized as line-oriented `key=value` text under a version header;
/// unknown keys are errors.
struct TrainConfig {
  double lambda = 0.5;
  double alpha = 1.0;
  double ridge = 1e-3;
  std::size_t embed_dim = 16;
  std::size_t k = 0;  // canonical directions; 0 means embed_dim
  double lr = 1e-3;
  std::size_t epochs = 800;
  std::size_t sessions = 10;
  std::uint64_t seed = 1;
  LossMode loss_mode = LossMode::kComposite;
  BatchMode batch_mode = BatchMode::kFull;
  std::size_t batch_size = 32;  // minibatch mode only, >= 8
  EncoderKind music_encoder = EncoderKind::kMlp;
  EncoderKind emotion_encoder = EncoderKind::kBiGru;
  std::vector<std::size_t> music_widths = {32, 32, 64};  // MLP widths
  std::size_t music_hidden = 32;                         // BiGRU hidden
  std::vector<std::size_t> music_post_widths = {32, 64};
  std::size_t emotion_hidden = 16;
  std::vector<std::size_t> emotion_post_widths = {32, 64};
  double dropout = 0.0;
  double split_fraction = 0.8;
  double fraction = 0.05;  // top-fraction cosine analysis
  MarginConvention margin = MarginConvention::kPaper;
  KlDirection kl_direction = KlDirection::kQueryToCandidate;

  /// lambda actually used, with the single-loss modes pinned to their
  /// endpoint so training and retrieval agree.
  double effective_lambda() const {
    if (loss_mode == LossMode::kCcaOnly) return 1.0;
    if (loss_mode == LossMode::kKlOnly) return 0.0;
    return lambda;
  }

  LossConfig loss_config() const;
  void validate() const;
};

TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const TrainConfig& cfg);

/// FNV-1a over the canonical serialized form; recorded in run manifests.
std::string config_hash(const TrainConfig& cfg);

std::string to_string(LossMode m);
std::string to_string(EncoderKind k);

}  // namespace xmer
