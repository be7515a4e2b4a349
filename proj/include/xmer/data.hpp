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
#include <utility>
#include <vector>

#include "xmer/random.hpp"

namespace xmer {

/// Frame hop lengths in seconds: acoustic frames and annotation frames.
inline constexpr double kMusicHop = 0.96;
inline constexpr double kEmotionHop = 0.5;
inline constexpr std::size_t kMusicWidth = 128;
inline constexpr std::size_t kEmotionWidth = 2;

/// Time-ordered sequence of fixed-width frames, row-major.
struct Sequence {
  std::size_t width = 0;
  std::vector<double> values;

  std::size_t frames() const { return width == 0 ? 0 : values.size() / width; }
  double at(std::size_t t, std::size_t j) const { return values[t * width + j]; }
  double duration(double hop) const { return static_cast<double>(frames()) * hop; }
};

/// Declared intensity range of the annotations: DEAM-style [-1, 1] or
/// PMEmo-style [0, 1].
enum class IntensityRange { kSigned, kUnit };

struct PairedSample {
  std::string id;
  Sequence music;   // T_m x 128
  Sequence emotion; // T_e x 2, (valence, arousal) per frame
  std::string tag;

  /// Column means: the "overall" vectors used by the cosine analysis and
  /// the regression baselines.
  std::vector<double> music_overall() const;
  std::vector<double> emotion_overall() const;
};

struct ManifestEntry {
  std::string id;
  std::string music_file;
  std::vector<std::string> annotation_files;  // one per subject
};

struct DatasetManifest {
  std::filesystem::path root;
  IntensityRange range = IntensityRange::kSigned;
  double music_hop = kMusicHop;
  double emotion_hop = kEmotionHop;
  std::vector<ManifestEntry> entries;
};

/// Sample as loaded: per-subject annotation sequences, not yet averaged.
struct RawSample {
  std::string id;
  Sequence music;
  std::vector<Sequence> subjects;
};

/// Parses a manifest file ("xmer-manifest v1" header) and verifies every
/// referenced file exists. Paths are resolved against the manifest's
/// directory.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Loads every sample in the manifest. Music rows must be 128 wide and
/// annotation rows 2 wide; violations raise DataError naming file and line.
std::vector<RawSample> load_dataset(const DatasetManifest& manifest);

/// Elementwise mean over subjects; all sequences must have equal lengths.
Sequence average_annotations(const std::vector<Sequence>& per_subject);

/// Applies the 15-45 s evaluation window: a frame is retained iff its end
/// time lies in (15, 45], which keeps exactly 60 annotation frames (0.5 s
/// hop) and 31 acoustic frames (0.96 s hop). Shorter samples raise
/// DataError.
PairedSample window_deam(const PairedSample& sample);

/// Keeps samples whose annotated duration is at least `min_seconds`
/// (inclusive boundary).
std::vector<PairedSample> filter_min_length(std::vector<PairedSample> samples,
                                            double min_seconds = 7.0);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

/// Seeded shuffle, then train = first floor(fraction * n) samples. The two
/// halves are disjoint and exhaustive.
std::pair<std::vector<PairedSample>, std::vector<PairedSample>> split(
    const std::vector<PairedSample>& samples, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Synthetic paired-modality generator for desk-scale validation. Each
// sample draws a latent z; every music frame is A z plus per-frame noise
// and every emotion frame is tanh(B z + noise), so the pair shares z and
// the emotion stays inside the signed intensity range. A and B are fixed
// by the seed for the whole dataset; the valence row of B is scaled down
// relative to arousal, mirroring the lower annotation reliability of
// valence.
// ---------------------------------------------------------------------------

struct SynthConfig {
  std::size_t n = 250;
  std::size_t latent_dim = 4;
  double noise_scale = 0.1;
  std::size_t len_lo = 8;  // frames, both modalities
  std::size_t len_hi = 14;
  std::uint64_t seed = 0;
  double music_scale = 0.12;    // per-entry std of A
  double arousal_scale = 0.45;  // norm of B's arousal row
  double valence_scale = 0.3;   // norm of B's valence row
  // Per-channel noise multipliers on top of noise_scale. Valence
  // annotations are considerably noisier than arousal in practice; the
  // asymmetry carries over here.
  double valence_noise = 3.0;
  double arousal_noise = 0.4;
};

std::vector<PairedSample> synth_generate(const SynthConfig& cfg);

/// Renders one sample from an explicit latent; exposed so tests can verify
/// that equal latents with zero noise give identical samples.
PairedSample synth_render(const SynthConfig& cfg,
                          const std::vector<double>& a,
                          const std::vector<double>& b,
                          const std::vector<double>& z, std::size_t t_music,
                          std::size_t t_emotion, RandomState& rng,
                          const std::string& id);

// ---------------------------------------------------------------------------
// Serialization. Datasets are written as one manifest plus one feature and
// one annotation file per sample; numbers use shortest round-trip decimal
// form, so write -> read -> write is byte-identical.
// ---------------------------------------------------------------------------

void write_dataset(const std::filesystem::path& dir,
                   const std::vector<PairedSample>& samples,
                   IntensityRange range);

/// Loads a prepared dataset (one annotation file per sample) back into
/// paired samples, averaging trivially over the single subject.
std::vector<PairedSample> load_prepared(const std::filesystem::path& manifest);

}  // namespace xmer
