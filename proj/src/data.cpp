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

#include "xmer/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "xmer/error.hpp"

namespace xmer {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestHeader = "xmer-manifest v1";
constexpr const char* kFeaturesHeader = "xmer-features v1";
constexpr const char* kAnnotationsHeader = "xmer-annotations v1";

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

double parse_double(std::string_view token, const fs::path& file,
                    std::size_t line_no) {
  double out = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw DataError(file.string() + ":" + std::to_string(line_no) +
                    ": cannot parse number '" + std::string(token) + "'");
  }
  return out;
}

// Reads a framed numeric file: header line, then one comma-separated frame
// per line.
Sequence read_frames(const fs::path& file, const char* header,
                     std::size_t expect_width) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != header) {
    throw DataError(file.string() + ":1: expected header '" +
                    std::string(header) + "'");
  }
  Sequence seq;
  seq.width = expect_width;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t width = 0;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      seq.values.push_back(parse_double(
          std::string_view(line).substr(start, comma - start), file, line_no));
      ++width;
      start = comma + 1;
      if (comma == line.size()) break;
    }
    if (width != expect_width) {
      throw DataError(file.string() + ":" + std::to_string(line_no) +
                      ": row has " + std::to_string(width) +
                      " values, expected " + std::to_string(expect_width));
    }
  }
  return seq;
}

void write_frames(const fs::path& file, const char* header,
                  const Sequence& seq) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  out << header << "\n";
  for (std::size_t t = 0; t < seq.frames(); ++t) {
    for (std::size_t j = 0; j < seq.width; ++j) {
      if (j) out << ',';
      out << format_double(seq.at(t, j));
    }
    out << "\n";
  }
  if (!out) throw DataError("write failed for " + file.string());
}

std::vector<double> column_means(const Sequence& seq) {
  std::vector<double> out(seq.width, 0.0);
  const std::size_t t_len = seq.frames();
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t j = 0; j < seq.width; ++j) out[j] += seq.at(t, j);
  for (double& v : out) v /= static_cast<double>(t_len);
  return out;
}

}  // namespace

std::vector<double> PairedSample::music_overall() const {
  return column_means(music);
}

std::vector<double> PairedSample::emotion_overall() const {
  return column_means(emotion);
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kManifestHeader) {
    throw DataError(path.string() + ":1: expected header '" +
                    std::string(kManifestHeader) + "'");
  }
  bool saw_range = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string kind;
    row >> kind;
    if (kind == "range") {
      double lo = 0.0, hi = 0.0;
      if (!(row >> lo >> hi)) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed range line");
      }
      if (lo == -1.0 && hi == 1.0) {
        m.range = IntensityRange::kSigned;
      } else if (lo == 0.0 && hi == 1.0) {
        m.range = IntensityRange::kUnit;
      } else {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": unsupported intensity range");
      }
      saw_range = true;
    } else if (kind == "hops") {
      if (!(row >> m.music_hop >> m.emotion_hop)) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed hops line");
      }
    } else if (kind == "sample") {
      ManifestEntry e;
      row >> e.id >> e.music_file;
      std::string annot;
      while (row >> annot) e.annotation_files.push_back(annot);
      if (e.id.empty() || e.music_file.empty() || e.annotation_files.empty()) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": sample line needs id, feature file and at least "
                        "one annotation file");
      }
      if (!fs::exists(m.root / e.music_file)) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": missing feature file " + e.music_file);
      }
      for (const auto& a : e.annotation_files) {
        if (!fs::exists(m.root / a)) {
          throw DataError(path.string() + ":" + std::to_string(line_no) +
                          ": missing annotation file " + a);
        }
      }
      m.entries.push_back(std::move(e));
    } else {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": unknown directive '" + kind + "'");
    }
  }
  if (!saw_range) {
    throw DataError(path.string() + ": missing range declaration");
  }
  return m;
}

std::vector<RawSample> load_dataset(const DatasetManifest& manifest) {
  const double lo = manifest.range == IntensityRange::kSigned ? -1.0 : 0.0;
  const double hi = 1.0;
  std::vector<RawSample> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    RawSample s;
    s.id = e.id;
    s.music =
        read_frames(manifest.root / e.music_file, kFeaturesHeader, kMusicWidth);
    if (s.music.frames() == 0) {
      throw DataError((manifest.root / e.music_file).string() +
                      ": feature file has no frames");
    }
    for (const auto& a : e.annotation_files) {
      auto seq =
          read_frames(manifest.root / a, kAnnotationsHeader, kEmotionWidth);
      if (seq.frames() == 0) {
        throw DataError((manifest.root / a).string() +
                        ": annotation file has no frames");
      }
      for (double v : seq.values) {
        if (v < lo - 1e-12 || v > hi + 1e-12) {
          throw DataError((manifest.root / a).string() +
                          ": intensity outside declared range");
        }
      }
      s.subjects.push_back(std::move(seq));
    }
    out.push_back(std::move(s));
  }
  return out;
}

Sequence average_annotations(const std::vector<Sequence>& per_subject) {
  if (per_subject.empty()) {
    throw InvalidArgument("average_annotations: no subjects");
  }
  const std::size_t frames = per_subject.front().frames();
  const std::size_t width = per_subject.front().width;
  for (const auto& s : per_subject) {
    if (s.frames() != frames || s.width != width) {
      throw DataError(
          "average_annotations: subjects disagree on sequence length");
    }
  }
  Sequence out;
  out.width = width;
  out.values.assign(frames * width, 0.0);
  for (const auto& s : per_subject)
    for (std::size_t i = 0; i < out.values.size(); ++i)
      out.values[i] += s.values[i];
  const double inv = 1.0 / static_cast<double>(per_subject.size());
  for (double& v : out.values) v *= inv;
  return out;
}

namespace {

// Frames whose end time falls in (start, stop].
Sequence window_by_end_time(const Sequence& seq, double hop, double start,
                            double stop) {
  Sequence out;
  out.width = seq.width;
  for (std::size_t t = 0; t < seq.frames(); ++t) {
    const double end = hop * static_cast<double>(t + 1);
    if (end > start + 1e-9 && end <= stop + 1e-9) {
      out.values.insert(out.values.end(), seq.values.begin() + t * seq.width,
                        seq.values.begin() + (t + 1) * seq.width);
    }
  }
  return out;
}

}  // namespace

PairedSample window_deam(const PairedSample& sample) {
  if (sample.emotion.duration(kEmotionHop) < 45.0 - 1e-9) {
    throw DataError("window_deam: sample '" + sample.id +
                    "' annotations cover less than 45 s");
  }
  PairedSample out = sample;
  out.emotion = window_by_end_time(sample.emotion, kEmotionHop, 15.0, 45.0);
  out.music = window_by_end_time(sample.music, kMusicHop, 15.0, 45.0);
  if (out.music.frames() < 31) {
    throw DataError("window_deam: sample '" + sample.id +
                    "' music features cover less than 45 s");
  }
  return out;
}

std::vector<PairedSample> filter_min_length(std::vector<PairedSample> samples,
                                            double min_seconds) {
  std::erase_if(samples, [min_seconds](const PairedSample& s) {
    return s.emotion.duration(kEmotionHop) < min_seconds;
  });
  return samples;
}

std::pair<std::vector<PairedSample>, std::vector<PairedSample>> split(
    const std::vector<PairedSample>& samples, const SplitSpec& spec) {
  if (samples.size() < 2) throw InvalidArgument("split: needs >= 2 samples");
  if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0) {
    throw InvalidArgument("split: fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  RandomState rng(spec.seed);
  // Fisher-Yates, back to front.
  for (std::size_t i = idx.size() - 1; i > 0; --i) {
    std::swap(idx[i], idx[rng.index(i + 1)]);
  }
  const std::size_t n_train = static_cast<std::size_t>(
      std::floor(spec.train_fraction * static_cast<double>(samples.size())));
  std::pair<std::vector<PairedSample>, std::vector<PairedSample>> out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (i < n_train ? out.first : out.second).push_back(samples[idx[i]]);
  }
  return out;
}

PairedSample synth_render(const SynthConfig& cfg, const std::vector<double>& a,
                          const std::vector<double>& b,
                          const std::vector<double>& z, std::size_t t_music,
                          std::size_t t_emotion, RandomState& rng,
                          const std::string& id) {
  const std::size_t latent = cfg.latent_dim;
  PairedSample s;
  s.id = id;
  s.tag = "synthetic";
  s.music.width = kMusicWidth;
  s.music.values.reserve(t_music * kMusicWidth);
  std::vector<double> music_mean(kMusicWidth, 0.0);
  for (std::size_t i = 0; i < kMusicWidth; ++i)
    for (std::size_t j = 0; j < latent; ++j)
      music_mean[i] += a[i * latent + j] * z[j];
  for (std::size_t t = 0; t < t_music; ++t)
    for (std::size_t i = 0; i < kMusicWidth; ++i)
      s.music.values.push_back(music_mean[i] + cfg.noise_scale * rng.normal());
  std::vector<double> emotion_mean(kEmotionWidth, 0.0);
  for (std::size_t i = 0; i < kEmotionWidth; ++i)
    for (std::size_t j = 0; j < latent; ++j)
      emotion_mean[i] += b[i * latent + j] * z[j];
  s.emotion.width = kEmotionWidth;
  s.emotion.values.reserve(t_emotion * kEmotionWidth);
  const double channel_noise[2] = {cfg.noise_scale * cfg.valence_noise,
                                   cfg.noise_scale * cfg.arousal_noise};
  for (std::size_t t = 0; t < t_emotion; ++t)
    for (std::size_t i = 0; i < kEmotionWidth; ++i)
      s.emotion.values.push_back(
          std::tanh(emotion_mean[i] + channel_noise[i] * rng.normal()));
  return s;
}

std::vector<PairedSample> synth_generate(const SynthConfig& cfg) {
  if (cfg.n < 1) throw InvalidArgument("synth_generate: n must be >= 1");
  if (cfg.latent_dim < 1 || cfg.len_lo < 1 || cfg.len_hi < cfg.len_lo) {
    throw InvalidArgument("synth_generate: bad latent dim or length range");
  }
  RandomState rng(cfg.seed);
  const std::size_t latent = cfg.latent_dim;
  // The mixing maps are fixed by the seed and shared by every sample.
  std::vector<double> a(kMusicWidth * latent);
  for (double& v : a) v = cfg.music_scale * rng.normal();
  std::vector<double> b(kEmotionWidth * latent);
  const double inv_sqrt_latent = 1.0 / std::sqrt(static_cast<double>(latent));
  for (std::size_t j = 0; j < latent; ++j) {
    b[0 * latent + j] = cfg.valence_scale * inv_sqrt_latent * rng.normal();
    b[1 * latent + j] = cfg.arousal_scale * inv_sqrt_latent * rng.normal();
  }
  std::vector<PairedSample> out;
  out.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    std::vector<double> z(latent);
    for (double& v : z) v = rng.normal();
    const std::size_t span = cfg.len_hi - cfg.len_lo + 1;
    const std::size_t t_music = cfg.len_lo + rng.index(span);
    const std::size_t t_emotion = cfg.len_lo + rng.index(span);
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%04zu", i);
    out.push_back(synth_render(cfg, a, b, z, t_music, t_emotion, rng, id));
  }
  return out;
}

void write_dataset(const fs::path& dir, const std::vector<PairedSample>& samples,
                   IntensityRange range) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) {
    throw DataError("cannot write " + (dir / "manifest.txt").string());
  }
  manifest << kManifestHeader << "\n";
  manifest << "range " << (range == IntensityRange::kSigned ? "-1 1" : "0 1")
           << "\n";
  manifest << "hops " << format_double(kMusicHop) << " "
           << format_double(kEmotionHop) << "\n";
  for (const auto& s : samples) {
    const std::string music_file = s.id + ".features.csv";
    const std::string annot_file = s.id + ".annotations.csv";
    write_frames(dir / music_file, kFeaturesHeader, s.music);
    write_frames(dir / annot_file, kAnnotationsHeader, s.emotion);
    manifest << "sample " << s.id << " " << music_file << " " << annot_file
             << "\n";
  }
  if (!manifest) {
    throw DataError("write failed for " + (dir / "manifest.txt").string());
  }
}

std::vector<PairedSample> load_prepared(const fs::path& manifest_path) {
  auto manifest = load_manifest(manifest_path);
  auto raw = load_dataset(manifest);
  std::vector<PairedSample> out;
  out.reserve(raw.size());
  for (auto& r : raw) {
    PairedSample s;
    s.id = std::move(r.id);
    s.music = std::move(r.music);
    s.emotion = average_annotations(r.subjects);
    s.tag = manifest.range == IntensityRange::kSigned ? "deam-style"
                                                      : "pmemo-style";
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace xmer
