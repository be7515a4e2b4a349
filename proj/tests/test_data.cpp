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

#include <cstdint>
#include <filesystem>
#include <cstring>
#include <fstream>
#include <set>

#include "support/oracles.hpp"
#include "xmer/data.hpp"
#include "xmer/error.hpp"

using namespace xmer;
namespace fs = std::filesystem;

namespace {

// The fixture lives next to this source file.
fs::path fixture_dir() {
  return fs::path(XMER_TEST_DIR) / "fixtures" / "mini";
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("xmer_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::uint64_t fnv_values(const std::vector<double>& values,
                         std::uint64_t h = 14695981039346656037ull) {
  for (double v : values) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

Sequence const_emotion(std::size_t frames, double v, double a) {
  Sequence s;
  s.width = 2;
  for (std::size_t t = 0; t < frames; ++t) {
    s.values.push_back(v);
    s.values.push_back(a);
  }
  return s;
}

PairedSample dummy_sample(const std::string& id, std::size_t mframes,
                          std::size_t eframes) {
  PairedSample s;
  s.id = id;
  s.music.width = kMusicWidth;
  s.music.values.assign(mframes * kMusicWidth, 0.25);
  s.emotion = const_emotion(eframes, 0.1, -0.2);
  return s;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("bundled fixture loads with the frozen checksum") {
  auto manifest = load_manifest(fixture_dir() / "manifest.txt");
  CHECK(manifest.range == IntensityRange::kSigned);
  CHECK(manifest.entries.size() == 5);
  auto raw = load_dataset(manifest);
  REQUIRE(raw.size() == 5);
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& s : raw) {
    CHECK(s.music.width == 128);
    h = fnv_values(s.music.values, h);
    CHECK(s.subjects.size() == 2);
    for (const auto& subj : s.subjects) {
      CHECK(subj.width == 2);
      h = fnv_values(subj.values, h);
    }
  }
  CHECK(h == 0xe2f3d6450a85c854ull);
}

TEST_CASE("empty manifest yields an empty list") {
  auto dir = temp_dir("empty_manifest");
  std::ofstream(dir / "manifest.txt") << "xmer-manifest v1\nrange -1 1\n";
  auto manifest = load_manifest(dir / "manifest.txt");
  CHECK(load_dataset(manifest).empty());
}

TEST_CASE("parse errors name the offending file") {
  auto dir = temp_dir("bad_width");
  {
    std::ofstream f(dir / "bad.features.csv");
    f << "xmer-features v1\n";
    for (int j = 0; j < 127; ++j) f << (j ? "," : "") << "0.5";
    f << "\n";
  }
  std::ofstream(dir / "ok.annotations.csv")
      << "xmer-annotations v1\n0.1,0.2\n";
  std::ofstream(dir / "manifest.txt")
      << "xmer-manifest v1\nrange -1 1\n"
      << "sample s0 bad.features.csv ok.annotations.csv\n";
  auto manifest = load_manifest(dir / "manifest.txt");
  try {
    load_dataset(manifest);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bad.features.csv") != std::string::npos);
    CHECK(std::string(e.what()).find("127") != std::string::npos);
  }

  // missing file is already a manifest error
  std::ofstream(dir / "manifest2.txt")
      << "xmer-manifest v1\nrange -1 1\n"
      << "sample s0 nosuch.features.csv ok.annotations.csv\n";
  CHECK_THROWS_AS(load_manifest(dir / "manifest2.txt"), DataError);

  // out-of-range intensity
  std::ofstream(dir / "range.annotations.csv")
      << "xmer-annotations v1\n0.1,1.75\n";
  std::ofstream(dir / "good.features.csv").close();
  {
    std::ofstream f(dir / "good.features.csv");
    f << "xmer-features v1\n";
    for (int j = 0; j < 128; ++j) f << (j ? "," : "") << "0.5";
    f << "\n";
  }
  std::ofstream(dir / "manifest3.txt")
      << "xmer-manifest v1\nrange -1 1\n"
      << "sample s0 good.features.csv range.annotations.csv\n";
  CHECK_THROWS_AS(load_dataset(load_manifest(dir / "manifest3.txt")),
                  DataError);
}

TEST_CASE("average_annotations") {
  Sequence a = const_emotion(1, 0.2, 0.2);
  Sequence b = const_emotion(1, 0.4, 0.4);
  auto avg = average_annotations({a, b});
  CHECK(avg.at(0, 0) == doctest::Approx(0.3).epsilon(1e-15));

  // single subject is the identity
  auto one = average_annotations({a});
  CHECK(one.values == a.values);

  // random five-subject stack vs brute-force mean
  RandomState rng(3);
  std::vector<Sequence> subjects;
  for (int s = 0; s < 5; ++s) {
    Sequence seq;
    seq.width = 2;
    for (int t = 0; t < 7; ++t) {
      seq.values.push_back(rng.uniform(-1.0, 1.0));
      seq.values.push_back(rng.uniform(-1.0, 1.0));
    }
    subjects.push_back(std::move(seq));
  }
  auto mean = average_annotations(subjects);
  for (std::size_t i = 0; i < mean.values.size(); ++i) {
    double expect = 0.0;
    for (const auto& s : subjects) expect += s.values[i];
    expect /= 5.0;
    CHECK(std::abs(mean.values[i] - expect) < 1e-15);
  }

  // channel permutation commutes with averaging
  std::vector<Sequence> swapped = subjects;
  for (auto& s : swapped) {
    for (std::size_t t = 0; t < s.frames(); ++t) {
      std::swap(s.values[t * 2], s.values[t * 2 + 1]);
    }
  }
  auto mean_swapped = average_annotations(swapped);
  for (std::size_t t = 0; t < mean.frames(); ++t) {
    CHECK(mean_swapped.at(t, 0) == mean.at(t, 1));
    CHECK(mean_swapped.at(t, 1) == mean.at(t, 0));
  }

  Sequence shorter = const_emotion(3, 0.0, 0.0);
  CHECK_THROWS_AS(average_annotations({a, shorter}), DataError);
  CHECK_THROWS_AS(average_annotations({}), InvalidArgument);
}

TEST_CASE("window_deam keeps exactly (60, 31) frames") {
  PairedSample s;
  s.id = "w";
  s.music.width = kMusicWidth;
  s.emotion.width = kEmotionWidth;
  // mark every frame with its index so retention is observable
  const std::size_t mframes = 46, eframes = 90;
  for (std::size_t t = 0; t < mframes; ++t)
    for (std::size_t j = 0; j < kMusicWidth; ++j)
      s.music.values.push_back(static_cast<double>(t));
  for (std::size_t t = 0; t < eframes; ++t) {
    s.emotion.values.push_back(static_cast<double>(t) / 100.0);
    s.emotion.values.push_back(0.0);
  }
  auto w = window_deam(s);
  CHECK(w.emotion.frames() == 60);
  CHECK(w.music.frames() == 31);
  // emotion frames 30..89 retained
  CHECK(w.emotion.at(0, 0) == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(w.emotion.at(59, 0) == doctest::Approx(0.89).epsilon(1e-12));
  // music frames 15..45 retained (0-based)
  CHECK(w.music.at(0, 0) == 15.0);
  CHECK(w.music.at(30, 0) == 45.0);

  // longer samples get the same 15-45 s window
  PairedSample longer = s;
  for (std::size_t t = mframes; t < 60; ++t)
    for (std::size_t j = 0; j < kMusicWidth; ++j)
      longer.music.values.push_back(static_cast<double>(t));
  for (std::size_t t = eframes; t < 120; ++t) {
    longer.emotion.values.push_back(0.5);
    longer.emotion.values.push_back(0.5);
  }
  auto wl = window_deam(longer);
  CHECK(wl.emotion.frames() == 60);
  CHECK(wl.music.frames() == 31);
  CHECK(wl.music.at(30, 0) == 45.0);

  // 40 s of annotations is a coverage error
  PairedSample shorty = s;
  shorty.emotion.values.resize(80 * 2);
  CHECK_THROWS_AS(window_deam(shorty), DataError);
}

TEST_CASE("filter_min_length boundary is inclusive") {
  // 14 frames * 0.5 s = 7.0 s (kept), 13 frames = 6.5 s (removed)
  std::vector<PairedSample> samples = {dummy_sample("keep", 3, 14),
                                       dummy_sample("drop", 3, 13)};
  auto kept = filter_min_length(samples, 7.0);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].id == "keep");
  CHECK(filter_min_length({}, 7.0).empty());
}

TEST_CASE("split reproduces the published proportions") {
  std::vector<PairedSample> big;
  for (int i = 0; i < 1802; ++i)
    big.push_back(dummy_sample("s" + std::to_string(i), 1, 1));
  auto [train, eval] = split(big, {0.8, 123});
  CHECK(train.size() == 1441);
  CHECK(eval.size() == 361);

  std::vector<PairedSample> small(big.begin(), big.begin() + 701);
  auto [t2, e2] = split(small, {0.8, 123});
  CHECK(t2.size() == 560);
  CHECK(e2.size() == 141);

  // determinism, disjointness, exhaustiveness
  auto [t3, e3] = split(small, {0.8, 123});
  for (std::size_t i = 0; i < t2.size(); ++i) CHECK(t2[i].id == t3[i].id);
  std::set<std::string> ids;
  for (const auto& s : t2) ids.insert(s.id);
  for (const auto& s : e2) {
    CHECK(ids.find(s.id) == ids.end());
    ids.insert(s.id);
  }
  CHECK(ids.size() == 701);

  auto [t4, e4] = split(small, {0.8, 124});
  bool differs = false;
  for (std::size_t i = 0; i < t2.size(); ++i)
    differs = differs || t2[i].id != t4[i].id;
  CHECK(differs);
}

TEST_CASE("synth_generate is deterministic and latent-faithful") {
  SynthConfig cfg;
  cfg.n = 20;
  cfg.seed = 9;
  auto a = synth_generate(cfg);
  auto b = synth_generate(cfg);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].music.values == b[i].music.values);
    CHECK(a[i].emotion.values == b[i].emotion.values);
  }
  // intensities stay inside the declared signed range
  for (const auto& s : a)
    for (double v : s.emotion.values) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }

  // zero noise: equal latents render identical samples
  SynthConfig quiet = cfg;
  quiet.noise_scale = 0.0;
  std::vector<double> amap(128 * quiet.latent_dim, 0.1);
  std::vector<double> bmap(2 * quiet.latent_dim, 0.2);
  std::vector<double> z = {0.3, -0.5, 1.0, 0.25};
  RandomState r1(1), r2(2);
  auto s1 = synth_render(quiet, amap, bmap, z, 5, 7, r1, "x");
  auto s2 = synth_render(quiet, amap, bmap, z, 5, 7, r2, "y");
  CHECK(s1.music.values == s2.music.values);
  CHECK(s1.emotion.values == s2.emotion.values);
}

TEST_CASE("synthetic data: linear CCA recovers the shared latent") {
  // Time-averaged emotion vectors are 2-dimensional (valence, arousal), so
  // at most two canonical correlations exist; both must exceed 0.9.
  SynthConfig cfg;
  cfg.n = 250;
  cfg.latent_dim = 4;
  cfg.noise_scale = 0.1;
  cfg.seed = 17;
  auto samples = synth_generate(cfg);
  std::vector<double> music(cfg.n * 128), emotion(cfg.n * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto mo = samples[i].music_overall();
    auto eo = samples[i].emotion_overall();
    std::copy(mo.begin(), mo.end(), music.begin() + i * 128);
    std::copy(eo.begin(), eo.end(), emotion.begin() + i * 2);
  }
  auto corr = test::closed_form_cca(music, emotion, cfg.n, 128, 2, 1e-8);
  REQUIRE(corr.size() == 2);
  CHECK(corr[0] > 0.9);
  CHECK(corr[1] > 0.9);
}

TEST_CASE("dataset serialization round-trips bitwise") {
  SynthConfig cfg;
  cfg.n = 6;
  cfg.seed = 33;
  cfg.len_lo = 3;
  cfg.len_hi = 5;
  auto samples = synth_generate(cfg);
  auto dir1 = temp_dir("roundtrip1");
  auto dir2 = temp_dir("roundtrip2");
  write_dataset(dir1, samples, IntensityRange::kSigned);
  auto reloaded = load_prepared(dir1 / "manifest.txt");
  REQUIRE(reloaded.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(reloaded[i].id == samples[i].id);
    CHECK(reloaded[i].music.values == samples[i].music.values);
    CHECK(reloaded[i].emotion.values == samples[i].emotion.values);
  }
  write_dataset(dir2, reloaded, IntensityRange::kSigned);
  // byte-identical files
  for (const auto& entry : fs::directory_iterator(dir1)) {
    std::ifstream f1(entry.path(), std::ios::binary);
    std::ifstream f2(dir2 / entry.path().filename(), std::ios::binary);
    REQUIRE(f2.good());
    std::string c1((std::istreambuf_iterator<char>(f1)), {});
    std::string c2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(c1 == c2);
  }
}

}  // TEST_SUITE
