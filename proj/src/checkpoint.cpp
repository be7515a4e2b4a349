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

#include "xmer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace xmer {

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'X', 'M', 'E', 'R', 'C', 'K', 'P', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_array(std::ostream& out, const std::vector<double>& v) {
  write_u64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_array(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));

  nlohmann::json header;
  header["format"] = 1;
  header["rng"] = RandomState::kAlgorithm;
  header["seed"] = ckpt.config.seed;
  header["config"] = serialize_config(ckpt.config);
  header["solution"] = {{"dim", ckpt.solution.dim},
                        {"k", ckpt.solution.k},
                        {"ridge", ckpt.solution.ridge},
                        {"batch_size", ckpt.solution.batch_size}};
  const std::string header_text = header.dump();
  write_u64(out, header_text.size());
  out.write(header_text.data(),
            static_cast<std::streamsize>(header_text.size()));

  for (const auto& leaf : ckpt.params.leaves()) {
    write_array(out, leaf->values());
  }
  write_array(out, ckpt.solution.w_music);
  write_array(out, ckpt.solution.w_emotion);
  write_array(out, ckpt.solution.correlations);
  if (!out) throw DataError("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not an xmer checkpoint: " + path.string());
  }
  const std::uint64_t header_len = read_u64(in);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  nlohmann::json header = nlohmann::json::parse(header_text, nullptr, false);
  if (header.is_discarded() || header.value("format", 0) != 1) {
    throw DataError("unsupported checkpoint header in " + path.string());
  }

  Checkpoint ckpt;
  ckpt.config = parse_config(header.at("config").get<std::string>());
  // Rebuild the parameter structure, then overwrite every leaf with the
  // stored values.
  RandomState rng(ckpt.config.seed);
  ckpt.params = init_model(ckpt.config, rng);
  for (const auto& leaf : ckpt.params.leaves()) {
    auto stored = read_array(in);
    if (stored.size() != leaf->size()) {
      throw DataError("checkpoint tensor size mismatch in " + path.string());
    }
    leaf->mutable_values() = std::move(stored);
  }
  const auto& sol = header.at("solution");
  ckpt.solution.dim = sol.at("dim").get<std::size_t>();
  ckpt.solution.k = sol.at("k").get<std::size_t>();
  ckpt.solution.ridge = sol.at("ridge").get<double>();
  ckpt.solution.batch_size = sol.at("batch_size").get<std::size_t>();
  ckpt.solution.w_music = read_array(in);
  ckpt.solution.w_emotion = read_array(in);
  ckpt.solution.correlations = read_array(in);
  if (!in) throw DataError("truncated checkpoint " + path.string());
  return ckpt;
}

}  // namespace xmer
