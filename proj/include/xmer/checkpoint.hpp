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

#include <filesystem>

#include "xmer/trainer.hpp"

namespace xmer {

/// Trained model container: parameters, frozen canonical projections and
/// the exact configuration + seed that produced them.
struct Checkpoint {
  TrainConfig config;
  ModelParams params;
  CcaSolution solution;
};

/// Binary checkpoint layout (little-endian):
///   8-byte magic "XMERCKP1",
///   u64 header length + JSON header (format version, seed, RNG algorithm,
///   serialized config),
///   per tensor: u64 element count + raw 64-bit values, in the documented
///   leaves() order, followed by the solution arrays.
/// Save -> load -> save is bitwise stable.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xmer
