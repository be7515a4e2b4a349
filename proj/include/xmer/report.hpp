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
#include <string>

#include <json.hpp>

#include "xmer/trainer.hpp"

namespace xmer {

/// Writes the file atomically: temp file in the same directory, then rename.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);

/// "xmer-summary v1" JSON: MRR/AR mean and population std per direction,
/// top-fraction cosine mean/std, session count, config snapshot, wall clock.
nlohmann::json summary_json(const ExperimentReport& report);

/// Strict structural check of a summary document; returns false and fills
/// `error` on the first violation.
bool validate_summary(const nlohmann::json& doc, std::string* error);

void write_summary(const std::filesystem::path& dir,
                   const ExperimentReport& report);

/// Builds a one-session report from a single evaluation (std = 0).
ExperimentReport single_session_report(const EvalReport& eval,
                                       const TrainConfig& cfg);

/// per_query.csv: one row per query and direction with the rank, the top-10
/// candidate ids and their similarities.
void write_per_query_csv(const std::filesystem::path& dir,
                         const EvalReport& eval);

/// loss_trace.csv: epoch,loss.
void write_loss_trace_csv(const std::filesystem::path& dir,
                          const std::vector<double>& trace);

/// sessions.csv: per-session metric rows of an experiment.
void write_sessions_csv(const std::filesystem::path& dir,
                        const ExperimentReport& report);

/// sweep.csv: one aggregate row per lambda value.
void write_sweep_csv(const std::filesystem::path& dir,
                     const std::vector<LambdaPoint>& points);

/// manifest.json: config hash, seed, versions and the full config text, so
/// a run is reconstructible from this one file.
void write_run_manifest(const std::filesystem::path& dir,
                        const TrainConfig& cfg, const std::string& command);

inline constexpr const char* kXmerVersion = "0.1.0";

}  // namespace xmer
