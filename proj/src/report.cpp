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

#include "xmer/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace xmer {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

nlohmann::json agg_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"std", a.stddev}};
}

bool has_agg(const nlohmann::json& j, const char* key, std::string* error) {
  if (!j.contains(key) || !j[key].is_object() || !j[key].contains("mean") ||
      !j[key]["mean"].is_number() || !j[key].contains("std") ||
      !j[key]["std"].is_number()) {
    if (error) *error = std::string("missing or malformed aggregate '") + key + "'";
    return false;
  }
  return true;
}

void direction_rows(std::ostream& out, const char* direction,
                    const std::vector<RankedResult>& rows) {
  for (const auto& r : rows) {
    out << direction << ',' << r.query_id << ',' << r.rank << ',';
    const std::size_t top = std::min<std::size_t>(10, r.candidate_ids.size());
    for (std::size_t i = 0; i < top; ++i) {
      if (i) out << ';';
      out << r.candidate_ids[i];
    }
    out << ',';
    for (std::size_t i = 0; i < top; ++i) {
      if (i) out << ';';
      out << fmt(r.similarities[i]);
    }
    out << '\n';
  }
}

}  // namespace

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << text;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

nlohmann::json summary_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["schema"] = "xmer-summary v1";
  j["sessions"] = report.sessions.size();
  j["m2e"] = {{"mrr", agg_json(report.m2e_mrr)}, {"ar", agg_json(report.m2e_ar)}};
  j["e2m"] = {{"mrr", agg_json(report.e2m_mrr)}, {"ar", agg_json(report.e2m_ar)}};
  j["top_fraction_cosine"] = {{"m2e", agg_json(report.m2e_cos)},
                              {"e2m", agg_json(report.e2m_cos)}};
  // Wall-clock time stays in the in-memory report only; emitted files must
  // be bitwise reproducible for identical config and seed.
  j["config_hash"] = config_hash(report.config);
  j["config"] = serialize_config(report.config);
  return j;
}

bool validate_summary(const nlohmann::json& doc, std::string* error) {
  if (!doc.is_object()) {
    if (error) *error = "summary is not an object";
    return false;
  }
  if (doc.value("schema", "") != "xmer-summary v1") {
    if (error) *error = "bad or missing schema tag";
    return false;
  }
  if (!doc.contains("sessions") || !doc["sessions"].is_number_unsigned() ||
      doc["sessions"].get<std::size_t>() < 1) {
    if (error) *error = "missing or invalid session count";
    return false;
  }
  for (const char* dir : {"m2e", "e2m"}) {
    if (!doc.contains(dir) || !doc[dir].is_object()) {
      if (error) *error = std::string("missing direction block '") + dir + "'";
      return false;
    }
    if (!has_agg(doc[dir], "mrr", error) || !has_agg(doc[dir], "ar", error)) {
      return false;
    }
  }
  if (!doc.contains("top_fraction_cosine") ||
      !doc["top_fraction_cosine"].is_object() ||
      !has_agg(doc["top_fraction_cosine"], "m2e", error) ||
      !has_agg(doc["top_fraction_cosine"], "e2m", error)) {
    if (error && error->empty()) *error = "missing top_fraction_cosine block";
    return false;
  }
  if (!doc.contains("config") || !doc["config"].is_string()) {
    if (error) *error = "missing config snapshot";
    return false;
  }
  if (!doc.contains("config_hash") || !doc["config_hash"].is_string()) {
    if (error) *error = "missing config hash";
    return false;
  }
  return true;
}

void write_summary(const fs::path& dir, const ExperimentReport& report) {
  write_text_atomic(dir / "summary.json", summary_json(report).dump(2) + "\n");
}

ExperimentReport single_session_report(const EvalReport& eval,
                                       const TrainConfig& cfg) {
  ExperimentReport report;
  report.config = cfg;
  SessionRow row;
  row.seed = cfg.seed;
  row.m2e_mrr = eval.m2e.mrr;
  row.m2e_ar = eval.m2e.ar;
  row.e2m_mrr = eval.e2m.mrr;
  row.e2m_ar = eval.e2m.ar;
  row.m2e_cos = eval.m2e.cosine_mean;
  row.e2m_cos = eval.e2m.cosine_mean;
  report.sessions.push_back(row);
  report.m2e_mrr = {row.m2e_mrr, 0.0};
  report.m2e_ar = {row.m2e_ar, 0.0};
  report.e2m_mrr = {row.e2m_mrr, 0.0};
  report.e2m_ar = {row.e2m_ar, 0.0};
  report.m2e_cos = {row.m2e_cos, eval.m2e.cosine_std};
  report.e2m_cos = {row.e2m_cos, eval.e2m.cosine_std};
  return report;
}

void write_per_query_csv(const fs::path& dir, const EvalReport& eval) {
  std::ostringstream out;
  out << "direction,query_id,rank,top_candidates,top_similarities\n";
  direction_rows(out, "m2e", eval.m2e.per_query);
  direction_rows(out, "e2m", eval.e2m.per_query);
  write_text_atomic(dir / "per_query.csv", out.str());
}

void write_loss_trace_csv(const fs::path& dir,
                          const std::vector<double>& trace) {
  std::ostringstream out;
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << (i + 1) << ',' << fmt(trace[i]) << '\n';
  }
  write_text_atomic(dir / "loss_trace.csv", out.str());
}

void write_sessions_csv(const fs::path& dir, const ExperimentReport& report) {
  std::ostringstream out;
  out << "session,seed,m2e_mrr,m2e_ar,e2m_mrr,e2m_ar,m2e_cos,e2m_cos\n";
  for (std::size_t i = 0; i < report.sessions.size(); ++i) {
    const auto& s = report.sessions[i];
    out << i << ',' << s.seed << ',' << fmt(s.m2e_mrr) << ',' << fmt(s.m2e_ar)
        << ',' << fmt(s.e2m_mrr) << ',' << fmt(s.e2m_ar) << ','
        << fmt(s.m2e_cos) << ',' << fmt(s.e2m_cos) << '\n';
  }
  write_text_atomic(dir / "sessions.csv", out.str());
}

void write_sweep_csv(const fs::path& dir,
                     const std::vector<LambdaPoint>& points) {
  std::ostringstream out;
  out << "lambda,m2e_mrr_mean,m2e_mrr_std,m2e_ar_mean,m2e_ar_std,"
         "e2m_mrr_mean,e2m_mrr_std,e2m_ar_mean,e2m_ar_std\n";
  for (const auto& p : points) {
    out << fmt(p.lambda) << ',' << fmt(p.report.m2e_mrr.mean) << ','
        << fmt(p.report.m2e_mrr.stddev) << ',' << fmt(p.report.m2e_ar.mean)
        << ',' << fmt(p.report.m2e_ar.stddev) << ','
        << fmt(p.report.e2m_mrr.mean) << ',' << fmt(p.report.e2m_mrr.stddev)
        << ',' << fmt(p.report.e2m_ar.mean) << ','
        << fmt(p.report.e2m_ar.stddev) << '\n';
  }
  write_text_atomic(dir / "sweep.csv", out.str());
}

void write_run_manifest(const fs::path& dir, const TrainConfig& cfg,
                        const std::string& command) {
  nlohmann::json j;
  j["schema"] = "xmer-run v1";
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config_hash"] = config_hash(cfg);
  j["config"] = serialize_config(cfg);
  j["versions"] = {{"xmer", kXmerVersion},
                   {"config_format", 1},
                   {"rng", RandomState::kAlgorithm}};
  write_text_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace xmer
