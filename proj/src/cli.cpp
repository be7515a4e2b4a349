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

#include "xmer/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "xmer/baselines.hpp"
#include "xmer/checkpoint.hpp"
#include "xmer/report.hpp"

namespace xmer {

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string dataset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<double> alpha;
  std::optional<std::string> loss_mode;
  std::optional<std::string> encoder_music;
  std::optional<std::string> encoder_emotion;
  std::optional<double> fraction;
  std::optional<std::size_t> sessions;
  bool verbose = false;
};

TrainConfig resolve_config(const CommonArgs& args) {
  if (args.config_path.empty()) {
    throw DataError("a --config file is required");
  }
  if (!fs::exists(args.config_path)) {
    // A missing config is a usage problem, not a data problem.
    throw CLI::ValidationError("--config",
                               "config file not found: " + args.config_path);
  }
  TrainConfig cfg = load_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.lambda) cfg.lambda = *args.lambda;
  if (args.alpha) cfg.alpha = *args.alpha;
  if (args.fraction) cfg.fraction = *args.fraction;
  if (args.sessions) cfg.sessions = *args.sessions;
  if (args.loss_mode) {
    if (*args.loss_mode == "composite") cfg.loss_mode = LossMode::kComposite;
    else if (*args.loss_mode == "cca-only") cfg.loss_mode = LossMode::kCcaOnly;
    else if (*args.loss_mode == "kl-only") cfg.loss_mode = LossMode::kKlOnly;
    else throw InvalidArgument("unknown --loss-mode " + *args.loss_mode);
  }
  auto parse_kind = [](const std::string& v, const char* flag) {
    if (v == "mlp") return EncoderKind::kMlp;
    if (v == "bigru") return EncoderKind::kBiGru;
    throw InvalidArgument(std::string("unknown ") + flag + " " + v);
  };
  if (args.encoder_music) {
    cfg.music_encoder = parse_kind(*args.encoder_music, "--encoder-music");
  }
  if (args.encoder_emotion) {
    cfg.emotion_encoder = parse_kind(*args.encoder_emotion, "--encoder-emotion");
  }
  cfg.validate();
  return cfg;
}

std::vector<PairedSample> resolve_dataset(const std::string& path) {
  if (path.empty()) throw DataError("a --dataset is required");
  fs::path p(path);
  if (fs::is_directory(p)) p /= "manifest.txt";
  if (!fs::exists(p)) throw DataError("dataset manifest not found: " + p.string());
  return load_prepared(p);
}

void log_verbose(const CommonArgs& args, const std::string& msg) {
  if (args.verbose) std::cerr << "xmer: " << msg << "\n";
}

int run_synth(const CommonArgs& args, const SynthConfig& synth) {
  auto samples = synth_generate(synth);
  write_dataset(args.out, samples, IntensityRange::kSigned);
  log_verbose(args, "wrote " + std::to_string(samples.size()) +
                        " synthetic samples to " + args.out);
  return 0;
}

int run_prepare(const CommonArgs& args, const std::string& style,
                double min_seconds) {
  fs::path manifest_path(args.dataset);
  if (fs::is_directory(manifest_path)) manifest_path /= "manifest.txt";
  auto manifest = load_manifest(manifest_path);
  auto raw = load_dataset(manifest);
  std::vector<PairedSample> samples;
  samples.reserve(raw.size());
  for (auto& r : raw) {
    PairedSample s;
    s.id = std::move(r.id);
    s.music = std::move(r.music);
    s.emotion = average_annotations(r.subjects);
    samples.push_back(std::move(s));
  }
  const bool deam_style =
      style == "deam" ||
      (style == "auto" && manifest.range == IntensityRange::kSigned);
  if (deam_style) {
    for (auto& s : samples) s = window_deam(s);
  } else {
    samples = filter_min_length(std::move(samples), min_seconds);
  }
  if (samples.empty()) {
    throw DataError("prepare: no samples survived preprocessing");
  }
  write_dataset(args.out, samples, manifest.range);
  log_verbose(args, "prepared " + std::to_string(samples.size()) + " samples");
  return 0;
}

int run_train(const CommonArgs& args) {
  TrainConfig cfg = resolve_config(args);
  auto samples = resolve_dataset(args.dataset);
  const fs::path out(args.out);
  fs::create_directories(out);
  write_run_manifest(out, cfg, "train");
  if (cfg.sessions > 1) {
    auto report = repeat_experiment(cfg, samples, cfg.sessions);
    write_sessions_csv(out, report);
    write_summary(out, report);
    return 0;
  }
  auto [train_set, eval_set] = split(samples, {cfg.split_fraction, cfg.seed});
  auto trained = train(cfg, train_set);
  save_checkpoint(out / "checkpoint.bin", {cfg, trained.params,
                                           trained.solution});
  write_loss_trace_csv(out, trained.loss_trace);
  auto eval = evaluate(trained.params, trained.solution, eval_set, cfg);
  write_per_query_csv(out, eval);
  write_summary(out, single_session_report(eval, cfg));
  return 0;
}

int run_evaluate(const CommonArgs& args, const std::string& checkpoint_path) {
  if (!fs::exists(checkpoint_path)) {
    throw CLI::ValidationError("--checkpoint",
                               "checkpoint not found: " + checkpoint_path);
  }
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  TrainConfig cfg = ckpt.config;
  if (args.lambda) cfg.lambda = *args.lambda;
  if (args.fraction) cfg.fraction = *args.fraction;
  auto samples = resolve_dataset(args.dataset);
  // Reconstruct the same eval split the training run used.
  auto [train_set, eval_set] = split(samples, {cfg.split_fraction, cfg.seed});
  if (eval_set.empty()) throw DataError("evaluate: empty eval split");
  auto eval = evaluate(ckpt.params, ckpt.solution, eval_set, cfg);
  const fs::path out(args.out);
  fs::create_directories(out);
  write_run_manifest(out, cfg, "evaluate");
  write_per_query_csv(out, eval);
  write_summary(out, single_session_report(eval, cfg));
  return 0;
}

int run_sweep(const CommonArgs& args) {
  TrainConfig cfg = resolve_config(args);
  auto samples = resolve_dataset(args.dataset);
  auto points = lambda_sweep(cfg, samples, cfg.sessions);
  const fs::path out(args.out);
  fs::create_directories(out);
  write_run_manifest(out, cfg, "sweep");
  write_sweep_csv(out, points);
  for (const auto& p : points) {
    char sub[32];
    std::snprintf(sub, sizeof(sub), "lambda-%.1f", p.lambda);
    write_sessions_csv(out / sub, p.report);
    write_summary(out / sub, p.report);
  }
  return 0;
}

int run_baseline(const CommonArgs& args, BaselineSpec spec) {
  TrainConfig cfg = resolve_config(args);
  auto samples = resolve_dataset(args.dataset);
  spec.dropout = cfg.dropout;
  const fs::path out(args.out);
  fs::create_directories(out);
  write_run_manifest(out, cfg, "baseline");
  // Same repeated protocol as the cross-modal model: resplit and retrain
  // per session seed, then aggregate.
  std::vector<double> mrrs, ars;
  std::ostringstream rows;
  rows << "session,seed,name,mrr,ar\n";
  for (std::size_t i = 0; i < cfg.sessions; ++i) {
    const std::uint64_t seed = cfg.seed + i;
    auto [train_set, eval_set] = split(samples, {cfg.split_fraction, seed});
    auto trained = baseline_train(spec, train_set, seed);
    auto metrics = baseline_evaluate(trained.params, eval_set);
    mrrs.push_back(metrics.mrr);
    ars.push_back(metrics.ar);
    rows << i << ',' << seed << ',' << spec.name() << ',' << metrics.mrr
         << ',' << metrics.ar << '\n';
  }
  write_text_atomic(out / "sessions.csv", rows.str());
  auto mrr_agg = aggregate(mrrs);
  auto ar_agg = aggregate(ars);
  nlohmann::json j;
  j["schema"] = "xmer-baseline-summary v1";
  j["name"] = spec.name();
  j["sessions"] = cfg.sessions;
  j["mrr"] = {{"mean", mrr_agg.mean}, {"std", mrr_agg.stddev}};
  j["ar"] = {{"mean", ar_agg.mean}, {"std", ar_agg.stddev}};
  j["config_hash"] = config_hash(cfg);
  write_text_atomic(out / "summary.json", j.dump(2) + "\n");
  return 0;
}

int run_report(const CommonArgs& args) {
  const fs::path out(args.out);
  const fs::path sessions_file = out / "sessions.csv";
  const fs::path manifest_file = out / "manifest.json";
  if (!fs::exists(sessions_file) || !fs::exists(manifest_file)) {
    throw DataError("report: " + args.out +
                    " does not contain sessions.csv and manifest.json");
  }
  std::ifstream mf(manifest_file);
  nlohmann::json manifest = nlohmann::json::parse(mf, nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("config")) {
    throw DataError("report: malformed manifest.json");
  }
  TrainConfig cfg = parse_config(manifest["config"].get<std::string>());

  std::ifstream in(sessions_file);
  std::string line;
  std::getline(in, line);  // header
  ExperimentReport report;
  report.config = cfg;
  std::vector<double> m2e_mrr, m2e_ar, e2m_mrr, e2m_ar, m2e_cos, e2m_cos;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SessionRow row;
    std::istringstream ss(line);
    std::string cell;
    auto next = [&]() {
      if (!std::getline(ss, cell, ',')) {
        throw DataError("report: malformed sessions.csv row: " + line);
      }
      return cell;
    };
    next();  // session index
    row.seed = std::stoull(next());
    row.m2e_mrr = std::stod(next());
    row.m2e_ar = std::stod(next());
    row.e2m_mrr = std::stod(next());
    row.e2m_ar = std::stod(next());
    row.m2e_cos = std::stod(next());
    row.e2m_cos = std::stod(next());
    report.sessions.push_back(row);
    m2e_mrr.push_back(row.m2e_mrr);
    m2e_ar.push_back(row.m2e_ar);
    e2m_mrr.push_back(row.e2m_mrr);
    e2m_ar.push_back(row.e2m_ar);
    m2e_cos.push_back(row.m2e_cos);
    e2m_cos.push_back(row.e2m_cos);
  }
  if (report.sessions.empty()) throw DataError("report: no session rows");
  report.m2e_mrr = aggregate(m2e_mrr);
  report.m2e_ar = aggregate(m2e_ar);
  report.e2m_mrr = aggregate(e2m_mrr);
  report.e2m_ar = aggregate(e2m_ar);
  report.m2e_cos = aggregate(m2e_cos);
  report.e2m_cos = aggregate(e2m_cos);
  write_summary(out, report);
  return 0;
}

}  // namespace

int cli_run(int argc, const char* const* argv) {
  CLI::App app{"Cross-modal music/emotion embedding trainer and evaluator"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "print help for every subcommand");

  CommonArgs args;
  SynthConfig synth;
  BaselineSpec baseline;
  std::string checkpoint_path;
  std::string style = "auto";
  double min_seconds = 7.0;
  std::string baseline_direction = "m2e";
  std::string baseline_encoder = "mlp";
  std::string baseline_widths = "32,2";

  auto add_common = [&](CLI::App* cmd, bool needs_config, bool needs_dataset) {
    if (needs_config) {
      cmd->add_option("--config", args.config_path, "training config file");
    }
    if (needs_dataset) {
      cmd->add_option("--dataset", args.dataset,
                      "dataset directory or manifest file");
    }
    cmd->add_option("--out", args.out, "output directory")->required();
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_flag("-v,--verbose", args.verbose, "log progress to stderr");
  };

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--n", synth.n, "number of samples");
  synth_cmd->add_option("--latent-dim", synth.latent_dim, "latent dimension");
  synth_cmd->add_option("--noise-scale", synth.noise_scale, "noise scale");
  synth_cmd->add_option("--seq-len-lo", synth.len_lo, "min frames");
  synth_cmd->add_option("--seq-len-hi", synth.len_hi, "max frames");
  add_common(synth_cmd, false, false);

  auto* prepare_cmd =
      app.add_subcommand("prepare", "preprocess a raw dataset manifest");
  prepare_cmd
      ->add_option("--style", style,
                   "deam (15-45 s window), pmemo (length filter) or auto")
      ->check(CLI::IsMember({"deam", "pmemo", "auto"}));
  prepare_cmd->add_option("--min-seconds", min_seconds,
                          "minimum annotated duration for pmemo-style data");
  add_common(prepare_cmd, false, true);

  auto* train_cmd = app.add_subcommand("train", "train a cross-modal model");
  add_common(train_cmd, true, true);
  train_cmd->add_option("--sessions", args.sessions,
                        "repeat training this many times and aggregate");
  train_cmd->add_option("--lambda", args.lambda, "composite weight override");
  train_cmd->add_option("--alpha", args.alpha, "ranking margin override");
  train_cmd
      ->add_option("--loss-mode", args.loss_mode,
                   "composite, cca-only or kl-only")
      ->check(CLI::IsMember({"composite", "cca-only", "kl-only"}));
  train_cmd->add_option("--encoder-music", args.encoder_music, "mlp or bigru")
      ->check(CLI::IsMember({"mlp", "bigru"}));
  train_cmd
      ->add_option("--encoder-emotion", args.encoder_emotion, "mlp or bigru")
      ->check(CLI::IsMember({"mlp", "bigru"}));

  auto* eval_cmd =
      app.add_subcommand("evaluate", "evaluate a trained checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval_cmd->add_option("--lambda", args.lambda, "similarity weight override");
  eval_cmd->add_option("--fraction", args.fraction,
                       "top fraction for the cosine analysis");
  add_common(eval_cmd, false, true);

  auto* sweep_cmd =
      app.add_subcommand("sweep", "lambda sweep from 0.0 to 1.0 step 0.1");
  add_common(sweep_cmd, true, true);
  sweep_cmd->add_option("--sessions", args.sessions, "sessions per point");

  auto* baseline_cmd =
      app.add_subcommand("baseline", "train and evaluate a regression baseline");
  add_common(baseline_cmd, true, true);
  baseline_cmd->add_option("--sessions", args.sessions, "session count");
  baseline_cmd
      ->add_option("--direction", baseline_direction, "m2e or e2m")
      ->check(CLI::IsMember({"m2e", "e2m"}));
  baseline_cmd->add_option("--encoder", baseline_encoder, "mlp or bigru")
      ->check(CLI::IsMember({"mlp", "bigru"}));
  baseline_cmd->add_option("--widths", baseline_widths,
                           "comma-separated FC widths including the output");
  baseline_cmd->add_option("--hidden", baseline.hidden, "BiGRU hidden width");
  baseline_cmd->add_option("--epochs", baseline.epochs, "training epochs");
  baseline_cmd->add_option("--lr", baseline.lr, "learning rate");

  auto* report_cmd = app.add_subcommand(
      "report", "recompute summary.json from a run directory");
  add_common(report_cmd, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) {
      if (args.seed) synth.seed = *args.seed;
      return run_synth(args, synth);
    }
    if (prepare_cmd->parsed()) return run_prepare(args, style, min_seconds);
    if (train_cmd->parsed()) return run_train(args);
    if (eval_cmd->parsed()) return run_evaluate(args, checkpoint_path);
    if (sweep_cmd->parsed()) return run_sweep(args);
    if (baseline_cmd->parsed()) {
      baseline.direction =
          baseline_direction == "m2e" ? Direction::kM2E : Direction::kE2M;
      baseline.kind =
          baseline_encoder == "mlp" ? EncoderKind::kMlp : EncoderKind::kBiGru;
      baseline.fc_widths.clear();
      std::istringstream ws(baseline_widths);
      std::string cell;
      while (std::getline(ws, cell, ',')) {
        baseline.fc_widths.push_back(std::stoul(cell));
      }
      return run_baseline(args, baseline);
    }
    if (report_cmd->parsed()) return run_report(args);
    std::cerr << "error: no subcommand given\n";
    return 1;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace xmer
