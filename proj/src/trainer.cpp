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

#include "xmer/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>

namespace xmer {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

TensorPtr sequence_tensor(const Sequence& s) {
  return Tensor::matrix(s.frames(), s.width, s.values);
}

std::vector<TensorPtr> music_tensors(const std::vector<PairedSample>& set) {
  std::vector<TensorPtr> out;
  out.reserve(set.size());
  for (const auto& s : set) out.push_back(sequence_tensor(s.music));
  return out;
}

std::vector<TensorPtr> emotion_tensors(const std::vector<PairedSample>& set) {
  std::vector<TensorPtr> out;
  out.reserve(set.size());
  for (const auto& s : set) out.push_back(sequence_tensor(s.emotion));
  return out;
}

std::vector<double> matrix_row(const TensorPtr& m, std::size_t i) {
  const std::size_t d = m->cols();
  return std::vector<double>(m->values().begin() + i * d,
                             m->values().begin() + (i + 1) * d);
}

}  // namespace

Adam::Adam(std::vector<TensorPtr> params, double lr)
    : params_(std::move(params)), lr_(lr) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& vals = params_[i]->mutable_values();
    const auto& g = params_[i]->grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < vals.size(); ++j) {
      m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
      v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      vals[j] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
    }
  }
}

std::vector<TensorPtr> EncoderParams::leaves() const {
  return kind == EncoderKind::kMlp ? mlp.leaves() : gru.leaves();
}

TensorPtr EncoderParams::encode_batch(const std::vector<TensorPtr>& seqs,
                                      RandomState& rng, bool training) const {
  return kind == EncoderKind::kMlp
             ? mlp_encode_batch(seqs, mlp, rng, training)
             : bigru_encode_batch(seqs, gru, rng, training);
}

std::vector<TensorPtr> ModelParams::leaves() const {
  std::vector<TensorPtr> out = music.leaves();
  auto append = [&out](std::vector<TensorPtr> v) {
    out.insert(out.end(), v.begin(), v.end());
  };
  append(emotion.leaves());
  append(music_heads.leaves());
  append(emotion_heads.leaves());
  return out;
}

ModelParams init_model(const TrainConfig& cfg, RandomState& rng) {
  ModelParams p;
  p.music.kind = cfg.music_encoder;
  if (cfg.music_encoder == EncoderKind::kMlp) {
    MlpSpec spec;
    spec.input = kMusicWidth;
    spec.widths = cfg.music_widths;
    spec.dropout = cfg.dropout;
    p.music.mlp = init_mlp(spec, rng);
  } else {
    BiGruSpec spec;
    spec.input = kMusicWidth;
    spec.hidden = cfg.music_hidden;
    spec.post_widths = cfg.music_post_widths;
    spec.dropout = cfg.dropout;
    p.music.gru = init_bigru(spec, rng);
  }
  p.emotion.kind = cfg.emotion_encoder;
  if (cfg.emotion_encoder == EncoderKind::kMlp) {
    MlpSpec spec;
    spec.input = kEmotionWidth;
    spec.widths = cfg.emotion_post_widths;
    spec.dropout = cfg.dropout;
    p.emotion.mlp = init_mlp(spec, rng);
  } else {
    BiGruSpec spec;
    spec.input = kEmotionWidth;
    spec.hidden = cfg.emotion_hidden;
    spec.post_widths = cfg.emotion_post_widths;
    spec.dropout = cfg.dropout;
    p.emotion.gru = init_bigru(spec, rng);
  }
  const std::size_t music_f = cfg.music_encoder == EncoderKind::kMlp
                                  ? p.music.mlp.spec.output_width()
                                  : p.music.gru.spec.output_width();
  const std::size_t emotion_f = cfg.emotion_encoder == EncoderKind::kMlp
                                    ? p.emotion.mlp.spec.output_width()
                                    : p.emotion.gru.spec.output_width();
  p.music_heads = init_heads({music_f, cfg.embed_dim}, rng);
  p.emotion_heads = init_heads({emotion_f, cfg.embed_dim}, rng);
  return p;
}

namespace {

// Forward both encoders over the given sample indices and assemble the
// composite-loss batch.
CompositeBatch forward_batch(const ModelParams& params,
                             const std::vector<TensorPtr>& music,
                             const std::vector<TensorPtr>& emotion,
                             RandomState& rng, bool training) {
  auto fm = params.music.encode_batch(music, rng, training);
  auto fe = params.emotion.encode_batch(emotion, rng, training);
  auto hm = project_heads_batch(fm, params.music_heads);
  auto he = project_heads_batch(fe, params.emotion_heads);
  CompositeBatch batch;
  batch.hm = hm.e_raw;
  batch.he = he.e_raw;
  batch.music_mu = hm.mu;
  batch.music_var = hm.var;
  batch.emotion_mu = he.mu;
  batch.emotion_var = he.var;
  return batch;
}

std::vector<TensorPtr> gather(const std::vector<TensorPtr>& all,
                              const std::vector<std::size_t>& idx) {
  std::vector<TensorPtr> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg,
                  const std::vector<PairedSample>& train_set) {
  cfg.validate();
  if (train_set.empty()) throw InvalidArgument("train: empty training set");
  if (train_set.size() < 2) {
    throw InvalidArgument("train: covariance estimation needs N >= 2");
  }
  const LossConfig loss_cfg = cfg.loss_config();

  RandomState rng(cfg.seed);
  TrainResult result;
  result.params = init_model(cfg, rng);
  Adam opt(result.params.leaves(), cfg.lr);

  const auto music = music_tensors(train_set);
  const auto emotion = emotion_tensors(train_set);
  const std::size_t n = train_set.size();

  std::vector<std::size_t> all_idx(n);
  std::iota(all_idx.begin(), all_idx.end(), 0);

  result.loss_trace.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    if (cfg.batch_mode == BatchMode::kFull) {
      auto batch = forward_batch(result.params, music, emotion, rng, true);
      auto res = composite_loss(batch, loss_cfg);
      epoch_loss = res.loss->value();
      opt.zero_grad();
      res.loss->backward();
      opt.step();
    } else {
      // Seeded reshuffle each epoch; a trailing chunk smaller than 8 is
      // folded into the previous one.
      std::vector<std::size_t> idx = all_idx;
      for (std::size_t i = idx.size() - 1; i > 0; --i) {
        std::swap(idx[i], idx[rng.index(i + 1)]);
      }
      std::size_t chunks = 0;
      for (std::size_t start = 0; start < n; ) {
        std::size_t stop = std::min(n, start + cfg.batch_size);
        if (n - stop < 8 && stop < n) stop = n;
        std::vector<std::size_t> part(idx.begin() + start, idx.begin() + stop);
        auto batch = forward_batch(result.params, gather(music, part),
                                   gather(emotion, part), rng, true);
        auto res = composite_loss(batch, loss_cfg);
        epoch_loss += res.loss->value();
        opt.zero_grad();
        res.loss->backward();
        opt.step();
        ++chunks;
        start = stop;
      }
      epoch_loss /= static_cast<double>(chunks);
    }
    if (!std::isfinite(epoch_loss)) {
      throw NumericError("train: loss diverged at epoch " +
                         std::to_string(epoch + 1));
    }
    result.loss_trace.push_back(epoch_loss);
  }

  // Freeze the canonical projections against the final parameters with an
  // inference-mode forward pass.
  RandomState dummy(0);
  auto batch = forward_batch(result.params, music, emotion, dummy, false);
  auto [loss_node, sol] = cca_loss(batch.hm, batch.he, loss_cfg);
  (void)loss_node;
  result.solution = std::move(sol);
  return result;
}

namespace {

struct EncodedSide {
  std::vector<QueryOutput> outputs;
  std::vector<std::pair<std::string, std::vector<double>>> overalls;
};

DirectionMetrics run_direction(const std::vector<QueryOutput>& queries,
                               const std::vector<QueryOutput>& candidates,
                               const EncodedSide& query_side_overalls,
                               double lambda, double fraction,
                               KlDirection dir) {
  DirectionMetrics out;
  std::vector<double> cosines;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    RankedResult rr;
    try {
      rr = rank_candidates(queries[i], candidates, queries[i].id, lambda, dir);
    } catch (const UndefinedSimilarity& e) {
      ++out.skipped;
      std::cerr << "warning: skipping query '" << queries[i].id
                << "': " << e.what() << "\n";
      continue;
    }
    try {
      cosines.push_back(top_fraction_cosine(
          query_side_overalls.overalls[i].second,
          query_side_overalls.overalls, rr.candidate_ids, fraction));
    } catch (const UndefinedSimilarity&) {
      // rank still counts; only the cosine analysis skips this query
    }
    out.ranks.push_back(rr.rank);
    out.per_query.push_back(std::move(rr));
  }
  if (out.ranks.empty()) {
    throw DataError("evaluate: every query was skipped");
  }
  out.mrr = mrr(out.ranks);
  out.ar = ar(out.ranks);
  if (!cosines.empty()) {
    auto agg = aggregate(cosines);
    out.cosine_mean = agg.mean;
    out.cosine_std = agg.stddev;
  }
  return out;
}

}  // namespace

EvalReport evaluate(const ModelParams& params, const CcaSolution& solution,
                    const std::vector<PairedSample>& eval_set,
                    const TrainConfig& cfg) {
  if (eval_set.empty()) throw InvalidArgument("evaluate: empty eval set");
  const double lambda = cfg.effective_lambda();

  RandomState dummy(0);
  auto fm = params.music.encode_batch(music_tensors(eval_set), dummy, false);
  auto fe =
      params.emotion.encode_batch(emotion_tensors(eval_set), dummy, false);
  auto hm = project_heads_batch(fm, params.music_heads);
  auto he = project_heads_batch(fe, params.emotion_heads);

  EncodedSide music_side, emotion_side;
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    QueryOutput m;
    m.id = eval_set[i].id;
    m.e = solution.project_music(matrix_row(hm.e_raw, i));
    m.gaussian = {matrix_row(hm.mu, i), matrix_row(hm.var, i)};
    music_side.outputs.push_back(std::move(m));
    QueryOutput e;
    e.id = eval_set[i].id;
    e.e = solution.project_emotion(matrix_row(he.e_raw, i));
    e.gaussian = {matrix_row(he.mu, i), matrix_row(he.var, i)};
    emotion_side.outputs.push_back(std::move(e));
    // Overall vectors live in the query's own modality: music averages for
    // M2E, arousal/valence averages for E2M.
    music_side.overalls.emplace_back(eval_set[i].id,
                                     eval_set[i].music_overall());
    emotion_side.overalls.emplace_back(eval_set[i].id,
                                       eval_set[i].emotion_overall());
  }

  EvalReport report;
  report.m2e =
      run_direction(music_side.outputs, emotion_side.outputs, music_side,
                    lambda, cfg.fraction, cfg.kl_direction);
  report.e2m =
      run_direction(emotion_side.outputs, music_side.outputs, emotion_side,
                    lambda, cfg.fraction, cfg.kl_direction);
  return report;
}

Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  if (xs.empty()) return a;
  for (double x : xs) a.mean += x;
  a.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - a.mean) * (x - a.mean);
  a.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return a;
}

ExperimentReport repeat_experiment(const TrainConfig& cfg,
                                   const std::vector<PairedSample>& samples,
                                   std::size_t sessions) {
  if (sessions < 1) {
    throw InvalidArgument("repeat_experiment: sessions must be >= 1");
  }
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = cfg;
  std::vector<double> m2e_mrr, m2e_ar, e2m_mrr, e2m_ar, m2e_cos, e2m_cos;
  for (std::size_t i = 0; i < sessions; ++i) {
    TrainConfig session_cfg = cfg;
    session_cfg.seed = cfg.seed + i;
    auto [train_set, eval_set] =
        split(samples, {cfg.split_fraction, session_cfg.seed});
    TrainResult trained;
    try {
      trained = train(session_cfg, train_set);
    } catch (const Error& e) {
      throw NumericError("repeat_experiment: session " + std::to_string(i) +
                         " failed: " + e.what());
    }
    auto eval = evaluate(trained.params, trained.solution, eval_set,
                         session_cfg);
    SessionRow row;
    row.seed = session_cfg.seed;
    row.m2e_mrr = eval.m2e.mrr;
    row.m2e_ar = eval.m2e.ar;
    row.e2m_mrr = eval.e2m.mrr;
    row.e2m_ar = eval.e2m.ar;
    row.m2e_cos = eval.m2e.cosine_mean;
    row.e2m_cos = eval.e2m.cosine_mean;
    report.sessions.push_back(row);
    m2e_mrr.push_back(row.m2e_mrr);
    m2e_ar.push_back(row.m2e_ar);
    e2m_mrr.push_back(row.e2m_mrr);
    e2m_ar.push_back(row.e2m_ar);
    m2e_cos.push_back(row.m2e_cos);
    e2m_cos.push_back(row.e2m_cos);
  }
  report.m2e_mrr = aggregate(m2e_mrr);
  report.m2e_ar = aggregate(m2e_ar);
  report.e2m_mrr = aggregate(e2m_mrr);
  report.e2m_ar = aggregate(e2m_ar);
  report.m2e_cos = aggregate(m2e_cos);
  report.e2m_cos = aggregate(e2m_cos);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

std::vector<LambdaPoint> lambda_sweep(const TrainConfig& cfg,
                                      const std::vector<PairedSample>& samples,
                                      std::size_t sessions,
                                      const std::vector<double>& values) {
  std::vector<LambdaPoint> out;
  out.reserve(values.size());
  for (double v : values) {
    TrainConfig point_cfg = cfg;
    point_cfg.loss_mode = LossMode::kComposite;
    point_cfg.lambda = v;
    LambdaPoint p;
    p.lambda = v;
    p.report = repeat_experiment(point_cfg, samples, sessions);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace xmer
