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

#include "xmer/baselines.hpp"

#include <cmath>
#include <string>

#include "xmer/retrieval.hpp"

namespace xmer {

namespace {

TensorPtr uniform_weights(std::size_t out, std::size_t in, RandomState& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<double> v(out * in);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor::matrix(out, in, std::move(v), true);
}

AffineLayer init_affine(std::size_t out, std::size_t in, RandomState& rng) {
  return {uniform_weights(out, in, rng), Tensor::zeros({out}, true)};
}

GruCellParams init_cell(std::size_t hidden, std::size_t input,
                        RandomState& rng) {
  GruCellParams c;
  c.wu = uniform_weights(hidden, input, rng);
  c.uu = uniform_weights(hidden, hidden, rng);
  c.bu = Tensor::zeros({hidden}, true);
  c.wr = uniform_weights(hidden, input, rng);
  c.ur = uniform_weights(hidden, hidden, rng);
  c.br = Tensor::zeros({hidden}, true);
  c.wc = uniform_weights(hidden, input, rng);
  c.uc = uniform_weights(hidden, hidden, rng);
  c.bc = Tensor::zeros({hidden}, true);
  return c;
}

std::size_t input_width(Direction d) {
  return d == Direction::kM2E ? kMusicWidth : kEmotionWidth;
}

std::size_t output_width(Direction d) {
  return d == Direction::kM2E ? kEmotionWidth : kMusicWidth;
}

const Sequence& input_sequence(const PairedSample& s, Direction d) {
  return d == Direction::kM2E ? s.music : s.emotion;
}

// Hidden layers softplus + dropout, final layer linear.
TensorPtr regression_stack(TensorPtr x, const std::vector<AffineLayer>& layers,
                           double rate, RandomState& rng, bool training) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = linear_rows(x, layers[i].w, layers[i].b);
    if (i + 1 < layers.size()) {
      x = dropout(softplus(x), rate, rng, training);
    }
  }
  return x;
}

TensorPtr baseline_forward(const BaselineParams& p,
                           const std::vector<PairedSample>& samples,
                           RandomState& rng, bool training) {
  const Direction dir = p.spec.direction;
  if (p.spec.kind == EncoderKind::kMlp) {
    std::vector<TensorPtr> pooled;
    pooled.reserve(samples.size());
    for (const auto& s : samples) {
      pooled.push_back(
          mean_over_time(Tensor::matrix(input_sequence(s, dir).frames(),
                                        input_sequence(s, dir).width,
                                        input_sequence(s, dir).values)));
    }
    return regression_stack(stack_rows(pooled), p.layers, p.spec.dropout, rng,
                            training);
  }
  std::vector<TensorPtr> seqs;
  seqs.reserve(samples.size());
  for (const auto& s : samples) {
    const auto& seq = input_sequence(s, dir);
    seqs.push_back(Tensor::matrix(seq.frames(), seq.width, seq.values));
  }
  auto h = bigru_states_batch(seqs, p.forward, p.backward, p.spec.hidden);
  return regression_stack(h, p.layers, p.spec.dropout, rng, training);
}

}  // namespace

void BaselineSpec::validate() const {
  if (fc_widths.empty()) {
    throw InvalidArgument("baseline: fc_widths must include the output layer");
  }
  if (fc_widths.back() != output_width(direction)) {
    throw InvalidArgument("baseline: output width must be " +
                          std::to_string(output_width(direction)) + " for " +
                          name());
  }
  if (epochs < 1) throw InvalidArgument("baseline: epochs must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("baseline: lr must be positive");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw InvalidArgument("baseline: dropout must lie in [0, 1)");
  }
}

std::string BaselineSpec::name() const {
  std::string base = kind == EncoderKind::kMlp ? "RegMLP" : "RegBiGRU";
  return base + (direction == Direction::kM2E ? "-M2E" : "-E2M");
}

std::vector<TensorPtr> BaselineParams::leaves() const {
  std::vector<TensorPtr> out;
  if (spec.kind == EncoderKind::kBiGru) {
    out.insert(out.end(), {forward.wu, forward.uu, forward.bu, forward.wr,
                           forward.ur, forward.br, forward.wc, forward.uc,
                           forward.bc, backward.wu, backward.uu, backward.bu,
                           backward.wr, backward.ur, backward.br, backward.wc,
                           backward.uc, backward.bc});
  }
  for (const auto& l : layers) {
    out.push_back(l.w);
    out.push_back(l.b);
  }
  return out;
}

std::vector<double> baseline_target(const PairedSample& s, Direction dir) {
  return dir == Direction::kM2E ? s.emotion_overall() : s.music_overall();
}

BaselineTrainResult baseline_train(const BaselineSpec& spec,
                                   const std::vector<PairedSample>& train_set,
                                   std::uint64_t seed) {
  spec.validate();
  if (train_set.empty()) {
    throw InvalidArgument("baseline_train: empty training set");
  }
  RandomState rng(seed);
  BaselineTrainResult result;
  result.params.spec = spec;
  std::size_t in = input_width(spec.direction);
  if (spec.kind == EncoderKind::kBiGru) {
    result.params.forward = init_cell(spec.hidden, in, rng);
    result.params.backward = init_cell(spec.hidden, in, rng);
    in = 2 * spec.hidden;
  }
  for (std::size_t w : spec.fc_widths) {
    result.params.layers.push_back(init_affine(w, in, rng));
    in = w;
  }

  const std::size_t n = train_set.size();
  const std::size_t out_w = output_width(spec.direction);
  std::vector<double> target_values;
  target_values.reserve(n * out_w);
  for (const auto& s : train_set) {
    auto t = baseline_target(s, spec.direction);
    target_values.insert(target_values.end(), t.begin(), t.end());
  }
  auto targets = Tensor::matrix(n, out_w, std::move(target_values));

  Adam opt(result.params.leaves(), spec.lr);
  result.mae_trace.reserve(spec.epochs);
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    auto pred = baseline_forward(result.params, train_set, rng, true);
    auto loss = mean_abs_error(pred, targets);
    const double mae = loss->value();
    if (!std::isfinite(mae)) {
      throw NumericError("baseline_train: loss diverged at epoch " +
                         std::to_string(epoch + 1));
    }
    opt.zero_grad();
    loss->backward();
    opt.step();
    result.mae_trace.push_back(mae);
  }
  return result;
}

std::vector<std::vector<double>> baseline_predict(
    const BaselineParams& params, const std::vector<PairedSample>& samples) {
  RandomState dummy(0);
  auto pred = baseline_forward(params, samples, dummy, false);
  std::vector<std::vector<double>> out;
  out.reserve(samples.size());
  const std::size_t w = pred->cols();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.emplace_back(pred->values().begin() + i * w,
                     pred->values().begin() + (i + 1) * w);
  }
  return out;
}

BaselineMetrics baseline_rank(
    const std::vector<std::vector<double>>& predictions,
    const std::vector<std::vector<double>>& ground_truths) {
  if (predictions.size() != ground_truths.size()) {
    throw DataError("baseline_rank: prediction/ground-truth count mismatch");
  }
  if (predictions.empty()) {
    throw InvalidArgument("baseline_rank: empty inputs");
  }
  BaselineMetrics out;
  const std::size_t n = predictions.size();
  for (std::size_t q = 0; q < n; ++q) {
    if (predictions[q].size() != ground_truths[q].size()) {
      throw DataError("baseline_rank: vector width mismatch at index " +
                      std::to_string(q));
    }
    std::vector<double> sims(n);
    for (std::size_t i = 0; i < n; ++i) {
      double ae = 0.0;
      for (std::size_t j = 0; j < predictions[q].size(); ++j) {
        ae += std::abs(predictions[q][j] - ground_truths[i][j]);
      }
      sims[i] = -ae / static_cast<double>(predictions[q].size());
    }
    out.ranks.push_back(rank_from_similarities(sims, q));
  }
  out.mrr = mrr(out.ranks);
  out.ar = ar(out.ranks);
  return out;
}

BaselineMetrics baseline_evaluate(const BaselineParams& params,
                                  const std::vector<PairedSample>& eval_set) {
  auto preds = baseline_predict(params, eval_set);
  std::vector<std::vector<double>> gts;
  gts.reserve(eval_set.size());
  for (const auto& s : eval_set) {
    gts.push_back(baseline_target(s, params.spec.direction));
  }
  return baseline_rank(preds, gts);
}

}  // namespace xmer
