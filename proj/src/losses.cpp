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

#include "xmer/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace xmer {

namespace {

void check_variances(const std::vector<double>& var, const char* who) {
  for (double v : var) {
    if (!(v > 0.0)) {
      throw InvalidArgument(std::string(who) + ": nonpositive variance");
    }
  }
}

// KL(1 -> 2) between diagonal Gaussians given raw arrays.
double kl_raw(const double* mu1, const double* v1, const double* mu2,
              const double* v2, std::size_t d) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double dm = mu2[i] - mu1[i];
    acc += v1[i] / v2[i] - 1.0 + std::log(v2[i]) - std::log(v1[i]) +
           dm * dm / v2[i];
  }
  return 0.5 * acc;
}

// Accumulates c * dKL(1 -> 2)/d(mu1, v1, mu2, v2) into the gradient arrays.
void kl_raw_backward(const double* mu1, const double* v1, const double* mu2,
                     const double* v2, std::size_t d, double c, double* gmu1,
                     double* gv1, double* gmu2, double* gv2) {
  for (std::size_t i = 0; i < d; ++i) {
    const double dm = mu2[i] - mu1[i];
    gmu1[i] += c * (-dm / v2[i]);
    gmu2[i] += c * (dm / v2[i]);
    gv1[i] += c * 0.5 * (1.0 / v2[i] - 1.0 / v1[i]);
    gv2[i] += c * 0.5 *
              (-v1[i] / (v2[i] * v2[i]) + 1.0 / v2[i] - dm * dm / (v2[i] * v2[i]));
  }
}

}  // namespace

void LossConfig::validate() const {
  if (lambda < 0.0 || lambda > 1.0) {
    throw InvalidArgument("loss config: lambda must lie in [0, 1]");
  }
  if (!(alpha > 0.0)) {
    throw InvalidArgument("loss config: alpha must be positive");
  }
  if (!(ridge > 0.0)) {
    throw InvalidArgument("loss config: ridge must be positive");
  }
}

std::vector<double> CcaSolution::project_music(
    const std::vector<double>& x) const {
  std::vector<double> out(k, 0.0);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < dim; ++i) out[j] += w_music[i * k + j] * x[i];
  return out;
}

std::vector<double> CcaSolution::project_emotion(
    const std::vector<double>& x) const {
  std::vector<double> out(k, 0.0);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < dim; ++i)
      out[j] += w_emotion[i * k + j] * x[i];
  return out;
}

double kl_diag(const GaussianEmbedding& g1, const GaussianEmbedding& g2) {
  if (g1.mu.size() != g1.var.size() || g2.mu.size() != g2.var.size() ||
      g1.mu.size() != g2.mu.size()) {
    throw DimensionError("kl_diag: embeddings must share one dimension");
  }
  check_variances(g1.var, "kl_diag");
  check_variances(g2.var, "kl_diag");
  return kl_raw(g1.mu.data(), g1.var.data(), g2.mu.data(), g2.var.data(),
                g1.mu.size());
}

TensorPtr kl_diag(const TensorPtr& mu1, const TensorPtr& var1,
                  const TensorPtr& mu2, const TensorPtr& var2) {
  if (mu1->size() != var1->size() || mu2->size() != var2->size() ||
      mu1->size() != mu2->size()) {
    throw DimensionError("kl_diag: embeddings must share one dimension");
  }
  check_variances(var1->values(), "kl_diag");
  check_variances(var2->values(), "kl_diag");
  const double d = static_cast<double>(mu1->size());
  auto trace_term = sum(divide(var1, var2));
  auto log_term = sub(sum(log(var2)), sum(log(var1)));
  auto quad = sum(divide(square(sub(mu2, mu1)), var2));
  auto total = add(add(trace_term, log_term), quad);
  return scale(add_scalar(total, -d), 0.5);
}

std::pair<TensorPtr, CcaSolution> cca_loss(const TensorPtr& hm,
                                           const TensorPtr& he,
                                           const LossConfig& cfg) {
  if (!hm->is_matrix() || !he->is_matrix() || hm->shape() != he->shape()) {
    throw DimensionError("cca_loss: batches must be [N x d] with equal shapes");
  }
  const std::size_t n = hm->rows(), d = hm->cols();
  if (n < 2) throw InvalidArgument("cca_loss: needs at least 2 samples");
  const std::size_t k = cfg.k == 0 ? d : cfg.k;
  if (k < 1 || k > d) throw InvalidArgument("cca_loss: k out of range");

  auto smm = centered_covariance(hm, cfg.ridge);
  auto see = centered_covariance(he, cfg.ridge);
  auto sme = cross_covariance(hm, he);
  auto wm_root = inv_sqrt_psd(smm, cfg.eig_floor);
  auto we_root = inv_sqrt_psd(see, cfg.eig_floor);
  auto t = matmul(matmul(wm_root, sme), we_root);
  auto loss = neg(singular_value_sum(t, k));

  // Recover the canonical directions from the same T = U S V^T, using the
  // forward values only: V from eig(T^T T), U = T V S^(-1), then
  // W_m = Smm^(-1/2) U_k and W_e = See^(-1/2) V_k.
  std::vector<double> gram(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < d; ++r) s += t->at(r, i) * t->at(r, j);
      gram[i * d + j] = s;
    }
  std::vector<double> evals, evecs;
  jacobi_eigh(gram, d, evals, evecs);

  CcaSolution sol;
  sol.dim = d;
  sol.k = k;
  sol.ridge = cfg.ridge;
  sol.batch_size = n;
  sol.correlations.resize(k);
  std::vector<double> uk(d * k, 0.0), vk(d * k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t src = d - 1 - c;  // descending
    const double sv = std::sqrt(std::max(evals[src], 0.0));
    sol.correlations[c] = sv;
    for (std::size_t i = 0; i < d; ++i) vk[i * k + c] = evecs[i * d + src];
    if (sv > 1e-12) {
      for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j)
          s += t->at(i, j) * evecs[j * d + src];
        uk[i * k + c] = s / sv;
      }
    }
  }
  sol.w_music.assign(d * k, 0.0);
  sol.w_emotion.assign(d * k, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t c = 0; c < k; ++c) {
      double sm = 0.0, se = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        sm += wm_root->at(i, j) * uk[j * k + c];
        se += we_root->at(i, j) * vk[j * k + c];
      }
      sol.w_music[i * k + c] = sm;
      sol.w_emotion[i * k + c] = se;
    }
  return {loss, std::move(sol)};
}

TensorPtr ranking_loss(const TensorPtr& music_mu, const TensorPtr& music_var,
                       const TensorPtr& emotion_mu,
                       const TensorPtr& emotion_var, double alpha,
                       MarginConvention margin) {
  if (!(alpha > 0.0)) {
    throw InvalidArgument("ranking_loss: alpha must be positive");
  }
  const auto& shape = music_mu->shape();
  if (!music_mu->is_matrix() || music_var->shape() != shape ||
      emotion_mu->shape() != shape || emotion_var->shape() != shape) {
    throw DimensionError("ranking_loss: all inputs must be [N x d]");
  }
  check_variances(music_var->values(), "ranking_loss");
  check_variances(emotion_var->values(), "ranking_loss");
  const std::size_t n = music_mu->rows(), d = music_mu->cols();
  if (n < 1) throw InvalidArgument("ranking_loss: empty batch");

  // Sign in front of alpha: paper form hinges on D(pos) - alpha - D(neg),
  // conventional form on D(pos) + alpha - D(neg).
  const double a = margin == MarginConvention::kPaper ? alpha : -alpha;

  const double* mmu = music_mu->values().data();
  const double* mv = music_var->values().data();
  const double* emu = emotion_mu->values().data();
  const double* ev = emotion_var->values().data();

  // All pairwise distances, both directions.
  std::vector<double> d_me(n * n), d_em(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d_me[i * n + j] =
          kl_raw(mmu + i * d, mv + i * d, emu + j * d, ev + j * d, d);
      d_em[i * n + j] =
          kl_raw(emu + i * d, ev + i * d, mmu + j * d, mv + j * d, d);
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos_me = d_me[i * n + i], pos_em = d_em[i * n + i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      total += std::max(0.0, pos_me - a - d_me[i * n + j]);
      total += std::max(0.0, pos_em - a - d_em[i * n + j]);
    }
  }

  Tensor* pmm = music_mu.get();
  Tensor* pmv = music_var.get();
  Tensor* pem = emotion_mu.get();
  Tensor* pev = emotion_var.get();
  return Tensor::make_op(
      {}, {total}, {music_mu, music_var, emotion_mu, emotion_var},
      [pmm, pmv, pem, pev, d_me = std::move(d_me), d_em = std::move(d_em), n,
       d, a](Tensor& self) {
        const double up = self.grad()[0];
        // Coefficients on each pairwise distance; diagonal entries collect
        // the positive-pair contributions of every active hinge.
        std::vector<double> c_me(n * n, 0.0), c_em(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (d_me[i * n + i] - a - d_me[i * n + j] > 0.0) {
              c_me[i * n + i] += up;
              c_me[i * n + j] -= up;
            }
            if (d_em[i * n + i] - a - d_em[i * n + j] > 0.0) {
              c_em[i * n + i] += up;
              c_em[i * n + j] -= up;
            }
          }
        }
        const double* mmu = pmm->values().data();
        const double* mv = pmv->values().data();
        const double* emu = pem->values().data();
        const double* ev = pev->values().data();
        double* gmm = pmm->requires_grad() ? pmm->grad().data() : nullptr;
        double* gmv = pmv->requires_grad() ? pmv->grad().data() : nullptr;
        double* gem = pem->requires_grad() ? pem->grad().data() : nullptr;
        double* gev = pev->requires_grad() ? pev->grad().data() : nullptr;
        std::vector<double> sink(d, 0.0);
        auto or_sink = [&](double* p, std::size_t row) {
          return p ? p + row * d : sink.data();
        };
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            const double cme = c_me[i * n + j];
            if (cme != 0.0) {
              kl_raw_backward(mmu + i * d, mv + i * d, emu + j * d, ev + j * d,
                              d, cme, or_sink(gmm, i), or_sink(gmv, i),
                              or_sink(gem, j), or_sink(gev, j));
            }
            const double cem = c_em[i * n + j];
            if (cem != 0.0) {
              kl_raw_backward(emu + i * d, ev + i * d, mmu + j * d, mv + j * d,
                              d, cem, or_sink(gem, i), or_sink(gev, i),
                              or_sink(gmm, j), or_sink(gmv, j));
            }
          }
        }
      });
}

double ranking_loss(
    const std::vector<std::pair<GaussianEmbedding, GaussianEmbedding>>& pairs,
    double alpha, MarginConvention margin) {
  const std::size_t n = pairs.size();
  if (n < 1) throw InvalidArgument("ranking_loss: empty batch");
  const std::size_t d = pairs[0].first.mu.size();
  std::vector<double> mmu(n * d), mv(n * d), emu(n * d), ev(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [gm, ge] = pairs[i];
    if (gm.mu.size() != d || ge.mu.size() != d) {
      throw DimensionError("ranking_loss: embeddings must share one dimension");
    }
    std::copy(gm.mu.begin(), gm.mu.end(), mmu.begin() + i * d);
    std::copy(gm.var.begin(), gm.var.end(), mv.begin() + i * d);
    std::copy(ge.mu.begin(), ge.mu.end(), emu.begin() + i * d);
    std::copy(ge.var.begin(), ge.var.end(), ev.begin() + i * d);
  }
  auto node = ranking_loss(Tensor::matrix(n, d, std::move(mmu)),
                           Tensor::matrix(n, d, std::move(mv)),
                           Tensor::matrix(n, d, std::move(emu)),
                           Tensor::matrix(n, d, std::move(ev)), alpha, margin);
  return node->value();
}

CompositeResult composite_loss(const CompositeBatch& batch,
                               const LossConfig& cfg) {
  cfg.validate();
  const std::size_t n = batch.hm->rows();
  if (batch.he->rows() != n || batch.music_mu->rows() != n ||
      batch.emotion_mu->rows() != n) {
    throw DataError("composite_loss: batches must index the same N samples");
  }
  CompositeResult res;
  if (cfg.lambda == 1.0) {
    auto [loss, sol] = cca_loss(batch.hm, batch.he, cfg);
    res.loss = loss;
    res.cca_value = loss->value();
    res.solution = std::move(sol);
    return res;
  }
  if (cfg.lambda == 0.0) {
    res.loss = ranking_loss(batch.music_mu, batch.music_var, batch.emotion_mu,
                            batch.emotion_var, cfg.alpha, cfg.margin);
    res.kl_value = res.loss->value();
    return res;
  }
  auto [cca, sol] = cca_loss(batch.hm, batch.he, cfg);
  auto kl = ranking_loss(batch.music_mu, batch.music_var, batch.emotion_mu,
                         batch.emotion_var, cfg.alpha, cfg.margin);
  res.cca_value = cca->value();
  res.kl_value = kl->value();
  res.solution = std::move(sol);
  res.loss = add(scale(cca, cfg.lambda), scale(kl, 1.0 - cfg.lambda));
  return res;
}

}  // namespace xmer
