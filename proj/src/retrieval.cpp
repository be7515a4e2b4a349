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

#include "xmer/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xmer {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("pearson: vectors must have equal length");
  }
  const std::size_t n = a.size();
  if (n < 2) throw InvalidArgument("pearson: needs at least 2 components");
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw UndefinedSimilarity("pearson: correlation undefined for a constant "
                              "vector");
  }
  return sab / std::sqrt(saa * sbb);
}

double similarity(const QueryOutput& q, const QueryOutput& c, double lambda,
                  KlDirection dir) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw InvalidArgument("similarity: lambda must lie in [0, 1]");
  }
  double corr = 0.0;
  if (lambda > 0.0) corr = pearson(q.e, c.e);
  double kl = 0.0;
  if (lambda < 1.0) {
    kl = dir == KlDirection::kQueryToCandidate ? kl_diag(q.gaussian, c.gaussian)
                                               : kl_diag(c.gaussian, q.gaussian);
  }
  return lambda * corr + (1.0 - lambda) * (-kl);
}

std::size_t rank_from_similarities(const std::vector<double>& sims,
                                   std::size_t gt_index) {
  if (gt_index >= sims.size()) {
    throw InvalidArgument("rank_from_similarities: ground truth out of range");
  }
  std::size_t rank = 1;
  for (double s : sims) {
    if (s > sims[gt_index]) ++rank;
  }
  return rank;
}

RankedResult rank_candidates(const QueryOutput& q,
                             const std::vector<QueryOutput>& candidates,
                             const std::string& gt_id, double lambda,
                             KlDirection dir) {
  std::size_t gt_index = candidates.size();
  std::vector<double> sims(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    sims[i] = similarity(q, candidates[i], lambda, dir);
    if (candidates[i].id == gt_id) gt_index = i;
  }
  if (gt_index == candidates.size()) {
    throw DataError("rank_candidates: ground truth '" + gt_id +
                    "' is not among the candidates");
  }
  RankedResult out;
  out.query_id = q.id;
  out.rank = rank_from_similarities(sims, gt_index);
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sims[i] > sims[j]; });
  out.candidate_ids.reserve(order.size());
  out.similarities.reserve(order.size());
  for (std::size_t i : order) {
    out.candidate_ids.push_back(candidates[i].id);
    out.similarities.push_back(sims[i]);
  }
  return out;
}

double mrr(const std::vector<std::size_t>& ranks) {
  if (ranks.empty()) throw InvalidArgument("mrr: empty rank list");
  double s = 0.0;
  for (std::size_t r : ranks) s += 1.0 / static_cast<double>(r);
  return s / static_cast<double>(ranks.size());
}

double ar(const std::vector<std::size_t>& ranks) {
  if (ranks.empty()) throw InvalidArgument("ar: empty rank list");
  double s = 0.0;
  for (std::size_t r : ranks) s += static_cast<double>(r);
  return s / static_cast<double>(ranks.size());
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine: vectors must have equal length");
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) {
    throw UndefinedSimilarity("cosine: undefined for a zero-norm vector");
  }
  return ab / std::sqrt(aa * bb);
}

double top_fraction_cosine(
    const std::vector<double>& query_overall,
    const std::vector<std::pair<std::string, std::vector<double>>>& candidates,
    const std::vector<std::string>& ranked_ids, double fraction) {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw InvalidArgument("top_fraction_cosine: fraction must lie in (0, 1]");
  }
  if (ranked_ids.empty()) {
    throw InvalidArgument("top_fraction_cosine: empty ranking");
  }
  const std::size_t take = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(ranked_ids.size())));
  double acc = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    auto it = std::find_if(candidates.begin(), candidates.end(),
                           [&](const auto& c) { return c.first == ranked_ids[i]; });
    if (it == candidates.end()) {
      throw DataError("top_fraction_cosine: ranked id '" + ranked_ids[i] +
                      "' has no overall vector");
    }
    acc += cosine(query_overall, it->second);
  }
  return acc / static_cast<double>(take);
}

}  // namespace xmer
