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

#include <string>
#include <vector>

#include "xmer/losses.hpp"

namespace xmer {

/// Direction of the KL term inside the retrieval similarity.
enum class KlDirection { kQueryToCandidate, kCandidateToQuery };

/// One encoded test sample on one side of the retrieval task.
struct QueryOutput {
  std::string id;
  std::vector<double> e;  // CCA-projected embedding W^T e_raw, length k
  GaussianEmbedding gaussian;
};

/// Ordered retrieval result for one query. r_q is the 1-based rank of the
/// ground-truth candidate; the candidate list is a permutation of the test
/// set ids sorted by descending similarity.
struct RankedResult {
  std::string query_id;
  std::vector<std::string> candidate_ids;
  std::vector<double> similarities;  // aligned with candidate_ids
  std::size_t rank = 0;
};

/// Pearson product-moment correlation; requires length >= 2 and throws
/// UndefinedSimilarity for constant inputs.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// lambda * pearson(q.e, c.e) + (1 - lambda) * (-KL); the KL direction is
/// query->candidate unless configured otherwise.
double similarity(const QueryOutput& q, const QueryOutput& c, double lambda,
                  KlDirection dir = KlDirection::kQueryToCandidate);

/// Rank from a raw similarity table: 1 + |{i : sim[i] > sim[gt]}|, so ties
/// resolve in the query's favor.
std::size_t rank_from_similarities(const std::vector<double>& sims,
                                   std::size_t gt_index);

/// Full ranking of `candidates` for one query. The ground-truth id must be
/// present among the candidates.
RankedResult rank_candidates(const QueryOutput& q,
                             const std::vector<QueryOutput>& candidates,
                             const std::string& gt_id, double lambda,
                             KlDirection dir = KlDirection::kQueryToCandidate);

double mrr(const std::vector<std::size_t>& ranks);
double ar(const std::vector<std::size_t>& ranks);

/// Cosine similarity; throws UndefinedSimilarity on zero-norm input.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Mean cosine similarity between the query's overall vector and the
/// overall vectors of the top ceil(fraction * n) ranked candidates.
double top_fraction_cosine(
    const std::vector<double>& query_overall,
    const std::vector<std::pair<std::string, std::vector<double>>>& candidates,
    const std::vector<std::string>& ranked_ids, double fraction = 0.05);

}  // namespace xmer
