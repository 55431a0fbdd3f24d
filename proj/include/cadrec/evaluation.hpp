/*
 * Copyright 2026 The CaDRec Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "cadrec/encoders.hpp"
#include "cadrec/hypergraph.hpp"
#include "cadrec/interactions.hpp"
#include "cadrec/types.hpp"

namespace cadrec {

// The k highest scores among items not in `exclude`, ties by ascending id.
// Throws ContractViolation when fewer than k candidates remain.
std::vector<ItemId> rank_items(std::span<const double> scores, std::span<const ItemId> exclude,
                               std::size_t k);

// |topk ∩ relevant| / |relevant|. `relevant` must be nonempty.
double recall_at_k(std::span<const ItemId> topk, std::span<const ItemId> relevant);

// Binary-gain NDCG with 1-based log2(rank + 1) discounts; the ideal DCG
// covers min(|topk|, |relevant|) hits.
double ndcg_at_k(std::span<const ItemId> topk, std::span<const ItemId> relevant);

struct SdGap {
  std::size_t k = 0;
  double top = 0.0;     // SD over all entries of the k most popular items
  double bottom = 0.0;  // same for the k least popular items
  double ratio() const { return bottom > 0.0 ? top / bottom : 0.0; }
};

// Popularity ties are broken by ascending item id on both ends.
SdGap sd_gap(const Matrix& embeddings, const PopularityTable& popularity, std::size_t k);

struct Correlation {
  double rho = 0.0;
  bool degenerate = false;  // one side constant, rho reported as 0
};

// Spearman rank correlation with average ranks for ties.
Correlation spearman(std::span<const double> a, std::span<const double> b);
Correlation pop_correlation(std::span<const double> mean_scores, const PopularityTable& popularity);

enum class EvalSplit { kValidation, kTest };

struct MetricsAtK {
  std::size_t k = 0;
  double recall = 0.0;
  double ndcg = 0.0;
};

struct RankingReport {
  std::vector<MetricsAtK> metrics;  // user-mean over users with relevant items
  std::size_t users = 0;
  std::vector<std::pair<UserId, std::vector<ItemId>>> top_lists;

  const MetricsAtK& at(std::size_t k) const;
};

// Test-mode scorer: phi(u) from the user's distinct training history,
// scores <phi(u), psi(i)> over all items. Adjacency slices are cached.
class Recommender {
 public:
  Recommender(const ModelParams& params, const HyperGraph& graph, const SplitDataset& split);

  Vector user_vector(UserId user) const;
  Vector scores(UserId user) const;
  const ModelParams& params() const { return *params_; }

 private:
  const ModelParams* params_;
  const SplitDataset* split_;
  std::vector<Matrix> slices_;
};

inline constexpr std::size_t kDefaultKs[] = {5, 10, 20};

// Macro-averaged R@K / N@K; candidates exclude the user's training items.
// Lists are truncated when fewer than K candidates remain.
RankingReport evaluate(const Recommender& model, const SplitDataset& split, EvalSplit which,
                       std::span<const std::size_t> ks = kDefaultKs, bool keep_lists = false);

// Ranks every candidate by training popularity.
RankingReport evaluate_most_popular(const SplitDataset& split, const PopularityTable& popularity,
                                    EvalSplit which, std::span<const std::size_t> ks = kDefaultKs);

// Mean test-mode score of every item over up to `max_users` users drawn with
// `seed` from the trainable users (all of them when max_users == 0).
std::vector<double> mean_item_scores(const Recommender& model, const SplitDataset& split,
                                     std::size_t max_users = 0, std::uint64_t seed = 0);

// key=value lines, e.g. `recall@20=0.1234`.
void write_metrics_text(const RankingReport& report, std::ostream& out);
// `K,recall,ndcg` table.
void write_metrics_table(const RankingReport& report, std::ostream& out);
// `k,sd_top,sd_bottom` table.
void write_sd_gap_table(std::span<const SdGap> gaps, std::ostream& out);
// `user item_1 ... item_K` with external labels.
void write_top_lists(const RankingReport& report, const IndexMap& users, const IndexMap& items,
                     std::ostream& out);
// `item_id v1 ... v_d` rows.
void write_embeddings(const Matrix& embeddings, const IndexMap& items, std::ostream& out);

}  // namespace cadrec
