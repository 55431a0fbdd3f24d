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

#include "cadrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_set>

#include "cadrec/errors.hpp"
#include "cadrec/hgc_layer.hpp"

namespace cadrec {
namespace {

std::vector<ItemId> distinct_relevant(const UserSplit& u, EvalSplit which) {
  return distinct_in_order(which == EvalSplit::kValidation ? u.val : u.test);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double population_sd(const Matrix& embeddings, std::span<const ItemId> items) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (ItemId i : items) {
    for (Eigen::Index j = 0; j < embeddings.cols(); ++j) {
      const double v = embeddings(i, j);
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  if (n == 0) return 0.0;
  const double mean = sum / static_cast<double>(n);
  return std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));
}

template <typename ScoreFn>
RankingReport evaluate_with(const SplitDataset& split, EvalSplit which,
                            std::span<const std::size_t> ks, bool keep_lists, ScoreFn&& scores_for) {
  require(!ks.empty(), "evaluate: empty K list");
  const std::size_t max_k = *std::max_element(ks.begin(), ks.end());

  std::vector<UserId> users;
  for (std::size_t u = 0; u < split.users.size(); ++u) {
    const auto& us = split.users[u];
    const auto& rel = which == EvalSplit::kValidation ? us.val : us.test;
    if (us.retained && !us.history.empty() && !rel.empty()) users.push_back(static_cast<UserId>(u));
  }

  struct PerUser {
    std::vector<double> recall, ndcg;
    std::vector<ItemId> top;
  };
  std::vector<PerUser> results(users.size());

#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t n = 0; n < users.size(); ++n) {
    const UserId u = users[n];
    const UserSplit& us = split.users[u];
    const Vector s = scores_for(u);
    std::vector<ItemId> exclude = us.history;
    std::sort(exclude.begin(), exclude.end());
    const std::size_t candidates = static_cast<std::size_t>(s.size()) - exclude.size();
    const auto top = rank_items(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())),
                                exclude, std::min(max_k, candidates));
    const auto relevant = distinct_relevant(us, which);
    PerUser& r = results[n];
    for (std::size_t k : ks) {
      const std::span<const ItemId> head(top.data(), std::min(k, top.size()));
      r.recall.push_back(recall_at_k(head, relevant));
      r.ndcg.push_back(ndcg_at_k(head, relevant));
    }
    if (keep_lists) r.top = top;
  }

  RankingReport report;
  report.users = users.size();
  for (std::size_t j = 0; j < ks.size(); ++j) {
    MetricsAtK m;
    m.k = ks[j];
    for (const auto& r : results) {
      m.recall += r.recall[j];
      m.ndcg += r.ndcg[j];
    }
    if (!users.empty()) {
      m.recall /= static_cast<double>(users.size());
      m.ndcg /= static_cast<double>(users.size());
    }
    report.metrics.push_back(m);
  }
  if (keep_lists) {
    for (std::size_t n = 0; n < users.size(); ++n) report.top_lists.emplace_back(users[n], std::move(results[n].top));
  }
  return report;
}

}  // namespace

std::vector<ItemId> rank_items(std::span<const double> scores, std::span<const ItemId> exclude,
                               std::size_t k) {
  std::vector<std::uint8_t> excluded(scores.size(), 0);
  for (ItemId i : exclude) {
    require(i < scores.size(), "rank_items: excluded item out of range");
    excluded[i] = 1;
  }
  std::vector<ItemId> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!excluded[i]) candidates.push_back(static_cast<ItemId>(i));
  }
  require(k <= candidates.size(), "rank_items: K exceeds the number of candidates");
  const auto better = [&](ItemId a, ItemId b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), better);
  candidates.resize(k);
  return candidates;
}

double recall_at_k(std::span<const ItemId> topk, std::span<const ItemId> relevant) {
  require(!relevant.empty(), "recall_at_k: empty relevant set");
  const std::unordered_set<ItemId> rel(relevant.begin(), relevant.end());
  std::size_t hits = 0;
  for (ItemId i : topk) hits += rel.contains(i) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(rel.size());
}

double ndcg_at_k(std::span<const ItemId> topk, std::span<const ItemId> relevant) {
  require(!relevant.empty(), "ndcg_at_k: empty relevant set");
  const std::unordered_set<ItemId> rel(relevant.begin(), relevant.end());
  double dcg = 0.0;
  for (std::size_t r = 0; r < topk.size(); ++r) {
    if (rel.contains(topk[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(topk.size(), rel.size());
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

SdGap sd_gap(const Matrix& embeddings, const PopularityTable& popularity, std::size_t k) {
  const std::size_t n = popularity.size();
  require(static_cast<std::size_t>(embeddings.rows()) == n, "sd_gap: embedding rows != item count");
  require(k >= 1 && k <= n / 2, "sd_gap: k must lie in [1, N/2]");
  std::vector<ItemId> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<ItemId> top = order, bottom = order;
  std::stable_sort(top.begin(), top.end(), [&](ItemId a, ItemId b) {
    return popularity.counts[a] > popularity.counts[b];
  });
  std::stable_sort(bottom.begin(), bottom.end(), [&](ItemId a, ItemId b) {
    return popularity.counts[a] < popularity.counts[b];
  });
  top.resize(k);
  bottom.resize(k);
  return {k, population_sd(embeddings, top), population_sd(embeddings, bottom)};
}

Correlation spearman(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "spearman: length mismatch");
  require(a.size() >= 3, "spearman: needs at least 3 values");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va <= 0.0 || vb <= 0.0) return {0.0, true};
  return {cov / std::sqrt(va * vb), false};
}

Correlation pop_correlation(std::span<const double> mean_scores, const PopularityTable& popularity) {
  std::vector<double> counts(popularity.counts.begin(), popularity.counts.end());
  return spearman(mean_scores, counts);
}

const MetricsAtK& RankingReport::at(std::size_t k) const {
  for (const auto& m : metrics) {
    if (m.k == k) return m;
  }
  throw ContractViolation("RankingReport: K=" + std::to_string(k) + " was not evaluated");
}

Recommender::Recommender(const ModelParams& params, const HyperGraph& graph,
                         const SplitDataset& split)
    : params_(&params), split_(&split), slices_(split.users.size()) {
  require(params.num_users() == split.num_users && params.num_items() == split.num_items,
          "Recommender: model dimensions do not match the dataset");
  for (std::size_t u = 0; u < split.users.size(); ++u) {
    const auto& us = split.users[u];
    if (us.retained && !us.history.empty()) slices_[u] = graph.slice(us.history);
  }
}

Vector Recommender::user_vector(UserId user) const {
  const auto& history = split_->users.at(user).history;
  require(!history.empty(), "Recommender: user has no training history");
  return encode_user(user, history, slices_[user], *params_);
}

Vector Recommender::scores(UserId user) const {
  return params_->item_embeddings * user_vector(user);
}

RankingReport evaluate(const Recommender& model, const SplitDataset& split, EvalSplit which,
                       std::span<const std::size_t> ks, bool keep_lists) {
  return evaluate_with(split, which, ks, keep_lists, [&](UserId u) { return model.scores(u); });
}

RankingReport evaluate_most_popular(const SplitDataset& split, const PopularityTable& popularity,
                                    EvalSplit which, std::span<const std::size_t> ks) {
  Vector counts(static_cast<Eigen::Index>(popularity.size()));
  for (std::size_t i = 0; i < popularity.size(); ++i) {
    counts(static_cast<Eigen::Index>(i)) = static_cast<double>(popularity.counts[i]);
  }
  return evaluate_with(split, which, ks, false, [&](UserId) { return counts; });
}

std::vector<double> mean_item_scores(const Recommender& model, const SplitDataset& split,
                                     std::size_t max_users, std::uint64_t seed) {
  auto users = split.trainable_users();
  if (max_users > 0 && users.size() > max_users) {
    std::mt19937_64 rng(seed);
    std::shuffle(users.begin(), users.end(), rng);
    users.resize(max_users);
    std::sort(users.begin(), users.end());
  }
  require(!users.empty(), "mean_item_scores: no users");
  const auto& psi = model.params().item_embeddings;
  Matrix phis(static_cast<Eigen::Index>(users.size()), psi.cols());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t n = 0; n < users.size(); ++n) {
    phis.row(static_cast<Eigen::Index>(n)) = model.user_vector(users[n]).transpose();
  }
  const Vector mean_phi = phis.colwise().mean().transpose();
  const Vector mean = psi * mean_phi;
  return {mean.data(), mean.data() + mean.size()};
}

void write_metrics_text(const RankingReport& report, std::ostream& out) {
  out << std::setprecision(10);
  out << "users=" << report.users << '\n';
  for (const auto& m : report.metrics) {
    out << "recall@" << m.k << '=' << m.recall << '\n';
    out << "ndcg@" << m.k << '=' << m.ndcg << '\n';
  }
}

void write_metrics_table(const RankingReport& report, std::ostream& out) {
  out << std::setprecision(10) << "K,recall,ndcg\n";
  for (const auto& m : report.metrics) out << m.k << ',' << m.recall << ',' << m.ndcg << '\n';
}

void write_sd_gap_table(std::span<const SdGap> gaps, std::ostream& out) {
  out << std::setprecision(10) << "k,sd_top,sd_bottom\n";
  for (const auto& g : gaps) out << g.k << ',' << g.top << ',' << g.bottom << '\n';
}

void write_top_lists(const RankingReport& report, const IndexMap& users, const IndexMap& items,
                     std::ostream& out) {
  for (const auto& [user, list] : report.top_lists) {
    out << users.label(user);
    for (ItemId i : list) out << ' ' << items.label(i);
    out << '\n';
  }
}

void write_embeddings(const Matrix& embeddings, const IndexMap& items, std::ostream& out) {
  out << std::setprecision(10);
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    out << items.label(static_cast<std::uint32_t>(i));
    for (Eigen::Index j = 0; j < embeddings.cols(); ++j) out << ' ' << embeddings(i, j);
    out << '\n';
  }
}

}  // namespace cadrec
