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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "cadrec/errors.hpp"
#include "cadrec/evaluation.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace cadrec;

TEST_CASE("rank items") {
  const double scores[] = {0.9, 0.1, 0.5};
  const ItemId ex[] = {0};
  CHECK(rank_items(scores, ex, 2) == std::vector<ItemId>{2, 1});
  const double flat[] = {1, 1, 1, 1};
  CHECK(rank_items(flat, {}, 3) == std::vector<ItemId>{0, 1, 2});
  CHECK(rank_items(scores, {}, 3) == std::vector<ItemId>{0, 2, 1});
  CHECK_THROWS_AS(rank_items(scores, ex, 3), ContractViolation);
}

TEST_CASE("rank items matches a full sort") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 100;
    std::vector<double> scores(n);
    // Coarse values force ties.
    for (double& s : scores) s = static_cast<double>(rng() % 7);
    std::set<ItemId> excl;
    for (std::size_t k = 0; k < n / 3; ++k) excl.insert(static_cast<ItemId>(rng() % n));
    const std::vector<ItemId> ex(excl.begin(), excl.end());
    const std::size_t k = (n - excl.size()) == 0 ? 0 : 1 + rng() % (n - excl.size());
    REQUIRE(rank_items(scores, ex, k) == oracle::top_k(scores, excl, k));
  }
}

TEST_CASE("recall and ndcg closed forms") {
  const ItemId top[] = {2, 1};
  const ItemId rel[] = {2, 5};
  CHECK(recall_at_k(top, rel) == 0.5);
  const ItemId sub[] = {1};
  CHECK(recall_at_k(top, sub) == 1.0);
  const ItemId none[] = {9};
  CHECK(recall_at_k(top, none) == 0.0);

  const ItemId first[] = {2};
  CHECK(ndcg_at_k(top, first) == 1.0);
  CHECK(ndcg_at_k(top, sub) == doctest::Approx(1.0 / std::log2(3.0)));
  CHECK(ndcg_at_k(top, sub) == doctest::Approx(0.6309).epsilon(1e-4));
}

TEST_CASE("metrics are non-decreasing in K for a fixed ranking") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ItemId> ranking(30);
    std::iota(ranking.begin(), ranking.end(), 0);
    std::shuffle(ranking.begin(), ranking.end(), rng);
    std::vector<ItemId> rel = {static_cast<ItemId>(rng() % 30), static_cast<ItemId>(rng() % 30)};
    rel = distinct_in_order(rel);
    double r_prev = 0.0;
    for (std::size_t k = 1; k <= 30; ++k) {
      const std::span<const ItemId> top(ranking.data(), k);
      const double r = recall_at_k(top, rel);
      CHECK(r >= r_prev);
      r_prev = r;
    }
  }
}

TEST_CASE("sd gap") {
  PopularityTable pop;
  pop.counts = {5, 1, 4, 0, 3, 2};
  Matrix same = Matrix::Constant(6, 3, 0.25);
  const SdGap flat = sd_gap(same, pop, 2);
  CHECK(flat.top == 0.0);
  CHECK(flat.bottom == 0.0);

  std::mt19937_64 rng(14);
  Matrix emb = testing::random_matrix(rng, 6, 3);
  // Most popular: items 0 and 2; least popular: items 3 and 1.
  Matrix scaled = emb;
  scaled.row(0) = 10.0 * emb.row(3);
  scaled.row(2) = 10.0 * emb.row(1);
  scaled.row(3) = emb.row(3);
  scaled.row(1) = emb.row(1);
  const SdGap g = sd_gap(scaled, pop, 2);
  CHECK(g.top == doctest::Approx(10.0 * g.bottom));
  CHECK(g.ratio() == doctest::Approx(10.0));
  CHECK_THROWS_AS(sd_gap(emb, pop, 4), ContractViolation);
}

TEST_CASE("spearman") {
  const double z[] = {3, 1, 4, 1, 5, 9, 2, 6};
  CHECK(spearman(z, z).rho == doctest::Approx(1.0));
  const double rev[] = {-3, -1, -4, -1, -5, -9, -2, -6};
  CHECK(spearman(z, rev).rho == doctest::Approx(-1.0));
  const double flat[] = {1, 1, 1, 1, 1, 1, 1, 1};
  const auto c = spearman(z, flat);
  CHECK(c.degenerate);
  CHECK(c.rho == 0.0);
  // Average ranks for ties: hand value.
  const double a[] = {1, 2, 2, 3};
  const double b[] = {1, 3, 2, 4};
  // ranks a = (1, 2.5, 2.5, 4), b = (1, 3, 2, 4); Pearson of ranks.
  CHECK(spearman(a, b).rho == doctest::Approx(0.9486832981).epsilon(1e-9));

  PopularityTable pop;
  pop.counts = {3, 1, 4, 1, 5, 9, 2, 6};
  std::vector<double> scores(z, z + 8);
  CHECK(pop_correlation(scores, pop).rho == doctest::Approx(1.0));

  std::mt19937_64 rng(15);
  std::vector<double> noise(2000);
  PopularityTable big;
  for (double& v : noise) v = std::uniform_real_distribution<double>(0, 1)(rng);
  for (int i = 0; i < 2000; ++i) big.counts.push_back(rng() % 100);
  CHECK(std::abs(pop_correlation(noise, big).rho) < 0.2);
}

namespace {

// Two retained users over eight items, shared by the evaluation tests below.
struct SmallWorld {
  InteractionLog log;
  SplitDataset split;
  PopularityTable pop;
  HyperGraph graph;
  ModelParams params;

  SmallWorld() {
    log = testing::log_from_text(
        "a\t0\t1\na\t1\t2\na\t2\t3\na\t3\t4\na\t4\t5\na\t5\t6\na\t6\t7\na\t7\t8\na\t5\t9\na\t6\t10\n"
        "b\t3\t1\nb\t4\t2\nb\t5\t3\nb\t6\t4\nb\t0\t5\n");
    split = temporal_split(log);
    pop = item_popularity(split);
    graph = HyperGraph::build(split);
    Hyperparams h;
    h.dim = 4;
    params = init_params(2, log.num_items, h, 3);
  }
};

}  // namespace

TEST_CASE("evaluate agrees with a brute-force pass over users") {
  SmallWorld w;
  const Recommender model(w.params, w.graph, w.split);
  const std::size_t ks[] = {1, 2, 3};
  const auto report = evaluate(model, w.split, EvalSplit::kTest, ks, true);
  for (std::size_t k : ks) {
    double recall = 0.0, ndcg = 0.0;
    int users = 0;
    for (UserId u = 0; u < 2; ++u) {
      const auto& us = w.split.users[u];
      const Vector s = model.scores(u);
      std::vector<double> sv(s.data(), s.data() + s.size());
      const std::set<ItemId> excl(us.train.begin(), us.train.end());
      const std::set<ItemId> rel(us.test.begin(), us.test.end());
      const auto top = oracle::top_k(sv, excl, std::min(k, sv.size() - excl.size()));
      recall += oracle::recall(top, rel);
      ndcg += oracle::ndcg(top, rel);
      ++users;
    }
    CHECK(report.at(k).recall == doctest::Approx(recall / users).epsilon(1e-15));
    CHECK(report.at(k).ndcg == doctest::Approx(ndcg / users).epsilon(1e-15));
  }
  CHECK(report.users == 2);
  for (const auto& [u, list] : report.top_lists) {
    for (ItemId i : list) {
      const auto& train = w.split.users[u].train;
      CHECK(std::find(train.begin(), train.end(), i) == train.end());
    }
  }
}

TEST_CASE("users without relevant items are skipped") {
  SmallWorld w;
  const Recommender model(w.params, w.graph, w.split);
  // User b has five events: no validation items.
  const auto val = evaluate(model, w.split, EvalSplit::kValidation);
  CHECK(val.users == 1);
}

TEST_CASE("most popular baseline ranks by training counts") {
  SmallWorld w;
  const std::size_t ks[] = {1};
  const auto report = evaluate_most_popular(w.split, w.pop, EvalSplit::kTest, ks);
  CHECK(report.users == 2);
  CHECK(report.at(1).recall >= 0.0);
  CHECK(report.at(1).recall <= 1.0);
}

TEST_CASE("report writers") {
  RankingReport r;
  r.metrics = {{5, 0.25, 0.5}, {20, 0.75, 0.625}};
  std::ostringstream text, table;
  write_metrics_text(r, text);
  write_metrics_table(r, table);
  CHECK(text.str().find("recall@20=0.75") != std::string::npos);
  CHECK(table.str() == "K,recall,ndcg\n5,0.25,0.5\n20,0.75,0.625\n");
  const SdGap gaps[] = {{50, 0.5, 0.25}};
  std::ostringstream diag;
  write_sd_gap_table(gaps, diag);
  CHECK(diag.str() == "k,sd_top,sd_bottom\n50,0.5,0.25\n");
  CHECK_THROWS_AS(r.at(10), ContractViolation);
}
