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

// Reference implementations for tests. Written with nested std::vector and
// explicit loops, sharing no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "cadrec/types.hpp"

namespace cadrec::oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense zeros(std::size_t r, std::size_t c) { return Dense(r, std::vector<double>(c, 0.0)); }

inline Dense from_eigen(const Matrix& m) {
  Dense out = zeros(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out[i].size(); ++j)
      out[i][j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

inline Dense matmul(const Dense& a, const Dense& b) {
  Dense out = zeros(a.size(), b.front().size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[k].size(); ++j) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Dense transpose(const Dense& a) {
  Dense out = zeros(a.front().size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) out[j][i] = a[i][j];
  return out;
}

inline double max_abs_diff(const Dense& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      worst = std::max(worst, std::abs(a[i][j] - b(static_cast<Eigen::Index>(i),
                                                   static_cast<Eigen::Index>(j))));
  return worst;
}

// D^-1/2 A D^-1/2 of the binary co-occurrence matrix with self-loops.
inline Dense normalized_adjacency(std::size_t n, const std::vector<std::vector<ItemId>>& edges) {
  Dense a = zeros(n, n);
  for (const auto& e : edges)
    for (ItemId x : e)
      for (ItemId y : e) a[x][y] = 1.0;
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i] += a[i][j] != 0.0 ? 1.0 : 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a[i][j] != 0.0) a[i][j] = 1.0 / (std::sqrt(d[i]) * std::sqrt(d[j]));
  return a;
}

inline double elu(double x) { return x > 0.0 ? x : std::exp(x) - 1.0; }

// delta * rowwise_l2(E Wq (E Wk)^T / sqrt(d)).
inline Dense perturbation(const Dense& e, const Dense& wq, const Dense& wk, double delta) {
  const Dense s0 = matmul(matmul(e, wq), transpose(matmul(e, wk)));
  const double scale = std::sqrt(static_cast<double>(wq.size()));
  Dense s = s0;
  for (auto& row : s) {
    double norm = 0.0;
    for (double& v : row) {
      v /= scale;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : row) v = norm > 0.0 ? delta * v / norm : 0.0;
  }
  return s;
}

inline Dense hgc_forward(const Dense& slice, const Dense& e, const Dense& wq, const Dense& wk,
                         const Dense& w1, double delta) {
  const Dense p = perturbation(e, wq, wk, delta);
  Dense mix = slice;
  for (std::size_t i = 0; i < mix.size(); ++i)
    for (std::size_t j = 0; j < mix.size(); ++j) mix[i][j] += p[i][j];
  Dense g = matmul(e, w1);
  for (auto& row : g)
    for (double& v : row) v = elu(v);
  return matmul(mix, g);
}

// Brute-force top-k: sort every (score, id) pair, then drop excluded ids.
inline std::vector<ItemId> top_k(const std::vector<double>& scores,
                                 const std::set<ItemId>& exclude, std::size_t k) {
  std::vector<std::pair<double, ItemId>> all;
  for (std::size_t i = 0; i < scores.size(); ++i) all.emplace_back(scores[i], static_cast<ItemId>(i));
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<ItemId> out;
  for (const auto& [s, id] : all) {
    if (exclude.count(id)) continue;
    if (out.size() == k) break;
    out.push_back(id);
  }
  return out;
}

inline double recall(const std::vector<ItemId>& top, const std::set<ItemId>& rel) {
  std::size_t hits = 0;
  for (ItemId i : top) hits += rel.count(i);
  return static_cast<double>(hits) / static_cast<double>(rel.size());
}

inline double ndcg(const std::vector<ItemId>& top, const std::set<ItemId>& rel) {
  double dcg = 0.0, idcg = 0.0;
  for (std::size_t r = 0; r < top.size(); ++r)
    if (rel.count(top[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  for (std::size_t r = 0; r < std::min(top.size(), rel.size()); ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

}  // namespace cadrec::oracle
