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

#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cadrec/encoders.hpp"
#include "cadrec/hypergraph.hpp"
#include "cadrec/interactions.hpp"
#include "cadrec/objective.hpp"

namespace cadrec::testing {

inline InteractionLog log_from_text(const std::string& text, const LoadOptions& options = {}) {
  std::istringstream in(text);
  return parse_interactions(in, options);
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Three users over eight items with overlapping histories; every user has
// both IA and FIA items.
struct TinyInstance {
  std::vector<std::vector<ItemId>> ia = {{0, 1, 2, 3}, {2, 4, 5}, {1, 5, 6, 0}};
  std::vector<std::vector<ItemId>> fia = {{4, 7}, {6}, {3}};
  HyperGraph graph;
  std::vector<Matrix> slices;
  std::vector<TrainingExample> batch;
  Matrix popularity;
  ObjectiveContext ctx;
  ModelParams params;

  explicit TinyInstance(const Hyperparams& hyper, std::uint64_t seed = 11) {
    std::vector<std::vector<ItemId>> edges;
    for (std::size_t u = 0; u < ia.size(); ++u) {
      auto e = ia[u];
      e.insert(e.end(), fia[u].begin(), fia[u].end());
      edges.push_back(e);
    }
    graph = HyperGraph::from_hyperedges(8, edges);
    PopularityTable table;
    table.counts.assign(8, 0);
    for (const auto& e : edges)
      for (ItemId i : e) ++table.counts[i];
    popularity = popularity_matrix(table, hyper.dim);
    ctx.item_popularity = &popularity;
    for (const auto& items : ia) slices.push_back(graph.slice(items));
    for (std::size_t u = 0; u < ia.size(); ++u)
      batch.push_back({static_cast<UserId>(u), ia[u], fia[u], &slices[u]});
    params = init_params(3, 8, hyper, seed);
  }

  void randomize_bias(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    params.user_bias = random_matrix(rng, params.user_bias.rows(), params.user_bias.cols());
  }
};

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("cadrec_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace cadrec::testing
