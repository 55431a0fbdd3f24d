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

#include "cadrec/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_set>

#include "cadrec/errors.hpp"

namespace cadrec {

HyperGraph HyperGraph::build(const SplitDataset& split) {
  std::vector<std::vector<ItemId>> edges;
  edges.reserve(split.users.size());
  for (const auto& u : split.users) {
    if (u.retained && !u.history.empty()) edges.push_back(u.history);
  }
  require(!edges.empty(), "HyperGraph::build: no training hyperedges");
  return from_hyperedges(split.num_items, edges);
}

HyperGraph HyperGraph::from_hyperedges(std::size_t num_items,
                                       const std::vector<std::vector<ItemId>>& hyperedges) {
  // Item -> hyperedges containing it; each row is the union of those edges.
  std::vector<std::vector<std::size_t>> member_of(num_items);
  for (std::size_t e = 0; e < hyperedges.size(); ++e) {
    for (ItemId item : hyperedges[e]) {
      require(item < num_items, "HyperGraph: item id out of range");
      member_of[item].push_back(e);
    }
  }

  HyperGraph g;
  g.degree_.assign(num_items, 0);
  g.row_offsets_.assign(num_items + 1, 0);
  std::vector<std::size_t> mark(num_items, 0);  // row + 1 when already emitted
  std::vector<ItemId> row_cols;
  for (std::size_t row = 0; row < num_items; ++row) {
    row_cols.clear();
    for (std::size_t e : member_of[row]) {
      for (ItemId col : hyperedges[e]) {
        if (mark[col] != row + 1) {
          mark[col] = row + 1;
          row_cols.push_back(col);
        }
      }
    }
    std::sort(row_cols.begin(), row_cols.end());
    g.cols_.insert(g.cols_.end(), row_cols.begin(), row_cols.end());
    g.degree_[row] = row_cols.size();
    g.row_offsets_[row + 1] = g.cols_.size();
  }

  g.values_.resize(g.cols_.size());
  for (std::size_t row = 0; row < num_items; ++row) {
    for (std::size_t k = g.row_offsets_[row]; k < g.row_offsets_[row + 1]; ++k) {
      // Product first so that entry (j,k) and (k,j) are bitwise equal.
      g.values_[k] = 1.0 / std::sqrt(static_cast<double>(g.degree_[row]) *
                                     static_cast<double>(g.degree_[g.cols_[k]]));
    }
  }
  return g;
}

bool HyperGraph::adjacent(ItemId row, ItemId col) const {
  const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_.at(row));
  const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_.at(row + 1));
  return std::binary_search(begin, end, col);
}

double HyperGraph::normalized(ItemId row, ItemId col) const {
  const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_.at(row));
  const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_.at(row + 1));
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

Matrix HyperGraph::slice(std::span<const ItemId> items) const {
  const std::size_t n = items.size();
  std::unordered_set<ItemId> seen;
  for (ItemId item : items) {
    require(item < num_items(), "HyperGraph::slice: item id out of range");
    require(seen.insert(item).second, "HyperGraph::slice: duplicate item in hyperedge");
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p; q < n; ++q) {
      const double v = normalized(items[p], items[q]);
      out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = v;
      out(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)) = v;
    }
  }
  return out;
}

Matrix HyperGraph::dense() const {
  const auto n = static_cast<Eigen::Index>(num_items());
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t row = 0; row < num_items(); ++row) {
    for (std::size_t k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k) {
      out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(cols_[k])) = values_[k];
    }
  }
  return out;
}

void HyperGraph::dump(std::ostream& out) const {
  for (std::size_t row = 0; row < num_items(); ++row) {
    for (std::size_t k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k) {
      out << row << ' ' << cols_[k] << ' ' << values_[k] << '\n';
    }
  }
}

}  // namespace cadrec
