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
#include <iosfwd>
#include <span>
#include <vector>

#include "cadrec/interactions.hpp"
#include "cadrec/types.hpp"

namespace cadrec {

// Item co-occurrence graph. a_jk = 1 when some user's training sequence
// contains both items; every interacted item carries a self-loop. Stored as
// row-major coordinates with a row-offset index; values hold the
// symmetrically normalized entries 1 / sqrt(d_j d_k), where d_j is the
// nonzero count of row j.
class HyperGraph {
 public:
  HyperGraph() = default;

  // Builds from the full training sequence of every retained user.
  static HyperGraph build(const SplitDataset& split);
  static HyperGraph from_hyperedges(std::size_t num_items,
                                    const std::vector<std::vector<ItemId>>& hyperedges);

  std::size_t num_items() const { return degree_.size(); }
  std::size_t nnz() const { return cols_.size(); }
  std::size_t degree(ItemId item) const { return degree_.at(item); }
  bool adjacent(ItemId row, ItemId col) const;

  // Normalized entry, 0 when the pair never co-occurs.
  double normalized(ItemId row, ItemId col) const;

  // Dense L x L block of the normalized matrix in the order of `items`.
  // Duplicate or out-of-range ids are rejected.
  Matrix slice(std::span<const ItemId> items) const;

  // Full N x N normalized matrix; small graphs only.
  Matrix dense() const;

  // `row col value` triples, one per line.
  void dump(std::ostream& out) const;

 private:
  std::vector<std::size_t> row_offsets_;
  std::vector<ItemId> cols_;
  std::vector<double> values_;
  std::vector<std::size_t> degree_;
};

}  // namespace cadrec
