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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cadrec/types.hpp"

namespace cadrec {

struct Event {
  UserId user = 0;
  ItemId item = 0;
  std::int64_t timestamp = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

// Dense re-indexing of external string ids, in order of first appearance.
class IndexMap {
 public:
  std::uint32_t intern(std::string_view label);
  std::optional<std::uint32_t> find(std::string_view label) const;
  const std::string& label(std::uint32_t index) const { return labels_.at(index); }
  std::size_t size() const { return labels_.size(); }

  // Two-column text: `<index>\t<label>`.
  void write(std::ostream& out) const;
  static IndexMap identity(std::size_t n);

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::uint32_t> lookup_;
};

struct InteractionLog {
  std::vector<Event> events;  // in input order
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  IndexMap users;
  IndexMap items;

  // Throws DataError if an id is out of range or a dimension is zero.
  void validate() const;
};

struct LoadOptions {
  // '\0' splits on any run of spaces/tabs.
  char delimiter = '\t';
  std::size_t user_field = 0;
  std::size_t item_field = 1;
  std::size_t timestamp_field = 2;
};

// Parses delimited text, one event per line. Blank lines are skipped,
// duplicate lines are kept as distinct events. Throws ParseError on a
// malformed line and DataError on an empty corpus.
InteractionLog load_interactions(const std::filesystem::path& path,
                                 const LoadOptions& options = {});
InteractionLog parse_interactions(std::istream& in, const LoadOptions& options = {});

// Writes events using the original labels, so reloading reproduces the log.
void write_interactions(const InteractionLog& log, std::ostream& out, char delimiter = '\t');

struct SplitOptions {
  double train_ratio = 0.7;
  double val_ratio = 0.1;
  double test_ratio = 0.2;
  std::size_t min_interactions = 5;
  double ia_fraction = 0.8;
  std::size_t max_seq_len = 200;

  void validate() const;
};

struct UserSplit {
  bool retained = false;
  std::vector<ItemId> train;  // chronological, after max_seq_len truncation
  std::vector<ItemId> val;
  std::vector<ItemId> test;
  std::vector<ItemId> ia;       // distinct, chronological
  std::vector<ItemId> fia;      // distinct, disjoint from ia
  std::vector<ItemId> history;  // distinct train items, chronological
};

struct SplitDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<UserSplit> users;  // indexed by UserId, size num_users
  std::size_t dropped_users = 0;
  std::size_t truncated_events = 0;

  std::size_t train_events() const;
  std::size_t retained_users() const;
  std::vector<UserId> trainable_users() const;
};

// Per-user chronological partition. Ties in timestamp keep input order.
// train gets ceil(train_ratio * n), test gets floor(test_ratio * n), val the
// remainder. Users below min_interactions are dropped (kept as empty,
// non-retained entries so ids stay stable).
SplitDataset temporal_split(const InteractionLog& log, const SplitOptions& options = {});

struct IaFiaSplit {
  std::vector<ItemId> ia;
  std::vector<ItemId> fia;
};

// The earliest ceil(ia_fraction * |seq|) entries form IA, the rest FIA.
// Each side is deduplicated (first occurrence kept) and FIA drops items
// that already occur in IA.
IaFiaSplit split_ia_fia(std::span<const ItemId> train_seq, double ia_fraction);

std::vector<ItemId> distinct_in_order(std::span<const ItemId> items);

struct PopularityTable {
  std::vector<std::uint64_t> counts;  // z_c per item

  std::uint64_t total() const;
  std::size_t size() const { return counts.size(); }
};

// Counts training events only.
PopularityTable item_popularity(const SplitDataset& split);

// Key-value manifest: global totals followed by one line per user.
void write_split_manifest(const SplitDataset& split, const IndexMap& users, std::ostream& out);

}  // namespace cadrec
