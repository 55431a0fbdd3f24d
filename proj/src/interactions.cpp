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

#include "cadrec/interactions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "cadrec/errors.hpp"

namespace cadrec {
namespace {

// Tolerance for ratio * count products such as 0.7 * 10 landing a hair
// above an integer.
constexpr double kRoundingSlack = 1e-9;

std::size_t ceil_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - kRoundingSlack));
}

std::size_t floor_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + kRoundingSlack));
}

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string_view> fields;
  if (delimiter == '\0') {
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (pos == line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
      fields.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    return fields;
  }
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = line.find(delimiter, pos);
    fields.push_back(line.substr(pos, end == std::string_view::npos ? end : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::uint32_t IndexMap::intern(std::string_view label) {
  const std::string key(label);
  if (auto it = lookup_.find(key); it != lookup_.end()) return it->second;
  const auto index = static_cast<std::uint32_t>(labels_.size());
  labels_.push_back(key);
  lookup_.emplace(key, index);
  return index;
}

std::optional<std::uint32_t> IndexMap::find(std::string_view label) const {
  if (auto it = lookup_.find(std::string(label)); it != lookup_.end()) return it->second;
  return std::nullopt;
}

void IndexMap::write(std::ostream& out) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) out << i << '\t' << labels_[i] << '\n';
}

IndexMap IndexMap::identity(std::size_t n) {
  IndexMap map;
  for (std::size_t i = 0; i < n; ++i) map.intern(std::to_string(i));
  return map;
}

void InteractionLog::validate() const {
  if (num_users == 0 || num_items == 0) throw DataError("interaction log has no users or items");
  for (const Event& e : events) {
    if (e.user >= num_users || e.item >= num_items) {
      throw DataError("event references user " + std::to_string(e.user) + " / item " +
                      std::to_string(e.item) + " outside the index range");
    }
  }
}

InteractionLog parse_interactions(std::istream& in, const LoadOptions& options) {
  const std::size_t needed =
      std::max({options.user_field, options.item_field, options.timestamp_field}) + 1;
  InteractionLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view content = trim(line);
    if (content.empty()) continue;
    const auto fields = split_fields(content, options.delimiter);
    if (fields.size() < needed) {
      throw ParseError(line_no, "expected at least " + std::to_string(needed) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    const std::string_view user = trim(fields[options.user_field]);
    const std::string_view item = trim(fields[options.item_field]);
    const std::string_view stamp = trim(fields[options.timestamp_field]);
    if (user.empty() || item.empty()) throw ParseError(line_no, "empty user or item field");
    std::int64_t timestamp = 0;
    const auto [ptr, ec] = std::from_chars(stamp.data(), stamp.data() + stamp.size(), timestamp);
    if (ec != std::errc() || ptr != stamp.data() + stamp.size()) {
      throw ParseError(line_no, "invalid timestamp '" + std::string(stamp) + "'");
    }
    log.events.push_back({log.users.intern(user), log.items.intern(item), timestamp});
  }
  if (log.events.empty()) throw DataError("empty corpus: no interaction events");
  log.num_users = log.users.size();
  log.num_items = log.items.size();
  return log;
}

InteractionLog load_interactions(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interaction file " + path.string());
  return parse_interactions(in, options);
}

void write_interactions(const InteractionLog& log, std::ostream& out, char delimiter) {
  const char sep = delimiter == '\0' ? '\t' : delimiter;
  for (const Event& e : log.events) {
    out << log.users.label(e.user) << sep << log.items.label(e.item) << sep << e.timestamp << '\n';
  }
}

void SplitOptions::validate() const {
  const auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(train_ratio) || !in_unit(val_ratio) || !in_unit(test_ratio) || train_ratio == 0.0) {
    throw ConfigError("split ratios must lie in [0,1] with a positive train ratio");
  }
  if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-6) {
    throw ConfigError("split ratios must sum to 1");
  }
  if (!(ia_fraction > 0.0 && ia_fraction <= 1.0)) throw ConfigError("ia_fraction must lie in (0,1]");
  if (max_seq_len == 0) throw ConfigError("max_seq_len must be positive");
}

std::vector<ItemId> distinct_in_order(std::span<const ItemId> items) {
  std::vector<ItemId> out;
  std::unordered_set<ItemId> seen;
  for (ItemId item : items) {
    if (seen.insert(item).second) out.push_back(item);
  }
  return out;
}

IaFiaSplit split_ia_fia(std::span<const ItemId> train_seq, double ia_fraction) {
  require(!train_seq.empty(), "split_ia_fia: empty training sequence");
  require(ia_fraction > 0.0 && ia_fraction <= 1.0, "split_ia_fia: ia_fraction must lie in (0,1]");
  const std::size_t n = train_seq.size();
  const std::size_t n_ia = std::clamp<std::size_t>(ceil_count(ia_fraction, n), 1, n);

  IaFiaSplit result;
  result.ia = distinct_in_order(train_seq.first(n_ia));
  const std::unordered_set<ItemId> in_ia(result.ia.begin(), result.ia.end());
  for (ItemId item : distinct_in_order(train_seq.subspan(n_ia))) {
    if (!in_ia.contains(item)) result.fia.push_back(item);
  }
  return result;
}

std::size_t SplitDataset::train_events() const {
  std::size_t total = 0;
  for (const auto& u : users) total += u.train.size();
  return total;
}

std::size_t SplitDataset::retained_users() const {
  return static_cast<std::size_t>(
      std::count_if(users.begin(), users.end(), [](const UserSplit& u) { return u.retained; }));
}

std::vector<UserId> SplitDataset::trainable_users() const {
  std::vector<UserId> out;
  for (std::size_t u = 0; u < users.size(); ++u) {
    if (users[u].retained && !users[u].ia.empty()) out.push_back(static_cast<UserId>(u));
  }
  return out;
}

SplitDataset temporal_split(const InteractionLog& log, const SplitOptions& options) {
  options.validate();
  log.validate();

  std::vector<std::vector<std::size_t>> per_user(log.num_users);
  for (std::size_t i = 0; i < log.events.size(); ++i) per_user[log.events[i].user].push_back(i);

  SplitDataset split;
  split.num_users = log.num_users;
  split.num_items = log.num_items;
  split.users.resize(log.num_users);

  for (std::size_t u = 0; u < log.num_users; ++u) {
    auto& order = per_user[u];
    if (order.size() < options.min_interactions || order.empty()) {
      if (!order.empty()) {
        spdlog::debug("dropping user {} with {} events (min {})", log.users.label(u), order.size(),
                      options.min_interactions);
        ++split.dropped_users;
      }
      continue;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return log.events[a].timestamp < log.events[b].timestamp;
    });
    const std::size_t n = order.size();
    const std::size_t n_train = std::min(n, ceil_count(options.train_ratio, n));
    const std::size_t n_test = std::min(n - n_train, floor_count(options.test_ratio, n));
    const std::size_t n_val = n - n_train - n_test;

    UserSplit& us = split.users[u];
    us.retained = true;
    const std::size_t first_kept = n_train > options.max_seq_len ? n_train - options.max_seq_len : 0;
    split.truncated_events += first_kept;
    for (std::size_t k = first_kept; k < n_train; ++k) us.train.push_back(log.events[order[k]].item);
    for (std::size_t k = n_train; k < n_train + n_val; ++k) us.val.push_back(log.events[order[k]].item);
    for (std::size_t k = n_train + n_val; k < n; ++k) us.test.push_back(log.events[order[k]].item);

    auto parts = split_ia_fia(us.train, options.ia_fraction);
    us.ia = std::move(parts.ia);
    us.fia = std::move(parts.fia);
    us.history = distinct_in_order(us.train);
  }
  if (split.dropped_users > 0) {
    spdlog::info("dropped {} users with fewer than {} interactions", split.dropped_users,
                 options.min_interactions);
  }
  if (split.retained_users() == 0) throw DataError("no user has enough interactions to split");
  return split;
}

std::uint64_t PopularityTable::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

PopularityTable item_popularity(const SplitDataset& split) {
  PopularityTable table;
  table.counts.assign(split.num_items, 0);
  for (const auto& u : split.users) {
    for (ItemId item : u.train) ++table.counts[item];
  }
  return table;
}

void write_split_manifest(const SplitDataset& split, const IndexMap& users, std::ostream& out) {
  std::size_t val = 0, test = 0;
  for (const auto& u : split.users) {
    val += u.val.size();
    test += u.test.size();
  }
  out << "num_users=" << split.num_users << '\n'
      << "num_items=" << split.num_items << '\n'
      << "retained_users=" << split.retained_users() << '\n'
      << "dropped_users=" << split.dropped_users << '\n'
      << "train_events=" << split.train_events() << '\n'
      << "val_events=" << val << '\n'
      << "test_events=" << test << '\n'
      << "truncated_events=" << split.truncated_events << '\n';
  for (std::size_t u = 0; u < split.users.size(); ++u) {
    const auto& us = split.users[u];
    if (!us.retained) continue;
    out << "user=" << users.label(static_cast<std::uint32_t>(u)) << " train=" << us.train.size()
        << " val=" << us.val.size() << " test=" << us.test.size() << " ia=" << us.ia.size()
        << " fia=" << us.fia.size() << '\n';
  }
}

}  // namespace cadrec
