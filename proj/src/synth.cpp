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

#include "cadrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "cadrec/errors.hpp"

namespace cadrec {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void SynthConfig::validate() const {
  if (num_users == 0 || num_items == 0 || latent_dim == 0 || events_per_user == 0) {
    throw ConfigError("synth: counts must be positive");
  }
  if (events_spread >= events_per_user) throw ConfigError("synth: events_spread must be < events_per_user");
  if (events_per_user + events_spread > num_items) {
    throw ConfigError("synth: a user cannot draw more distinct items than exist");
  }
  if (!(alpha_pop >= 0.0) || !std::isfinite(alpha_pop)) throw ConfigError("synth: alpha_pop must be >= 0");
  if (!(sigma_indi >= 0.0) || !std::isfinite(sigma_indi)) throw ConfigError("synth: sigma_indi must be >= 0");
}

SynthCorpus generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto m = static_cast<Eigen::Index>(cfg.num_users);
  const auto n = static_cast<Eigen::Index>(cfg.num_items);
  const auto d = static_cast<Eigen::Index>(cfg.latent_dim);

  SynthCorpus c;
  std::mt19937_64 rng(splitmix64(cfg.seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  c.item_factors.resize(n, d);
  for (Eigen::Index i = 0; i < c.item_factors.size(); ++i) c.item_factors.data()[i] = normal(rng);
  std::vector<std::size_t> rank(cfg.num_items);
  std::iota(rank.begin(), rank.end(), 0);
  std::shuffle(rank.begin(), rank.end(), rng);
  c.item_popularity.resize(cfg.num_items);
  c.item_sensitivity.resize(cfg.num_items);
  for (std::size_t i = 0; i < cfg.num_items; ++i) {
    c.item_popularity[i] = 1.0 / static_cast<double>(rank[i] + 1);
    c.item_sensitivity[i] = normal(rng);
  }

  c.user_factors.resize(m, d);
  c.user_bias.resize(cfg.num_users);
  std::vector<std::vector<ItemId>> drawn(cfg.num_users);

#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t u = 0; u < cfg.num_users; ++u) {
    std::mt19937_64 urng(splitmix64(cfg.seed ^ splitmix64(u + 1)));
    std::normal_distribution<double> unorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto row = static_cast<Eigen::Index>(u);
    for (Eigen::Index j = 0; j < d; ++j) c.user_factors(row, j) = unorm(urng);
    const double bias = cfg.sigma_indi * unorm(urng);
    c.user_bias[u] = bias;

    std::size_t count = cfg.events_per_user;
    if (cfg.events_spread > 0) {
      std::uniform_int_distribution<std::size_t> spread(0, 2 * cfg.events_spread);
      count = cfg.events_per_user - cfg.events_spread + spread(urng);
    }

    // Gumbel-top-k: sorting perturbed logits samples without replacement in
    // draw order, independent of the softmax normalizer.
    const Vector affinity = c.item_factors * c.user_factors.row(row).transpose();
    std::vector<std::pair<double, ItemId>> keyed(cfg.num_items);
    for (std::size_t i = 0; i < cfg.num_items; ++i) {
      const double logit = affinity(static_cast<Eigen::Index>(i)) +
                           cfg.alpha_pop * std::log(c.item_popularity[i]) +
                           bias * c.item_sensitivity[i];
      double uval = unif(urng);
      while (uval <= 0.0) uval = unif(urng);
      keyed[i] = {logit - std::log(-std::log(uval)), static_cast<ItemId>(i)};
    }
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(count), keyed.end(),
                      [](const auto& a, const auto& b) {
                        return a.first > b.first || (a.first == b.first && a.second < b.second);
                      });
    for (std::size_t k = 0; k < count; ++k) drawn[u].push_back(keyed[k].second);
    // Gumbel order tracks logit rank; timestamps follow a random order instead
    // so the temporal holdout is not the user's least-preferred tail.
    std::shuffle(drawn[u].begin(), drawn[u].end(), urng);
  }

  c.log.num_users = cfg.num_users;
  c.log.num_items = cfg.num_items;
  for (std::size_t u = 0; u < cfg.num_users; ++u) c.log.users.intern("u" + std::to_string(u));
  for (std::size_t i = 0; i < cfg.num_items; ++i) c.log.items.intern("i" + std::to_string(i));
  for (std::size_t u = 0; u < cfg.num_users; ++u) {
    for (std::size_t k = 0; k < drawn[u].size(); ++k) {
      c.log.events.push_back({static_cast<UserId>(u), drawn[u][k], static_cast<std::int64_t>(k + 1)});
    }
  }
  return c;
}

void write_ground_truth(const SynthCorpus& corpus, const SynthConfig& cfg, std::ostream& out) {
  out << "seed=" << cfg.seed << '\n'
      << "num_users=" << cfg.num_users << '\n'
      << "num_items=" << cfg.num_items << '\n'
      << "latent_dim=" << cfg.latent_dim << '\n'
      << "alpha_pop=" << cfg.alpha_pop << '\n'
      << "sigma_indi=" << cfg.sigma_indi << '\n'
      << "events_per_user=" << cfg.events_per_user << '\n'
      << "events_spread=" << cfg.events_spread << '\n';
  out << std::setprecision(10);
  out << "[items]\n# item z_star sensitivity factors...\n";
  for (std::size_t i = 0; i < corpus.item_popularity.size(); ++i) {
    out << corpus.log.items.label(static_cast<std::uint32_t>(i)) << ' ' << corpus.item_popularity[i]
        << ' ' << corpus.item_sensitivity[i];
    for (Eigen::Index j = 0; j < corpus.item_factors.cols(); ++j) {
      out << ' ' << corpus.item_factors(static_cast<Eigen::Index>(i), j);
    }
    out << '\n';
  }
  out << "[users]\n# user b_star factors...\n";
  for (std::size_t u = 0; u < corpus.user_bias.size(); ++u) {
    out << corpus.log.users.label(static_cast<std::uint32_t>(u)) << ' ' << corpus.user_bias[u];
    for (Eigen::Index j = 0; j < corpus.user_factors.cols(); ++j) {
      out << ' ' << corpus.user_factors(static_cast<Eigen::Index>(u), j);
    }
    out << '\n';
  }
}

double gini(std::span<const double> values) {
  require(!values.empty(), "gini: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  if (total <= 0.0) return 0.0;
  const double n = static_cast<double>(sorted.size());
  double weighted = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) weighted += static_cast<double>(i + 1) * sorted[i];
  return (2.0 * weighted) / (n * total) - (n + 1.0) / n;
}

}  // namespace cadrec
