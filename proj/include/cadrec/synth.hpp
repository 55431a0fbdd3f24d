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
#include <vector>

#include "cadrec/interactions.hpp"
#include "cadrec/types.hpp"

namespace cadrec {

struct SynthConfig {
  std::size_t num_users = 943;
  std::size_t num_items = 1682;
  std::size_t latent_dim = 8;
  double alpha_pop = 1.0;        // Zipf exponent of planted item popularity
  double sigma_indi = 1.0;       // SD of planted per-user offsets
  std::size_t events_per_user = 106;
  std::size_t events_spread = 0;  // per-user count uniform in [e - s, e + s]
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthCorpus {
  InteractionLog log;
  Matrix user_factors;                   // M x latent_dim
  Matrix item_factors;                   // N x latent_dim
  std::vector<double> item_popularity;   // planted z*_c, Zipf weights 1 / rank
  std::vector<double> user_bias;         // planted b*_u
  std::vector<double> item_sensitivity;  // s(i)
};

// User u draws its events without replacement from
// softmax_i(u.i + alpha_pop * log z*_i + b*_u * s(i)) via Gumbel-top-k.
// The drawn set is visited in a seeded random order and timestamps count
// the visits, so later events are not systematically less preferred.
// Every user is generated from its own seed derived from cfg.seed.
SynthCorpus generate(const SynthConfig& cfg);

// Key-value header (including the seed) followed by [items] and [users]
// sections with the planted quantities.
void write_ground_truth(const SynthCorpus& corpus, const SynthConfig& cfg, std::ostream& out);

// Gini coefficient of nonnegative values (0 = uniform).
double gini(std::span<const double> values);

}  // namespace cadrec
