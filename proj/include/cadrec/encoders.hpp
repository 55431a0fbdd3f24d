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
#include <span>
#include <vector>

#include "cadrec/interactions.hpp"
#include "cadrec/types.hpp"

namespace cadrec {

// How the L x L attention score matrix is L2-normalized.
enum class ScoreNorm { kRow, kFrobenius, kColumn };

// Which disentanglement / context components are compiled into the
// forward pass. Disabled components skip their code path entirely.
struct ModelOptions {
  bool attention = true;        // self-attention perturbation of the slice
  bool individual_bias = true;  // sign(psi) * Norm(e_indi) input perturbation
  bool popularity = true;       // beta1-weighted popularity term in training scores
};

struct Hyperparams {
  std::size_t dim = 64;
  std::size_t heads = 1;
  std::size_t layers = 1;
  double delta = 0.1;     // attention perturbation scale
  double beta1 = 0.5;     // popularity influence in training scores
  double beta2 = 0.01;    // IA embedding decay
  double lambda1 = 1.0;   // IA label weight
  double lambda2 = 2.0;   // FIA label weight
  double learning_rate = 1e-2;
  ScoreNorm score_norm = ScoreNorm::kRow;
  ModelOptions options;

  void validate() const;
};

// The full trainable state.
struct ModelParams {
  Hyperparams hyper;
  Matrix item_embeddings;      // N x d, psi
  Matrix user_bias;            // M x d, e_indi
  std::vector<Matrix> query;   // per head, d x d
  std::vector<Matrix> key;     // per head, d x d
  Matrix value;                // d x d, shared by all heads

  std::size_t num_users() const { return static_cast<std::size_t>(user_bias.rows()); }
  std::size_t num_items() const { return static_cast<std::size_t>(item_embeddings.rows()); }
  std::size_t dim() const { return hyper.dim; }
  std::size_t heads() const { return query.size(); }
  bool all_finite() const;
};

// psi ~ Uniform(-1,1); e_indi = 0; attention and value weights
// ~ Uniform(-a, a) with a = sqrt(6 / (2 d)). Deterministic in `seed`.
ModelParams init_params(std::size_t num_users, std::size_t num_items, const Hyperparams& hyper,
                        std::uint64_t seed);

// Sinusoidal encoding of an interaction count. Even index j holds
// sin(z / 10000^(j/d)), the following odd index the matching cosine.
Vector popularity_encoding(double count, std::size_t dim);

// floor(log2(1 + z)), an optional compression of raw counts.
double log_bucket(std::uint64_t count);

// One encoding row per item.
Matrix popularity_matrix(const PopularityTable& table, std::size_t dim, bool log_bucketed = false);

// Mean of the member items' encodings.
Vector user_popularity(std::span<const ItemId> items, const Matrix& item_popularity);

// sign(x) with sign(0) = 0.
double signum(double x);

inline constexpr double kNormGuard = 1e-12;

// v / max(||v||_2, kNormGuard); the zero vector maps to zero.
Vector guarded_normalize(const Vector& v);

// psi + sign(psi) .* Norm(e_indi).
Vector perturb_with_bias(const Vector& item_vec, const Vector& user_bias);

}  // namespace cadrec
