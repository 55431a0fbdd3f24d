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

#include "cadrec/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cadrec/errors.hpp"

namespace cadrec {

void Hyperparams::validate() const {
  if (dim == 0 || dim % 2 != 0) throw ConfigError("dim must be a positive even number");
  if (heads == 0) throw ConfigError("heads must be positive");
  if (layers == 0) throw ConfigError("layers must be positive");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be finite and >= 0");
  if (!std::isfinite(beta1)) throw ConfigError("beta1 must be finite");
  if (!(beta2 >= 0.0) || !std::isfinite(beta2)) throw ConfigError("beta2 must be finite and >= 0");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("lambda1/lambda2 must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and > 0");
  }
}

bool ModelParams::all_finite() const {
  if (!item_embeddings.allFinite() || !user_bias.allFinite() || !value.allFinite()) return false;
  for (const auto& m : query) {
    if (!m.allFinite()) return false;
  }
  for (const auto& m : key) {
    if (!m.allFinite()) return false;
  }
  return true;
}

namespace {

void fill_uniform(Matrix& m, double bound, std::mt19937_64& rng, bool open_interval) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double v = dist(rng);
    while (open_interval && v == -bound) v = dist(rng);
    m.data()[i] = v;
  }
}

}  // namespace

ModelParams init_params(std::size_t num_users, std::size_t num_items, const Hyperparams& hyper,
                        std::uint64_t seed) {
  hyper.validate();
  if (num_users == 0 || num_items == 0) throw ConfigError("model needs at least one user and item");
  const auto d = static_cast<Eigen::Index>(hyper.dim);

  ModelParams p;
  p.hyper = hyper;
  std::mt19937_64 rng(seed);
  p.item_embeddings.resize(static_cast<Eigen::Index>(num_items), d);
  fill_uniform(p.item_embeddings, 1.0, rng, true);
  p.user_bias = Matrix::Zero(static_cast<Eigen::Index>(num_users), d);

  const double bound = std::sqrt(6.0 / (2.0 * static_cast<double>(hyper.dim)));
  for (std::size_t h = 0; h < hyper.heads; ++h) {
    Matrix q(d, d), k(d, d);
    fill_uniform(q, bound, rng, false);
    fill_uniform(k, bound, rng, false);
    p.query.push_back(std::move(q));
    p.key.push_back(std::move(k));
  }
  p.value.resize(d, d);
  fill_uniform(p.value, bound, rng, false);
  return p;
}

Vector popularity_encoding(double count, std::size_t dim) {
  require(count >= 0.0, "popularity_encoding: negative count");
  require(dim % 2 == 0, "popularity_encoding: odd dimension");
  Vector out(static_cast<Eigen::Index>(dim));
  for (std::size_t j = 0; j < dim; j += 2) {
    const double angle =
        count / std::pow(10000.0, static_cast<double>(j) / static_cast<double>(dim));
    out(static_cast<Eigen::Index>(j)) = std::sin(angle);
    out(static_cast<Eigen::Index>(j + 1)) = std::cos(angle);
  }
  return out;
}

double log_bucket(std::uint64_t count) {
  return std::floor(std::log2(1.0 + static_cast<double>(count)));
}

Matrix popularity_matrix(const PopularityTable& table, std::size_t dim, bool log_bucketed) {
  Matrix out(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double z = log_bucketed ? log_bucket(table.counts[i])
                                  : static_cast<double>(table.counts[i]);
    out.row(static_cast<Eigen::Index>(i)) = popularity_encoding(z, dim).transpose();
  }
  return out;
}

Vector user_popularity(std::span<const ItemId> items, const Matrix& item_popularity) {
  require(!items.empty(), "user_popularity: empty item list");
  Vector sum = Vector::Zero(item_popularity.cols());
  for (ItemId item : items) sum += item_popularity.row(item).transpose();
  return sum / static_cast<double>(items.size());
}

double signum(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

Vector guarded_normalize(const Vector& v) { return v / std::max(v.norm(), kNormGuard); }

Vector perturb_with_bias(const Vector& item_vec, const Vector& user_bias) {
  require(item_vec.size() == user_bias.size(), "perturb_with_bias: dimension mismatch");
  const Vector direction = guarded_normalize(user_bias);
  Vector out = item_vec;
  for (Eigen::Index j = 0; j < out.size(); ++j) out(j) += signum(item_vec(j)) * direction(j);
  return out;
}

}  // namespace cadrec
