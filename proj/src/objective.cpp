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

#include "cadrec/objective.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "cadrec/errors.hpp"

namespace cadrec {
namespace {

constexpr std::size_t kChunkUsers = 16;

struct ItemRowGrad {
  ItemId item;
  Vector grad;
};

// Everything one chunk of users contributes to the batch gradient.
struct ChunkGrads {
  std::vector<ItemRowGrad> item_rows;
  std::vector<std::pair<UserId, Vector>> bias_rows;
  std::vector<Matrix> query;
  std::vector<Matrix> key;
  Matrix value;
  double loss = 0.0;
};

double user_pop_dot(const TrainingExample& ex, const ModelParams& params,
                    const ObjectiveContext& ctx, Vector& user_pop) {
  if (!params.hyper.options.popularity) return 0.0;
  require(ctx.item_popularity != nullptr, "popularity option requires item encodings");
  user_pop = user_popularity(ex.ia, *ctx.item_popularity);
  return params.hyper.beta1 * params.hyper.beta1;
}

double train_score(const Vector& phi, ItemId item, const ModelParams& params,
                   const ObjectiveContext& ctx, const Vector& user_pop, double pop_scale) {
  double r = params.item_embeddings.row(item).dot(phi);
  if (params.hyper.options.popularity) {
    r += pop_scale * ctx.item_popularity->row(item).dot(user_pop);
  }
  return r;
}

void check_example(const TrainingExample& ex, const ModelParams& params) {
  require(ex.slice != nullptr, "training example without adjacency slice");
  require(!ex.ia.empty(), "training example with empty IA list");
  require(ex.user < params.num_users(), "training example user out of range");
}

// Loss of one user; when `chunk` is set its gradient is appended.
double user_loss(const TrainingExample& ex, const ModelParams& params, const ObjectiveContext& ctx,
                 ChunkGrads* chunk, EncoderGrads* scratch) {
  check_example(ex, params);
  const Hyperparams& hp = params.hyper;
  EncoderTape tape = encode_user_tape(ex.user, ex.ia, *ex.slice, params);
  Vector user_pop;
  const double pop_scale = user_pop_dot(ex, params, ctx, user_pop);

  const auto d = static_cast<Eigen::Index>(params.dim());
  Vector dphi = Vector::Zero(d);
  double loss = 0.0;
  std::vector<double> coeff_ia(ex.ia.size()), coeff_fia(ex.fia.size());
  const auto visit = [&](std::span<const ItemId> items, double weight, std::vector<double>& coeff) {
    for (std::size_t k = 0; k < items.size(); ++k) {
      const double r = train_score(tape.phi, items[k], params, ctx, user_pop, pop_scale);
      loss -= weight * log_sigmoid(r);
      // d/dr of -w log sigmoid(r) = -w sigmoid(-r)
      coeff[k] = -weight * std::exp(log_sigmoid(-r));
      dphi += coeff[k] * params.item_embeddings.row(items[k]).transpose();
    }
  };
  visit(ex.ia, hp.lambda1, coeff_ia);
  visit(ex.fia, hp.lambda2, coeff_fia);
  if (chunk == nullptr) return loss;

  scratch->items.setZero(static_cast<Eigen::Index>(ex.ia.size()), d);
  scratch->user_bias.setZero(d);
  backprop_user(tape, dphi, params, *scratch);
  for (std::size_t k = 0; k < ex.ia.size(); ++k) {
    chunk->item_rows.push_back(
        {ex.ia[k], scratch->items.row(static_cast<Eigen::Index>(k)).transpose() + coeff_ia[k] * tape.phi});
  }
  for (std::size_t k = 0; k < ex.fia.size(); ++k) {
    chunk->item_rows.push_back({ex.fia[k], coeff_fia[k] * tape.phi});
  }
  if (hp.options.individual_bias) chunk->bias_rows.emplace_back(ex.user, scratch->user_bias);
  chunk->loss += loss;
  return loss;
}

void check_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) throw ModelError(std::string("non-finite gradient in ") + name);
}

}  // namespace

double score(const Vector& phi, const Vector& item, const Vector& user_pop, const Vector& item_pop,
             double beta1, ScoreMode mode) {
  require(phi.size() == item.size(), "score: dimension mismatch");
  const double base = phi.dot(item);
  if (mode == ScoreMode::kTest) return base;
  require(user_pop.size() == item_pop.size(), "score: popularity dimension mismatch");
  return base + beta1 * beta1 * user_pop.dot(item_pop);
}

Vector weight_vector(std::span<const ItemId> ia, std::span<const ItemId> fia, double lambda1,
                     double lambda2, std::size_t num_items) {
  Vector c = Vector::Zero(static_cast<Eigen::Index>(num_items));
  for (ItemId i : ia) {
    require(i < num_items, "weight_vector: item out of range");
    c(i) = lambda1;
  }
  for (ItemId i : fia) {
    require(i < num_items, "weight_vector: item out of range");
    require(std::find(ia.begin(), ia.end(), i) == ia.end(), "weight_vector: IA and FIA overlap");
    c(i) = lambda2;
  }
  return c;
}

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

void BatchGradients::reset(const ModelParams& params) {
  const auto d = static_cast<Eigen::Index>(params.dim());
  if (items.rows() != static_cast<Eigen::Index>(params.num_items()) || items.cols() != d) {
    items = Matrix::Zero(static_cast<Eigen::Index>(params.num_items()), d);
  } else {
    for (std::size_t i = 0; i < item_touched.size(); ++i) {
      if (item_touched[i]) items.row(static_cast<Eigen::Index>(i)).setZero();
    }
  }
  item_touched.assign(params.num_items(), 0);
  ia_count.assign(params.num_items(), 0);
  if (user_bias.rows() != static_cast<Eigen::Index>(params.num_users()) || user_bias.cols() != d) {
    user_bias = Matrix::Zero(static_cast<Eigen::Index>(params.num_users()), d);
  } else {
    for (UserId u : users) user_bias.row(u).setZero();
  }
  users.clear();
  query.assign(params.heads(), Matrix::Zero(d, d));
  key.assign(params.heads(), Matrix::Zero(d, d));
  value = Matrix::Zero(d, d);
  rating_loss = 0.0;
}

double rating_loss(std::span<const TrainingExample> batch, const ModelParams& params,
                   const ObjectiveContext& ctx) {
  double total = 0.0;
  for (const auto& ex : batch) total += user_loss(ex, params, ctx, nullptr, nullptr);
  return total;
}

double regularization_loss(std::span<const TrainingExample> batch, const ModelParams& params,
                           RegularizerForm form) {
  double total = 0.0;
  for (const auto& ex : batch) {
    for (ItemId i : ex.ia) {
      const double sq = params.item_embeddings.row(i).squaredNorm();
      total += form == RegularizerForm::kSquared ? sq : std::sqrt(sq);
    }
  }
  return params.hyper.beta2 * total;
}

double total_loss(std::span<const TrainingExample> batch, const ModelParams& params,
                  const ObjectiveContext& ctx) {
  return rating_loss(batch, params, ctx) + regularization_loss(batch, params, ctx.regularizer);
}

void batch_gradients(std::span<const TrainingExample> batch, const ModelParams& params,
                     const ObjectiveContext& ctx, BatchGradients& out) {
  out.reset(params);
  const std::size_t num_chunks = (batch.size() + kChunkUsers - 1) / kChunkUsers;
  std::vector<ChunkGrads> chunks(num_chunks);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t c = 0; c < num_chunks; ++c) {
    ChunkGrads& chunk = chunks[c];
    EncoderGrads scratch;
    scratch.reset(0, params.dim(), params.heads());
    const std::size_t end = std::min(batch.size(), (c + 1) * kChunkUsers);
    for (std::size_t b = c * kChunkUsers; b < end; ++b) {
      user_loss(batch[b], params, ctx, &chunk, &scratch);
    }
    chunk.query = std::move(scratch.query);
    chunk.key = std::move(scratch.key);
    chunk.value = std::move(scratch.value);
  }

  for (auto& chunk : chunks) {
    for (const auto& row : chunk.item_rows) {
      out.items.row(row.item) += row.grad.transpose();
      out.item_touched[row.item] = 1;
    }
    for (const auto& [user, grad] : chunk.bias_rows) out.user_bias.row(user) += grad.transpose();
    for (std::size_t h = 0; h < params.heads(); ++h) {
      out.query[h] += chunk.query[h];
      out.key[h] += chunk.key[h];
    }
    out.value += chunk.value;
    out.rating_loss += chunk.loss;
  }
  for (const auto& ex : batch) {
    out.users.push_back(ex.user);
    for (ItemId i : ex.ia) ++out.ia_count[i];
  }
}

namespace {

void validate_gradients(const ModelParams& params, const BatchGradients& grads) {
  check_finite(grads.items, "item_embeddings");
  check_finite(grads.user_bias, "user_bias");
  for (std::size_t h = 0; h < params.heads(); ++h) {
    check_finite(grads.query[h], "query");
    check_finite(grads.key[h], "key");
  }
  check_finite(grads.value, "value");
}

// Decoupled decay of IA rows: squared form scales by max(0, 1 - k lr beta2),
// plain form shrinks the norm by k lr beta2 (not past zero).
void apply_decay(Matrix& items, std::span<const std::uint32_t> ia_count, double learning_rate,
                 double beta2, RegularizerForm form) {
  if (beta2 == 0.0) return;
  for (std::size_t i = 0; i < ia_count.size(); ++i) {
    if (ia_count[i] == 0) continue;
    auto row = items.row(static_cast<Eigen::Index>(i));
    const double amount = static_cast<double>(ia_count[i]) * learning_rate * beta2;
    if (form == RegularizerForm::kSquared) {
      row *= std::max(0.0, 1.0 - amount);
    } else {
      const double norm = row.norm();
      if (norm > kNormGuard) row *= std::max(0.0, norm - amount) / norm;
    }
  }
}

}  // namespace

void update_step(ModelParams& params, const BatchGradients& grads, double learning_rate,
                 double beta2, RegularizerForm form) {
  validate_gradients(params, grads);
  apply_decay(params.item_embeddings, grads.ia_count, learning_rate, beta2, form);
  for (std::size_t i = 0; i < grads.item_touched.size(); ++i) {
    if (!grads.item_touched[i]) continue;
    const auto r = static_cast<Eigen::Index>(i);
    params.item_embeddings.row(r) -= learning_rate * grads.items.row(r);
  }
  if (params.hyper.options.individual_bias) {
    for (UserId u : grads.users) params.user_bias.row(u) -= learning_rate * grads.user_bias.row(u);
  }
  if (params.hyper.options.attention) {
    for (std::size_t h = 0; h < params.heads(); ++h) {
      params.query[h] -= learning_rate * grads.query[h];
      params.key[h] -= learning_rate * grads.key[h];
    }
  }
  params.value -= learning_rate * grads.value;
}

Optimizer::Optimizer(OptimizerKind kind, const ModelParams& params) : kind_(kind) {
  if (kind_ != OptimizerKind::kAdam) return;
  const auto init = [](Moments& m, const Matrix& like) {
    m.first = Matrix::Zero(like.rows(), like.cols());
    m.second = Matrix::Zero(like.rows(), like.cols());
    m.steps.assign(static_cast<std::size_t>(like.rows()), 0);
  };
  init(items_, params.item_embeddings);
  init(user_bias_, params.user_bias);
  init(value_, params.value);
  query_.resize(params.heads());
  key_.resize(params.heads());
  for (std::size_t h = 0; h < params.heads(); ++h) {
    init(query_[h], params.query[h]);
    init(key_[h], params.key[h]);
  }
}

void Optimizer::adam_rows(Matrix& param, const Matrix& grad, Moments& m,
                          std::span<const std::size_t> rows, double learning_rate) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  for (std::size_t r : rows) {
    const auto i = static_cast<Eigen::Index>(r);
    const std::uint64_t t = ++m.steps[r];
    m.first.row(i) = kBeta1 * m.first.row(i) + (1.0 - kBeta1) * grad.row(i);
    m.second.row(i) = kBeta2 * m.second.row(i) + (1.0 - kBeta2) * grad.row(i).cwiseAbs2();
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    param.row(i).array() -= learning_rate * (m.first.row(i).array() / c1) /
                            ((m.second.row(i).array() / c2).sqrt() + kEps);
  }
}

void Optimizer::step(ModelParams& params, const BatchGradients& grads, double learning_rate,
                     double beta2, RegularizerForm form) {
  if (kind_ == OptimizerKind::kSgd) {
    update_step(params, grads, learning_rate, beta2, form);
    return;
  }
  validate_gradients(params, grads);
  apply_decay(params.item_embeddings, grads.ia_count, learning_rate, beta2, form);

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < grads.item_touched.size(); ++i) {
    if (grads.item_touched[i]) rows.push_back(i);
  }
  adam_rows(params.item_embeddings, grads.items, items_, rows, learning_rate);
  if (params.hyper.options.individual_bias) {
    rows.assign(grads.users.begin(), grads.users.end());
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    adam_rows(params.user_bias, grads.user_bias, user_bias_, rows, learning_rate);
  }
  std::vector<std::size_t> all(static_cast<std::size_t>(params.dim()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (params.hyper.options.attention) {
    for (std::size_t h = 0; h < params.heads(); ++h) {
      adam_rows(params.query[h], grads.query[h], query_[h], all, learning_rate);
      adam_rows(params.key[h], grads.key[h], key_[h], all, learning_rate);
    }
  }
  adam_rows(params.value, grads.value, value_, all, learning_rate);
}

double grad_check(const std::function<double()>& loss, Matrix& x, const Matrix& analytic,
                  double step) {
  require(x.rows() == analytic.rows() && x.cols() == analytic.cols(),
          "grad_check: analytic gradient shape mismatch");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double original = x.data()[i];
    x.data()[i] = original + step;
    const double plus = loss();
    x.data()[i] = original - step;
    const double minus = loss();
    x.data()[i] = original;
    const double numeric = (plus - minus) / (2.0 * step);
    const double a = analytic.data()[i];
    const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_error);
  return w;
}

GradCheckReport check_gradients(std::span<const TrainingExample> batch, ModelParams& params,
                                const ObjectiveContext& ctx, double step) {
  BatchGradients grads;
  batch_gradients(batch, params, ctx, grads);
  const auto loss = [&] { return rating_loss(batch, params, ctx); };

  GradCheckReport report;
  report.entries.push_back({"item_embeddings", grad_check(loss, params.item_embeddings, grads.items, step)});
  if (params.hyper.options.individual_bias) {
    report.entries.push_back({"user_bias", grad_check(loss, params.user_bias, grads.user_bias, step)});
  }
  if (params.hyper.options.attention) {
    for (std::size_t h = 0; h < params.heads(); ++h) {
      report.entries.push_back(
          {"query." + std::to_string(h), grad_check(loss, params.query[h], grads.query[h], step)});
      report.entries.push_back(
          {"key." + std::to_string(h), grad_check(loss, params.key[h], grads.key[h], step)});
    }
  }
  report.entries.push_back({"value", grad_check(loss, params.value, grads.value, step)});
  return report;
}

}  // namespace cadrec
