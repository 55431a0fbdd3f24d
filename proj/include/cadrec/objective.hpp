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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cadrec/encoders.hpp"
#include "cadrec/hgc_layer.hpp"
#include "cadrec/types.hpp"

namespace cadrec {

enum class ScoreMode { kTrain, kTest };

// Train: <[phi, b1 * pop_u], [psi, b1 * pop_i]>. Test: <phi, psi>.
double score(const Vector& phi, const Vector& item, const Vector& user_pop, const Vector& item_pop,
             double beta1, ScoreMode mode);

// c_{u,i}: lambda1 on IA items, lambda2 on FIA items, 0 elsewhere.
Vector weight_vector(std::span<const ItemId> ia, std::span<const ItemId> fia, double lambda1,
                     double lambda2, std::size_t num_items);

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x);

// Squared: beta2 * ||psi||^2 per IA occurrence, decay factor
// (1 - k * lr * beta2). Plain: beta2 * ||psi||, decay step
// k * lr * beta2 * psi / ||psi||.
enum class RegularizerForm { kSquared, kPlain };

struct TrainingExample {
  UserId user = 0;
  std::span<const ItemId> ia;
  std::span<const ItemId> fia;
  const Matrix* slice = nullptr;  // normalized adjacency block of `ia`
};

struct ObjectiveContext {
  // N x d popularity encodings; required when the popularity option is on.
  const Matrix* item_popularity = nullptr;
  RegularizerForm regularizer = RegularizerForm::kSquared;
};

// Dense batch gradient of the rating loss plus the per-item IA
// multiplicity that drives the decoupled decay.
struct BatchGradients {
  Matrix items;                            // N x d
  std::vector<std::uint8_t> item_touched;  // gradient row written
  std::vector<std::uint32_t> ia_count;     // IA memberships within the batch
  Matrix user_bias;                        // M x d
  std::vector<UserId> users;
  std::vector<Matrix> query;
  std::vector<Matrix> key;
  Matrix value;
  double rating_loss = 0.0;

  void reset(const ModelParams& params);
};

// Sum over examples of -sum_i c_i gamma_i log sigmoid(r_i), train-mode scores.
double rating_loss(std::span<const TrainingExample> batch, const ModelParams& params,
                   const ObjectiveContext& ctx);

// beta2 * sum over examples and their IA items of ||psi||^2 (or ||psi||).
double regularization_loss(std::span<const TrainingExample> batch, const ModelParams& params,
                           RegularizerForm form);

double total_loss(std::span<const TrainingExample> batch, const ModelParams& params,
                  const ObjectiveContext& ctx);

// Analytic gradient of rating_loss. Users are processed in fixed-size
// chunks (possibly in parallel) and reduced in order, so the result does not
// depend on the thread count.
void batch_gradients(std::span<const TrainingExample> batch, const ModelParams& params,
                     const ObjectiveContext& ctx, BatchGradients& out);

// Gradient descent step with decoupled decay on IA item embeddings of the
// batch users. Throws ModelError naming the tensor if a gradient is not finite.
void update_step(ModelParams& params, const BatchGradients& grads, double learning_rate,
                 double beta2, RegularizerForm form = RegularizerForm::kSquared);

enum class OptimizerKind { kSgd, kAdam };

// Applies update_step (SGD) or a lazily-updated Adam with the same decoupled decay.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, const ModelParams& params);
  void step(ModelParams& params, const BatchGradients& grads, double learning_rate, double beta2,
            RegularizerForm form);

 private:
  struct Moments {
    Matrix first;
    Matrix second;
    std::vector<std::uint64_t> steps;  // per row, for bias correction
  };
  void adam_rows(Matrix& param, const Matrix& grad, Moments& m, std::span<const std::size_t> rows,
                 double learning_rate);

  OptimizerKind kind_;
  Moments items_, user_bias_, value_;
  std::vector<Moments> query_, key_;
};

// Max over coordinates of |g_a - g_n| / max(1e-8, |g_a| + |g_n|) with central
// differences of width 2*step. `x` is restored on return.
double grad_check(const std::function<double()>& loss, Matrix& x, const Matrix& analytic,
                  double step = 1e-5);

struct GradCheckReport {
  struct Entry {
    std::string tensor;
    double max_rel_error = 0.0;
  };
  std::vector<Entry> entries;
  double worst() const;
};

// Checks every parameter tensor of the rating loss.
GradCheckReport check_gradients(std::span<const TrainingExample> batch, ModelParams& params,
                                const ObjectiveContext& ctx, double step = 1e-5);

}  // namespace cadrec
