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
#include <span>
#include <vector>

#include "cadrec/encoders.hpp"
#include "cadrec/hypergraph.hpp"
#include "cadrec/types.hpp"

namespace cadrec {

// ELU with alpha = 1.
double elu(double x);
double elu_derivative(double x);

// delta * Norm(Q K^T / sqrt(d)) with Q = E Wq, K = E Wk. Rows (or columns,
// or the whole matrix) whose norm vanishes stay zero.
Matrix attention_perturbation(const Matrix& input, const Matrix& query, const Matrix& key,
                              double delta, ScoreNorm norm = ScoreNorm::kRow);

// One head: (slice + perturbation) * ELU(E W1).
Matrix hgc_forward(const Matrix& slice, const Matrix& input, const Matrix& query,
                   const Matrix& key, const Matrix& value, double delta,
                   ScoreNorm norm = ScoreNorm::kRow);

// Elementwise sum of the head outputs.
Matrix multi_head(std::span<const Matrix> head_outputs);

struct HeadCache {
  Matrix q;
  Matrix k;
  Matrix scores;        // Q K^T / sqrt(d)
  Vector norms;         // per row, per column, or a single Frobenius norm
  Matrix mix;           // slice + perturbation
};

struct LayerCache {
  Matrix input;         // E^(l)
  Matrix v;             // E W1
  Matrix g;             // ELU(V)
  std::vector<HeadCache> heads;
};

// Activations of one user's encoder pass, kept for the backward pass.
struct EncoderTape {
  std::vector<ItemId> items;
  Vector bias_direction;     // Norm(e_indi), zero when disabled
  double bias_norm = 0.0;
  Matrix signs;              // sign(psi) per input row
  std::vector<LayerCache> layers;
  Matrix output;             // h, L x d
  Vector pooled;
  double pooled_norm = 0.0;
  Vector phi;
};

// phi(u) = Norm(AvgPool(h)), h = `layers` stacked multi-head convolutions of
// the bias-perturbed item embeddings over `slice`.
EncoderTape encode_user_tape(UserId user, std::span<const ItemId> items, const Matrix& slice,
                             const ModelParams& params);
Vector encode_user(UserId user, std::span<const ItemId> items, const Matrix& slice,
                   const ModelParams& params);
Vector encode_user(UserId user, std::span<const ItemId> items, const HyperGraph& graph,
                   const ModelParams& params);

// Gradients of a scalar loss with respect to the encoder inputs.
struct EncoderGrads {
  Matrix items;            // one row per tape item, d(loss)/d(psi(item))
  Vector user_bias;
  std::vector<Matrix> query;
  std::vector<Matrix> key;
  Matrix value;

  void reset(std::size_t rows, std::size_t dim, std::size_t heads);
};

// Accumulates into `grads` (items is overwritten, the rest added to) given
// d(loss)/d(phi).
void backprop_user(const EncoderTape& tape, const Vector& dphi, const ModelParams& params,
                   EncoderGrads& grads);

}  // namespace cadrec
