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

#include "cadrec/hgc_layer.hpp"

#include <algorithm>
#include <cmath>

#include "cadrec/errors.hpp"

namespace cadrec {
namespace {

Matrix elu_matrix(const Matrix& m) { return m.unaryExpr([](double x) { return elu(x); }); }

// Fills head.q/k/scores/norms and returns delta * Norm(scores).
Matrix perturbation_for_head(const Matrix& input, const Matrix& query, const Matrix& key,
                             double delta, ScoreNorm norm, HeadCache& head) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(input.cols()));
  head.q.noalias() = input * query;
  head.k.noalias() = input * key;
  head.scores.noalias() = (head.q * head.k.transpose()) * scale;

  Matrix out = Matrix::Zero(head.scores.rows(), head.scores.cols());
  switch (norm) {
    case ScoreNorm::kRow:
      head.norms = head.scores.rowwise().norm();
      for (Eigen::Index p = 0; p < out.rows(); ++p) {
        if (head.norms(p) > kNormGuard) out.row(p) = head.scores.row(p) * (delta / head.norms(p));
      }
      break;
    case ScoreNorm::kColumn:
      head.norms = head.scores.colwise().norm().transpose();
      for (Eigen::Index q = 0; q < out.cols(); ++q) {
        if (head.norms(q) > kNormGuard) out.col(q) = head.scores.col(q) * (delta / head.norms(q));
      }
      break;
    case ScoreNorm::kFrobenius:
      head.norms = Vector::Constant(1, head.scores.norm());
      if (head.norms(0) > kNormGuard) out = head.scores * (delta / head.norms(0));
      break;
  }
  return out;
}

// d(loss)/d(scores) given d(loss)/d(perturbation) for v -> delta * v / ||v||.
Matrix perturbation_backward(const HeadCache& head, const Matrix& dperturb, double delta,
                             ScoreNorm norm) {
  Matrix ds = Matrix::Zero(dperturb.rows(), dperturb.cols());
  switch (norm) {
    case ScoreNorm::kRow:
      for (Eigen::Index p = 0; p < ds.rows(); ++p) {
        const double r = head.norms(p);
        if (r <= kNormGuard) continue;
        const auto u = head.scores.row(p) / r;
        ds.row(p) = (dperturb.row(p) - u * u.dot(dperturb.row(p))) * (delta / r);
      }
      break;
    case ScoreNorm::kColumn:
      for (Eigen::Index q = 0; q < ds.cols(); ++q) {
        const double r = head.norms(q);
        if (r <= kNormGuard) continue;
        const auto u = head.scores.col(q) / r;
        ds.col(q) = (dperturb.col(q) - u * u.dot(dperturb.col(q))) * (delta / r);
      }
      break;
    case ScoreNorm::kFrobenius: {
      const double r = head.norms(0);
      if (r <= kNormGuard) break;
      const Matrix u = head.scores / r;
      ds = (dperturb - u * (u.cwiseProduct(dperturb).sum())) * (delta / r);
      break;
    }
  }
  return ds;
}

}  // namespace

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_derivative(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

Matrix attention_perturbation(const Matrix& input, const Matrix& query, const Matrix& key,
                              double delta, ScoreNorm norm) {
  require(input.cols() == query.rows() && input.cols() == key.rows(),
          "attention_perturbation: dimension mismatch");
  HeadCache head;
  return perturbation_for_head(input, query, key, delta, norm, head);
}

Matrix hgc_forward(const Matrix& slice, const Matrix& input, const Matrix& query,
                   const Matrix& key, const Matrix& value, double delta, ScoreNorm norm) {
  require(slice.rows() == slice.cols() && slice.rows() == input.rows(),
          "hgc_forward: slice must be L x L with L = input rows");
  require(value.rows() == input.cols(), "hgc_forward: value projection dimension mismatch");
  Matrix mix = slice;
  mix += attention_perturbation(input, query, key, delta, norm);
  const Matrix g = elu_matrix(input * value);
  return mix * g;
}

Matrix multi_head(std::span<const Matrix> head_outputs) {
  require(!head_outputs.empty(), "multi_head: no heads");
  Matrix sum = head_outputs.front();
  for (std::size_t h = 1; h < head_outputs.size(); ++h) {
    require(head_outputs[h].rows() == sum.rows() && head_outputs[h].cols() == sum.cols(),
            "multi_head: head shapes differ");
    sum += head_outputs[h];
  }
  return sum;
}

EncoderTape encode_user_tape(UserId user, std::span<const ItemId> items, const Matrix& slice,
                             const ModelParams& params) {
  require(!items.empty(), "encode_user: empty item list");
  const auto n = static_cast<Eigen::Index>(items.size());
  require(slice.rows() == n && slice.cols() == n, "encode_user: slice does not match item count");
  require(user < params.num_users(), "encode_user: user id out of range");
  const auto d = static_cast<Eigen::Index>(params.dim());
  const Hyperparams& hp = params.hyper;

  EncoderTape tape;
  tape.items.assign(items.begin(), items.end());

  Matrix x(n, d);
  for (Eigen::Index p = 0; p < n; ++p) x.row(p) = params.item_embeddings.row(items[p]);
  if (hp.options.individual_bias) {
    const Vector bias = params.user_bias.row(user).transpose();
    tape.bias_norm = bias.norm();
    tape.bias_direction = bias / std::max(tape.bias_norm, kNormGuard);
    tape.signs = x.unaryExpr([](double v) { return signum(v); });
    x += tape.signs.cwiseProduct(tape.bias_direction.transpose().replicate(n, 1));
  }

  tape.layers.resize(hp.layers);
  for (std::size_t l = 0; l < hp.layers; ++l) {
    LayerCache& layer = tape.layers[l];
    layer.input = std::move(x);
    layer.v.noalias() = layer.input * params.value;
    layer.g = elu_matrix(layer.v);
    layer.heads.resize(params.heads());
    Matrix y = Matrix::Zero(n, d);
    for (std::size_t h = 0; h < params.heads(); ++h) {
      HeadCache& head = layer.heads[h];
      head.mix = slice;
      if (hp.options.attention) {
        head.mix += perturbation_for_head(layer.input, params.query[h], params.key[h], hp.delta,
                                          hp.score_norm, head);
      }
      y.noalias() += head.mix * layer.g;
    }
    x = std::move(y);
  }
  tape.output = std::move(x);
  tape.pooled = tape.output.colwise().mean().transpose();
  tape.pooled_norm = tape.pooled.norm();
  tape.phi = tape.pooled_norm > kNormGuard ? Vector(tape.pooled / tape.pooled_norm)
                                           : Vector::Zero(d);
  return tape;
}

Vector encode_user(UserId user, std::span<const ItemId> items, const Matrix& slice,
                   const ModelParams& params) {
  return encode_user_tape(user, items, slice, params).phi;
}

Vector encode_user(UserId user, std::span<const ItemId> items, const HyperGraph& graph,
                   const ModelParams& params) {
  return encode_user(user, items, graph.slice(items), params);
}

void EncoderGrads::reset(std::size_t rows, std::size_t dim, std::size_t heads) {
  const auto d = static_cast<Eigen::Index>(dim);
  items = Matrix::Zero(static_cast<Eigen::Index>(rows), d);
  user_bias = Vector::Zero(d);
  query.assign(heads, Matrix::Zero(d, d));
  key.assign(heads, Matrix::Zero(d, d));
  value = Matrix::Zero(d, d);
}

void backprop_user(const EncoderTape& tape, const Vector& dphi, const ModelParams& params,
                   EncoderGrads& grads) {
  const Hyperparams& hp = params.hyper;
  const auto n = static_cast<Eigen::Index>(tape.items.size());
  const auto d = static_cast<Eigen::Index>(params.dim());
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  if (tape.pooled_norm <= kNormGuard) {
    grads.items = Matrix::Zero(n, d);
    return;
  }
  // phi = p / ||p||
  const Vector dpooled = (dphi - tape.phi * tape.phi.dot(dphi)) / tape.pooled_norm;
  Matrix dx = (dpooled.transpose() / static_cast<double>(n)).replicate(n, 1);

  for (std::size_t l = hp.layers; l-- > 0;) {
    const LayerCache& layer = tape.layers[l];
    Matrix dg = Matrix::Zero(n, d);
    for (const HeadCache& head : layer.heads) dg.noalias() += head.mix.transpose() * dx;

    Matrix dinput = Matrix::Zero(n, d);
    if (hp.options.attention) {
      const Matrix dperturb = dx * layer.g.transpose();
      for (std::size_t h = 0; h < layer.heads.size(); ++h) {
        const HeadCache& head = layer.heads[h];
        const Matrix ds = perturbation_backward(head, dperturb, hp.delta, hp.score_norm);
        const Matrix dq = (ds * head.k) * inv_sqrt_d;
        const Matrix dk = (ds.transpose() * head.q) * inv_sqrt_d;
        grads.query[h].noalias() += layer.input.transpose() * dq;
        grads.key[h].noalias() += layer.input.transpose() * dk;
        dinput.noalias() += dq * params.query[h].transpose();
        dinput.noalias() += dk * params.key[h].transpose();
      }
    }
    const Matrix dv = dg.cwiseProduct(layer.v.unaryExpr([](double v) { return elu_derivative(v); }));
    grads.value.noalias() += layer.input.transpose() * dv;
    dinput.noalias() += dv * params.value.transpose();
    dx = std::move(dinput);
  }

  // Input rows: psi + sign(psi) * n, sign has zero derivative almost everywhere.
  grads.items = dx;
  if (hp.options.individual_bias) {
    const Vector ddir = tape.signs.cwiseProduct(dx).colwise().sum().transpose();
    if (tape.bias_norm > kNormGuard) {
      grads.user_bias +=
          (ddir - tape.bias_direction * tape.bias_direction.dot(ddir)) / tape.bias_norm;
    } else {
      // Below the guard the direction is e / guard, which is linear in e.
      grads.user_bias += ddir / kNormGuard;
    }
  }
}

}  // namespace cadrec
