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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cadrec/errors.hpp"
#include "cadrec/hgc_layer.hpp"
#include "cadrec/hypergraph.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace cadrec;
using cadrec::testing::random_matrix;

namespace {

Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix a = random_matrix(rng, n, n, 0.0, 1.0);
  return 0.5 * (a + a.transpose());
}

Matrix permutation_matrix(const std::vector<int>& perm) {
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(perm.size()), static_cast<Eigen::Index>(perm.size()));
  for (std::size_t i = 0; i < perm.size(); ++i) p(static_cast<Eigen::Index>(i), perm[i]) = 1.0;
  return p;
}

}  // namespace

TEST_CASE("perturbation: zero delta, singleton and unit rows") {
  std::mt19937_64 rng(1);
  const Matrix e = random_matrix(rng, 3, 4);
  const Matrix wq = random_matrix(rng, 4, 4), wk = random_matrix(rng, 4, 4);
  CHECK(attention_perturbation(e, wq, wk, 0.0).isZero());

  const Matrix single = random_matrix(rng, 1, 4);
  CHECK(attention_perturbation(single, wq, wk, 0.3)(0, 0) == doctest::Approx(0.3));
  CHECK(attention_perturbation(Matrix::Zero(1, 4), wq, wk, 0.3)(0, 0) == 0.0);

  const Matrix p = attention_perturbation(e, wq, wk, 0.25);
  for (Eigen::Index r = 0; r < 3; ++r) CHECK(p.row(r).norm() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("perturbation: alternative normalizations") {
  std::mt19937_64 rng(2);
  const Matrix e = random_matrix(rng, 4, 4);
  const Matrix wq = random_matrix(rng, 4, 4), wk = random_matrix(rng, 4, 4);
  CHECK(attention_perturbation(e, wq, wk, 0.5, ScoreNorm::kFrobenius).norm() ==
        doctest::Approx(0.5).epsilon(1e-12));
  const Matrix c = attention_perturbation(e, wq, wk, 0.5, ScoreNorm::kColumn);
  for (Eigen::Index j = 0; j < 4; ++j) CHECK(c.col(j).norm() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("forward: reductions") {
  std::mt19937_64 rng(3);
  const Matrix slice = random_symmetric(rng, 3);
  const Matrix e = random_matrix(rng, 3, 4);
  const Matrix wq = random_matrix(rng, 4, 4), wk = random_matrix(rng, 4, 4), w1 = random_matrix(rng, 4, 4);
  const Matrix g = (e * w1).unaryExpr([](double x) { return elu(x); });
  CHECK((hgc_forward(slice, e, wq, wk, w1, 0.0) - slice * g).cwiseAbs().maxCoeff() == 0.0);

  const Matrix eye = Matrix::Identity(3, 3);
  const Matrix w_eye = Matrix::Identity(4, 4);
  CHECK(hgc_forward(eye, e, wq, wk, w_eye, 0.0) == e.unaryExpr([](double x) { return elu(x); }));

  CHECK_THROWS_AS(hgc_forward(Matrix::Identity(2, 2), e, wq, wk, w1, 0.1), ContractViolation);
}

TEST_CASE("forward: two-item worked instance against the dense oracle") {
  Matrix slice(2, 2), e(2, 2), wq(2, 2), wk(2, 2), w1(2, 2);
  slice << 0.5, 0.5, 0.5, 0.5;
  e << 0.3, -0.7, 1.2, 0.4;
  wq << 0.1, 0.2, -0.3, 0.4;
  wk << -0.5, 0.6, 0.7, 0.8;
  w1 << 0.9, -1.0, 0.25, 0.5;
  const auto expected = oracle::hgc_forward(oracle::from_eigen(slice), oracle::from_eigen(e),
                                            oracle::from_eigen(wq), oracle::from_eigen(wk),
                                            oracle::from_eigen(w1), 0.1);
  CHECK(oracle::max_abs_diff(expected, hgc_forward(slice, e, wq, wk, w1, 0.1)) < 1e-12);
}

TEST_CASE("multi-head sum") {
  std::mt19937_64 rng(4);
  const Matrix a = random_matrix(rng, 3, 2), b = random_matrix(rng, 3, 2), c = random_matrix(rng, 3, 2);
  const Matrix one[] = {a};
  CHECK(multi_head(one) == a);
  const Matrix twins[] = {a, a};
  CHECK(multi_head(twins) == 2.0 * a);
  const Matrix three[] = {a, b, c};
  CHECK((multi_head(three) - (a + b + c)).cwiseAbs().maxCoeff() < 1e-15);
  const Matrix bad[] = {a, Matrix::Zero(2, 2)};
  CHECK_THROWS_AS(multi_head(bad), ContractViolation);
}

TEST_CASE("encode: single item hand chain") {
  Hyperparams h;
  h.dim = 2;
  h.delta = 0.0;
  ModelParams p = init_params(1, 1, h, 0);
  p.item_embeddings << 3, 4;
  p.value = Matrix::Identity(2, 2);
  const ItemId items[] = {0};
  const Vector phi = encode_user(0, items, Matrix::Identity(1, 1), p);
  CHECK(phi(0) == doctest::Approx(0.6));
  CHECK(phi(1) == doctest::Approx(0.8));
  CHECK_THROWS_AS(encode_user(0, {}, Matrix(0, 0), p), ContractViolation);
}

TEST_CASE("encode: unit norm and permutation invariance") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Hyperparams h;
    h.dim = 4;
    h.heads = 1 + trial % 3;
    h.layers = 1 + trial % 2;
    h.delta = 0.3;
    ModelParams p = init_params(2, 10, h, static_cast<std::uint64_t>(trial));
    p.user_bias = random_matrix(rng, 2, 4);
    std::vector<std::vector<ItemId>> edges = {{0, 1, 2, 3}, {2, 4, 5, 6}, {6, 7, 8, 9, 0}};
    const auto g = HyperGraph::from_hyperedges(10, edges);
    std::vector<ItemId> items = {1, 2, 6, 9, 4};
    const Vector phi = encode_user(1, items, g, p);
    CHECK(phi.norm() == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<int> perm(items.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<ItemId> shuffled;
    for (int k : perm) shuffled.push_back(items[static_cast<std::size_t>(k)]);
    CHECK((encode_user(1, shuffled, g, p) - phi).cwiseAbs().maxCoeff() < 1e-12);

    // Row outputs permute with the inputs.
    const auto tape = encode_user_tape(1, items, g.slice(items), p);
    const auto tape2 = encode_user_tape(1, shuffled, g.slice(shuffled), p);
    const Matrix pm = permutation_matrix(perm);
    CHECK((pm * tape.output - tape2.output).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("encode: finite for large inputs") {
  std::mt19937_64 rng(6);
  Hyperparams h;
  h.dim = 4;
  h.heads = 2;
  h.delta = 0.5;
  ModelParams p = init_params(1, 6, h, 1);
  p.item_embeddings = random_matrix(rng, 6, 4, -1000.0, 1000.0);
  p.user_bias = random_matrix(rng, 1, 4, -1000.0, 1000.0);
  const auto g = HyperGraph::from_hyperedges(6, {{0, 1, 2, 3, 4, 5}});
  const std::vector<ItemId> items = {0, 1, 2, 3, 4, 5};
  CHECK(encode_user(0, items, g, p).allFinite());
}

TEST_CASE("encode: zero delta equals the attention-free path") {
  std::mt19937_64 rng(7);
  Hyperparams h;
  h.dim = 4;
  h.heads = 2;
  h.delta = 0.0;
  ModelParams with = init_params(1, 6, h, 9);
  with.user_bias = random_matrix(rng, 1, 4);
  ModelParams without = with;
  without.hyper.options.attention = false;
  const auto g = HyperGraph::from_hyperedges(6, {{0, 1, 2, 3}, {3, 4, 5}});
  const std::vector<ItemId> items = {0, 3, 5};
  CHECK((encode_user(0, items, g, with) - encode_user(0, items, g, without)).cwiseAbs().maxCoeff() <= 1e-12);
}
