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
#include <random>

#include <omp.h>

#include "cadrec/errors.hpp"
#include "cadrec/hgc_layer.hpp"
#include "cadrec/objective.hpp"
#include "support/fixtures.hpp"

using namespace cadrec;
using cadrec::testing::TinyInstance;

namespace {

Hyperparams tiny_hyper() {
  Hyperparams h;
  h.dim = 6;
  h.heads = 2;
  h.delta = 0.1;
  h.beta1 = 0.7;
  h.lambda1 = 1.3;
  h.lambda2 = 2.1;
  return h;
}

}  // namespace

TEST_CASE("score branches") {
  Vector phi(2), psi(2), up(2), ip(2);
  phi << 1, 0;
  psi << 0.5, 0.5;
  up << 2, 0;
  ip << 2, 1;  // pop dot = 4
  CHECK(score(phi, psi, up, ip, 0.0, ScoreMode::kTest) == 0.5);
  CHECK(score(phi, psi, up, ip, 0.0, ScoreMode::kTrain) == 0.5);
  CHECK(score(phi, psi, up, ip, 0.5, ScoreMode::kTrain) == doctest::Approx(1.5));
  CHECK(score(phi, psi, up, ip, 0.5, ScoreMode::kTest) == 0.5);
}

TEST_CASE("weight vector") {
  const ItemId ia[] = {0}, fia[] = {2};
  const Vector w = weight_vector(ia, fia, 2.3, 7.0, 4);
  CHECK(w(0) == 2.3);
  CHECK(w(1) == 0.0);
  CHECK(w(2) == 7.0);
  CHECK(w(3) == 0.0);
  const Vector ones = weight_vector(ia, fia, 1.0, 1.0, 4);
  CHECK(ones.sum() == 2.0);
  const Vector only_ia = weight_vector(ia, {}, 1.0, 1.0, 4);
  CHECK(only_ia.sum() == 1.0);
  const ItemId overlap[] = {0};
  CHECK_THROWS_AS(weight_vector(ia, overlap, 1.0, 1.0, 4), ContractViolation);
}

TEST_CASE("log sigmoid is stable") {
  CHECK(log_sigmoid(0.0) == doctest::Approx(-std::log(2.0)));
  CHECK(log_sigmoid(800.0) == 0.0);
  CHECK(log_sigmoid(-800.0) == doctest::Approx(-800.0));
  CHECK(std::isfinite(log_sigmoid(-1e308)));
}

TEST_CASE("loss values") {
  Hyperparams h;
  h.dim = 2;
  h.beta1 = 0.0;
  h.beta2 = 0.0;
  h.lambda1 = 1.0;
  h.options.popularity = false;
  h.options.individual_bias = false;
  h.delta = 0.0;
  ModelParams p = init_params(1, 2, h, 0);
  // One IA item whose convolved encoding is orthogonal to the scored item.
  p.item_embeddings << 1, 0, 0, 1;
  p.value = Matrix::Identity(2, 2);
  const Matrix slice = Matrix::Identity(1, 1);
  const ItemId ia[] = {0};
  const ItemId none[] = {1};
  ObjectiveContext ctx;
  {
    // phi = (1,0); the only labelled item is 1 through FIA with score 0.
    const TrainingExample ex[] = {{0, ia, none, &slice}};
    p.hyper.lambda1 = 0.0;
    p.hyper.lambda2 = 1.0;
    CHECK(total_loss(ex, p, ctx) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  {
    // Saturated positive score drives the loss to zero.
    p.item_embeddings << 1e3, 0, 0, 1;
    p.hyper.lambda1 = 1.0;
    const TrainingExample ex[] = {{0, ia, {}, &slice}};
    CHECK(total_loss(ex, p, ctx) < 1e-300);
  }
  {
    // beta2 = 0.6 with psi = (1,1) adds 0.6 * 2 in squared form.
    p.item_embeddings << 1, 1, 0, 1;
    p.hyper.beta2 = 0.6;
    const TrainingExample ex[] = {{0, ia, {}, &slice}};
    CHECK(regularization_loss(ex, p, RegularizerForm::kSquared) == doctest::Approx(1.2));
    CHECK(regularization_loss(ex, p, RegularizerForm::kPlain) == doctest::Approx(0.6 * std::sqrt(2.0)));
  }
}

TEST_CASE("update step decay arithmetic") {
  Hyperparams h;
  h.dim = 2;
  TinyInstance t(h);
  BatchGradients g;
  g.reset(t.params);
  // Item 2 is IA for users 0 and 1 in the fixture.
  g.ia_count[2] = 2;
  g.ia_count[1] = 0;
  const Matrix before = t.params.item_embeddings;
  update_step(t.params, g, 0.01, 0.6);
  CHECK((t.params.item_embeddings.row(2) - 0.988 * before.row(2)).norm() < 1e-15);
  CHECK(t.params.item_embeddings.row(1) == before.row(1));
  // Zero gradient and zero decay is a fixed point.
  const ModelParams snapshot = t.params;
  update_step(t.params, g, 0.01, 0.0);
  CHECK(t.params.item_embeddings == snapshot.item_embeddings);
  CHECK(t.params.value == snapshot.value);
}

TEST_CASE("decay shrinks IA items only") {
  Hyperparams h = tiny_hyper();
  TinyInstance t(h);
  BatchGradients g;
  batch_gradients(t.batch, t.params, t.ctx, g);
  g.items.setZero();
  g.user_bias.setZero();
  for (auto& m : g.query) m.setZero();
  for (auto& m : g.key) m.setZero();
  g.value.setZero();
  const Matrix before = t.params.item_embeddings;
  update_step(t.params, g, 0.05, 0.3);
  for (ItemId i = 0; i < 8; ++i) {
    const double b = before.row(i).norm(), a = t.params.item_embeddings.row(i).norm();
    if (g.ia_count[i] > 0) CHECK(a < b);
    else CHECK(a == b);
  }
}

TEST_CASE("non-finite gradient is rejected by name") {
  Hyperparams h;
  h.dim = 2;
  TinyInstance t(h);
  BatchGradients g;
  g.reset(t.params);
  g.value(0, 0) = std::nan("");
  try {
    update_step(t.params, g, 0.01, 0.0);
    FAIL("expected a model error");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("value") != std::string::npos);
  }
}

TEST_CASE("grad check on a quadratic") {
  Matrix x(2, 3);
  x << 0.3, -1.2, 2.0, 0.7, 0.1, -0.4;
  Matrix a(3, 3);
  a << 2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 3;
  auto loss = [&] { return (x * a * x.transpose()).trace(); };
  const Matrix analytic = x * (a + a.transpose());
  CHECK(grad_check(loss, x, analytic) < 1e-9);
}

TEST_CASE("analytic gradients match finite differences") {
  Hyperparams h = tiny_hyper();
  TinyInstance t(h);
  t.randomize_bias(5);
  const auto report = check_gradients(t.batch, t.params, t.ctx);
  for (const auto& e : report.entries) {
    INFO(e.tensor);
    CHECK(e.max_rel_error < 1e-4);
  }
}

TEST_CASE("gradients in the smooth region") {
  // Value weights chosen so every ELU input stays at least 1e-2 from the kink.
  Hyperparams h = tiny_hyper();
  h.options.individual_bias = false;
  TinyInstance t(h);
  t.params.item_embeddings = t.params.item_embeddings.cwiseAbs().array() + 0.1;
  t.params.value = Matrix::Identity(6, 6) * 0.5;
  for (const auto& ia : t.ia) {
    for (ItemId i : ia) {
      const Vector v = t.params.item_embeddings.row(i) * t.params.value;
      REQUIRE(v.cwiseAbs().minCoeff() >= 1e-2);
    }
  }
  const auto report = check_gradients(t.batch, t.params, t.ctx);
  CHECK(report.worst() < 1e-6);
}

TEST_CASE("gradient sparsity") {
  Hyperparams h = tiny_hyper();
  TinyInstance t(h);
  t.randomize_bias(6);
  BatchGradients g;
  batch_gradients(t.batch, t.params, t.ctx, g);
  // Item 7 is FIA for user 0 only; its gradient is the scoring term alone.
  const auto tape = encode_user_tape(0, t.ia[0], t.slices[0], t.params);
  const Vector up = user_popularity(t.ia[0], t.popularity);
  const double r = score(tape.phi, t.params.item_embeddings.row(7).transpose(), up,
                         t.popularity.row(7).transpose(), h.beta1, ScoreMode::kTrain);
  const Vector expected = -h.lambda2 / (1.0 + std::exp(r)) * tape.phi;
  CHECK((g.items.row(7).transpose() - expected).norm() < 1e-12);
  CHECK(g.ia_count[7] == 0);

  // An item in no one's lists gets exactly zero, analytically and numerically.
  TinyInstance lonely(h);
  lonely.randomize_bias(6);
  lonely.fia[0] = {4};
  lonely.batch[0].fia = lonely.fia[0];
  batch_gradients(lonely.batch, lonely.params, lonely.ctx, g);
  CHECK(g.items.row(7).isZero());
  CHECK_FALSE(g.item_touched[7]);
  const double base = total_loss(lonely.batch, lonely.params, lonely.ctx);
  lonely.params.item_embeddings(7, 0) += 1e-3;
  CHECK(total_loss(lonely.batch, lonely.params, lonely.ctx) == base);
}

TEST_CASE("loss descends on a tiny instance") {
  Hyperparams h = tiny_hyper();
  h.beta2 = 0.0;
  TinyInstance t(h);
  BatchGradients g;
  double previous = total_loss(t.batch, t.params, t.ctx);
  for (int step = 0; step < 10; ++step) {
    batch_gradients(t.batch, t.params, t.ctx, g);
    update_step(t.params, g, 1e-3, 0.0);
    const double now = total_loss(t.batch, t.params, t.ctx);
    CHECK(now < previous);
    previous = now;
  }
}

TEST_CASE("batch gradients do not depend on the thread count") {
  Hyperparams h = tiny_hyper();
  TinyInstance t(h);
  t.randomize_bias(8);
  // Repeat the fixture users so several chunks exist.
  std::vector<TrainingExample> big;
  for (int k = 0; k < 40; ++k)
    for (const auto& ex : t.batch) big.push_back(ex);
  BatchGradients a, b;
  omp_set_num_threads(1);
  batch_gradients(big, t.params, t.ctx, a);
  omp_set_num_threads(4);
  batch_gradients(big, t.params, t.ctx, b);
  CHECK(a.items == b.items);
  CHECK(a.value == b.value);
  CHECK(a.rating_loss == b.rating_loss);
}

TEST_CASE("adam optimizer applies the same decay and stays finite") {
  Hyperparams h = tiny_hyper();
  TinyInstance t(h);
  Optimizer opt(OptimizerKind::kAdam, t.params);
  BatchGradients g;
  const double start = total_loss(t.batch, t.params, t.ctx);
  for (int step = 0; step < 20; ++step) {
    batch_gradients(t.batch, t.params, t.ctx, g);
    opt.step(t.params, g, 1e-2, 0.0, RegularizerForm::kSquared);
  }
  CHECK(t.params.all_finite());
  CHECK(total_loss(t.batch, t.params, t.ctx) < start);
}
