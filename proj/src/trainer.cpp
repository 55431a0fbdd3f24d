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

#include "cadrec/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <ostream>
#include <random>

#include <spdlog/spdlog.h>

#include "cadrec/errors.hpp"

namespace cadrec {

void TrainConfig::validate() const {
  hyper.validate();
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (monitor_k == 0) throw ConfigError("monitor_k must be positive");
}

void write_epoch_header(std::ostream& out, std::size_t k) {
  out << "epoch,loss,val_R@" << k << ",val_N@" << k << ",seconds\n";
}

void write_epoch_record(std::ostream& out, const EpochRecord& r) {
  out << r.epoch << ',' << std::setprecision(10) << r.loss << ',' << r.val_recall << ','
      << r.val_ndcg << ',' << std::setprecision(4) << r.seconds << '\n';
}

Trainer::Trainer(const SplitDataset& split, const HyperGraph& graph,
                 const PopularityTable& popularity, TrainConfig config)
    : split_(&split),
      graph_(&graph),
      config_(config),
      params_(init_params(split.num_users, split.num_items, config.hyper, config.seed)),
      optimizer_(config.optimizer, params_) {
  config_.validate();
  require(graph.num_items() == split.num_items, "Trainer: graph and split disagree on item count");
  require(popularity.size() == split.num_items, "Trainer: popularity table size mismatch");
  item_popularity_ = popularity_matrix(popularity, config_.hyper.dim, config_.popularity_log_bucket);
  ctx_.item_popularity = &item_popularity_;
  ctx_.regularizer = config_.regularizer;

  slices_.resize(split.users.size());
  for (UserId u : split.trainable_users()) {
    slices_[u] = graph.slice(split.users[u].ia);
    examples_.push_back({u, split.users[u].ia, split.users[u].fia, &slices_[u]});
    has_validation_ = has_validation_ || !split.users[u].val.empty();
  }
  if (examples_.empty()) throw DataError("no trainable users");
}

double Trainer::run_epoch() {
  std::mt19937_64 rng(config_.seed ^ (0x9e3779b97f4a7c15ULL * (epoch_ + 1)));
  ++epoch_;
  std::vector<std::size_t> order(examples_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  double loss = 0.0;
  std::vector<TrainingExample> batch;
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    const std::size_t end = std::min(order.size(), start + config_.batch_size);
    batch.clear();
    for (std::size_t k = start; k < end; ++k) batch.push_back(examples_[order[k]]);
    const double reg = regularization_loss(batch, params_, config_.regularizer);
    batch_gradients(batch, params_, ctx_, grads_);
    loss += grads_.rating_loss + reg;
    optimizer_.step(params_, grads_, config_.hyper.learning_rate, config_.hyper.beta2,
                    config_.regularizer);
  }
  if (!params_.all_finite()) throw ModelError("parameters became non-finite during training");
  return loss;
}

TrainResult Trainer::fit(const std::function<void(const EpochRecord&)>& on_epoch) {
  TrainResult result;
  result.best = params_;
  std::size_t stale = 0;
  const std::size_t ks[] = {config_.monitor_k};
  for (std::size_t epoch = 1; epoch <= config_.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord record;
    record.epoch = epoch;
    record.loss = run_epoch();
    if (has_validation_) {
      const Recommender model(params_, *graph_, *split_);
      const auto report = evaluate(model, *split_, EvalSplit::kValidation, ks);
      record.val_recall = report.metrics.front().recall;
      record.val_ndcg = report.metrics.front().ndcg;
    }
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(record);
    spdlog::debug("epoch {} loss {:.6f} val R@{} {:.5f} N@{} {:.5f} ({:.2f}s)", epoch, record.loss,
                  config_.monitor_k, record.val_recall, config_.monitor_k, record.val_ndcg,
                  record.seconds);
    if (on_epoch) on_epoch(record);

    if (!has_validation_) {
      result.best = params_;
      continue;
    }
    if (result.best_epoch == 0 || record.val_ndcg > result.best_val_ndcg) {
      result.best_val_ndcg = record.val_ndcg;
      result.best_epoch = epoch;
      result.best = params_;
      stale = 0;
    } else if (config_.patience > 0 && ++stale >= config_.patience) {
      spdlog::info("early stopping at epoch {} (best epoch {})", epoch, result.best_epoch);
      break;
    }
  }
  return result;
}

}  // namespace cadrec
