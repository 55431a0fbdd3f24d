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
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cadrec/encoders.hpp"
#include "cadrec/evaluation.hpp"
#include "cadrec/hypergraph.hpp"
#include "cadrec/interactions.hpp"
#include "cadrec/objective.hpp"

namespace cadrec {

struct TrainConfig {
  Hyperparams hyper;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  RegularizerForm regularizer = RegularizerForm::kSquared;
  bool popularity_log_bucket = false;
  std::size_t batch_size = 1024;
  std::size_t epochs = 100;
  std::size_t patience = 10;  // epochs without val N@20 improvement; 0 disables
  std::size_t monitor_k = 20;
  std::uint64_t seed = 42;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_recall = 0.0;
  double val_ndcg = 0.0;
  double seconds = 0.0;
};

// `epoch,loss,val_R@K,val_N@K,seconds` rows.
void write_epoch_header(std::ostream& out, std::size_t k);
void write_epoch_record(std::ostream& out, const EpochRecord& record);

struct TrainResult {
  ModelParams best;             // parameters at the best validation epoch
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;   // 0 when no epoch was validated
  double best_val_ndcg = 0.0;
};

// Mini-batch training over users with shuffled order per epoch. Fully
// determined by (data, config); thread count does not change results.
class Trainer {
 public:
  Trainer(const SplitDataset& split, const HyperGraph& graph, const PopularityTable& popularity,
          TrainConfig config);

  // One pass over the trainable users; returns the summed total loss.
  double run_epoch();
  TrainResult fit(const std::function<void(const EpochRecord&)>& on_epoch = {});

  const ModelParams& params() const { return params_; }
  ModelParams& mutable_params() { return params_; }
  const ObjectiveContext& context() const { return ctx_; }
  const std::vector<TrainingExample>& examples() const { return examples_; }
  bool has_validation() const { return has_validation_; }

 private:
  const SplitDataset* split_;
  const HyperGraph* graph_;
  TrainConfig config_;
  ModelParams params_;
  Matrix item_popularity_;
  ObjectiveContext ctx_;
  std::vector<Matrix> slices_;
  std::vector<TrainingExample> examples_;
  Optimizer optimizer_;
  BatchGradients grads_;
  std::uint64_t epoch_ = 0;
  bool has_validation_ = false;
};

}  // namespace cadrec
