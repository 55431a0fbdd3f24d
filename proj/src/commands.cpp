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

#include "cadrec/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cadrec/checkpoint.hpp"
#include "cadrec/config.hpp"
#include "cadrec/errors.hpp"
#include "cadrec/evaluation.hpp"
#include "cadrec/hypergraph.hpp"
#include "cadrec/interactions.hpp"
#include "cadrec/log.hpp"
#include "cadrec/synth.hpp"
#include "cadrec/trainer.hpp"

namespace cadrec {
namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::vector<std::string> ablations;
  std::vector<std::string> overrides;
  std::optional<std::string> out;
};

struct PreparedData {
  InteractionLog log;
  SplitDataset split;
  PopularityTable popularity;
  HyperGraph graph;
};

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg = load_run_config(flags.config);
  for (const auto& kv : flags.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed) cfg.train.seed = *flags.seed;
  if (flags.threads) cfg.threads = *flags.threads;
  if (flags.out) cfg.out = *flags.out;
  for (const auto& name : flags.ablations) cfg.apply_ablation(name);
  cfg.validate();
  if (cfg.threads > 0) omp_set_num_threads(static_cast<int>(cfg.threads));
  return cfg;
}

PreparedData prepare(const RunConfig& cfg) {
  PreparedData d;
  d.log = load_interactions(cfg.data, cfg.load);
  d.split = temporal_split(d.log, cfg.split);
  d.popularity = item_popularity(d.split);
  d.graph = HyperGraph::build(d.split);
  spdlog::info("loaded {} events: {} users ({} retained), {} items, {} graph entries",
               d.log.events.size(), d.log.num_users, d.split.retained_users(), d.log.num_items,
               d.graph.nnz());
  return d;
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw DataError("cannot write " + (dir / name).string());
  return out;
}

void write_common_outputs(const RunConfig& cfg, const PreparedData& d) {
  const fs::path dir(cfg.out);
  auto snapshot = open_output(dir, "config.snapshot");
  cfg.write(snapshot);
  auto users = open_output(dir, "users.tsv");
  d.log.users.write(users);
  auto items = open_output(dir, "items.tsv");
  d.log.items.write(items);
  auto manifest = open_output(dir, "split_manifest.txt");
  write_split_manifest(d.split, d.log.users, manifest);
}

ModelParams load_matching_checkpoint(const fs::path& path, const PreparedData& d) {
  if (!fs::exists(path)) throw DataError("checkpoint not found: " + path.string());
  ModelParams params = load_checkpoint(path);
  if (params.num_users() != d.split.num_users || params.num_items() != d.split.num_items) {
    throw ModelError("checkpoint dimensions (" + std::to_string(params.num_users()) + " users, " +
                     std::to_string(params.num_items()) + " items) do not match the data (" +
                     std::to_string(d.split.num_users) + ", " + std::to_string(d.split.num_items) + ")");
  }
  return params;
}

std::vector<SdGap> sd_gaps(const RunConfig& cfg, const ModelParams& params,
                           const PopularityTable& popularity) {
  std::vector<SdGap> gaps;
  const std::size_t limit = popularity.size() / 2;
  for (std::size_t k : cfg.diag_ks) {
    std::size_t kk = k;
    if (kk > limit) {
      spdlog::warn("diagnostic k={} exceeds N/2={}, clamped", k, limit);
      kk = limit;
    }
    if (kk == 0) continue;
    if (!gaps.empty() && gaps.back().k == kk) continue;
    gaps.push_back(sd_gap(params.item_embeddings, popularity, kk));
  }
  return gaps;
}

int cmd_split(const CommonFlags& flags) {
  const RunConfig cfg = resolve_config(flags);
  const PreparedData d = prepare(cfg);
  write_common_outputs(cfg, d);
  spdlog::info("split written to {}", cfg.out);
  return kExitOk;
}

int cmd_train(const CommonFlags& flags) {
  const RunConfig cfg = resolve_config(flags);
  const PreparedData d = prepare(cfg);
  write_common_outputs(cfg, d);
  const fs::path dir(cfg.out);

  Trainer trainer(d.split, d.graph, d.popularity, cfg.train);
  auto log = open_output(dir, "train_log.csv");
  write_epoch_header(log, cfg.train.monitor_k);
  const TrainResult result = trainer.fit([&](const EpochRecord& r) {
    write_epoch_record(log, r);
    log.flush();
    spdlog::info("epoch {:3d}  loss {:.4f}  val R@{} {:.4f}  N@{} {:.4f}  {:.1f}s", r.epoch, r.loss,
                 cfg.train.monitor_k, r.val_recall, cfg.train.monitor_k, r.val_ndcg, r.seconds);
  });
  save_checkpoint(result.best, dir / "checkpoint.bin");

  const Recommender model(result.best, d.graph, d.split);
  const auto val = evaluate(model, d.split, EvalSplit::kValidation, cfg.ks);
  const auto test = evaluate(model, d.split, EvalSplit::kTest, cfg.ks);
  auto val_out = open_output(dir, "metrics_val.txt");
  write_metrics_text(val, val_out);
  auto test_out = open_output(dir, "metrics.txt");
  test_out << "best_epoch=" << result.best_epoch << '\n';
  write_metrics_text(test, test_out);
  auto table = open_output(dir, "metrics.csv");
  write_metrics_table(test, table);
  for (const auto& m : test.metrics) {
    spdlog::info("test R@{} {:.4f}  N@{} {:.4f}", m.k, m.recall, m.k, m.ndcg);
  }
  return kExitOk;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint, const std::string& split_name) {
  const RunConfig cfg = resolve_config(flags);
  if (split_name != "val" && split_name != "test") throw ConfigError("--split must be val or test");
  const PreparedData d = prepare(cfg);
  const ModelParams params = load_matching_checkpoint(checkpoint, d);
  const fs::path dir(cfg.out);

  const Recommender model(params, d.graph, d.split);
  const auto which = split_name == "val" ? EvalSplit::kValidation : EvalSplit::kTest;
  const auto report = evaluate(model, d.split, which, cfg.ks, true);
  auto text = open_output(dir, "metrics.txt");
  text << "split=" << split_name << '\n';
  write_metrics_text(report, text);
  auto table = open_output(dir, "metrics.csv");
  write_metrics_table(report, table);
  auto lists = open_output(dir, "top_k.txt");
  write_top_lists(report, d.log.users, d.log.items, lists);
  auto emb = open_output(dir, "embeddings.txt");
  write_embeddings(params.item_embeddings, d.log.items, emb);
  auto diag = open_output(dir, "diagnostics.csv");
  write_sd_gap_table(sd_gaps(cfg, params, d.popularity), diag);
  for (const auto& m : report.metrics) {
    spdlog::info("{} R@{} {:.4f}  N@{} {:.4f}", split_name, m.k, m.recall, m.k, m.ndcg);
  }
  return kExitOk;
}

int cmd_diagnose(const CommonFlags& flags, const std::string& checkpoint,
                 const std::optional<std::string>& compare) {
  const RunConfig cfg = resolve_config(flags);
  const PreparedData d = prepare(cfg);
  const ModelParams params = load_matching_checkpoint(checkpoint, d);
  const fs::path dir(cfg.out);

  const auto gaps = sd_gaps(cfg, params, d.popularity);
  auto table = open_output(dir, "diagnostics.csv");
  write_sd_gap_table(gaps, table);

  const Recommender model(params, d.graph, d.split);
  const auto scores = mean_item_scores(model, d.split, cfg.score_users, cfg.train.seed);
  const Correlation rho = pop_correlation(scores, d.popularity);
  auto text = open_output(dir, "diagnostics.txt");
  text << "pop_correlation=" << rho.rho << '\n'
       << "pop_correlation_degenerate=" << (rho.degenerate ? "true" : "false") << '\n';
  spdlog::info("popularity/score rank correlation {:.4f}", rho.rho);

  if (compare) {
    const ModelParams other = load_matching_checkpoint(*compare, d);
    const auto other_gaps = sd_gaps(cfg, other, d.popularity);
    auto cmp = open_output(dir, "gap_comparison.csv");
    cmp << "k,sd_top_a,sd_bottom_a,ratio_a,sd_top_b,sd_bottom_b,ratio_b\n";
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      cmp << gaps[i].k << ',' << gaps[i].top << ',' << gaps[i].bottom << ',' << gaps[i].ratio()
          << ',' << other_gaps[i].top << ',' << other_gaps[i].bottom << ',' << other_gaps[i].ratio()
          << '\n';
    }
  }
  return kExitOk;
}

int cmd_synth(const std::string& config, std::optional<std::uint64_t> seed,
              std::optional<std::string> out) {
  SynthRunConfig cfg = load_synth_config(config);
  if (seed) cfg.synth.seed = *seed;
  if (out) cfg.out = *out;
  std::vector<std::pair<std::string, SynthConfig>> jobs;
  if (cfg.alpha_sweep.empty()) {
    jobs.emplace_back("", cfg.synth);
  } else {
    for (double alpha : cfg.alpha_sweep) {
      SynthConfig c = cfg.synth;
      c.alpha_pop = alpha;
      std::ostringstream tag;
      tag << "alpha_" << alpha;
      jobs.emplace_back(tag.str(), c);
    }
  }
  for (const auto& [tag, synth] : jobs) {
    const SynthCorpus corpus = generate(synth);
    const fs::path dir = tag.empty() ? fs::path(cfg.out) : fs::path(cfg.out) / tag;
    auto log = open_output(dir, "interactions.tsv");
    write_interactions(corpus.log, log);
    auto truth = open_output(dir, "ground_truth.txt");
    write_ground_truth(corpus, synth, truth);
    spdlog::info("wrote {} events to {}", corpus.log.events.size(), dir.string());
  }
  return kExitOk;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "Run configuration file")->required();
  cmd->add_option("--seed", flags.seed, "Override the random seed");
  cmd->add_option("--threads", flags.threads, "Worker threads (default: hardware parallelism)");
  cmd->add_option("--ablate", flags.ablations, "no_sa | no_dis | no_er | no_ws (repeatable)");
  cmd->add_option("--set", flags.overrides, "Override a config key: key=value (repeatable)");
  cmd->add_option("--out", flags.out, "Output directory");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  init_logging();
  CLI::App app{"Contextualized and debiased recommender: training, evaluation, diagnostics"};
  app.require_subcommand(1);

  CommonFlags train_flags, eval_flags, diag_flags, split_flags;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_common(train, train_flags);

  std::string eval_checkpoint, eval_split = "test";
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, eval_flags);
  eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
  eval->add_option("--split", eval_split, "val or test");

  std::string diag_checkpoint;
  std::optional<std::string> diag_compare;
  auto* diagnose = app.add_subcommand("diagnose", "Embedding SD gap and popularity correlation");
  add_common(diagnose, diag_flags);
  diagnose->add_option("--checkpoint", diag_checkpoint, "Checkpoint file")->required();
  diagnose->add_option("--compare", diag_compare, "Second checkpoint for a paired gap table");

  auto* split = app.add_subcommand("split", "Write the split manifest and index maps");
  add_common(split, split_flags);

  std::string synth_config;
  std::optional<std::uint64_t> synth_seed;
  std::optional<std::string> synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted biases");
  synth->add_option("--config", synth_config, "Synthetic corpus configuration")->required();
  synth->add_option("--seed", synth_seed, "Override the seed");
  synth->add_option("--out", synth_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return cmd_train(train_flags);
    if (*eval) return cmd_eval(eval_flags, eval_checkpoint, eval_split);
    if (*diagnose) return cmd_diagnose(diag_flags, diag_checkpoint, diag_compare);
    if (*split) return cmd_split(split_flags);
    if (*synth) return cmd_synth(synth_config, synth_seed, synth_out);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kExitData;
  } catch (const ModelError& e) {
    spdlog::error("model error: {}", e.what());
    return kExitModel;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace cadrec
