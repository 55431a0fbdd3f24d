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

#include "cadrec/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "cadrec/errors.hpp"

namespace cadrec {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value for '" + std::string(key) + "': '" + std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    bad_value(key, value);
  }
  return out;
}

std::size_t to_size(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

template <typename T, typename Convert>
std::vector<T> to_list(std::string_view key, std::string_view value, Convert convert) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    const std::size_t end = std::min(value.find(',', pos), value.size());
    const auto piece = trim(value.substr(pos, end - pos));
    if (!piece.empty()) out.push_back(convert(key, piece));
    pos = end + 1;
  }
  if (out.empty()) bad_value(key, value);
  return out;
}

char to_delimiter(std::string_view key, std::string_view value) {
  if (value == "tab" || value == "\\t") return '\t';
  if (value == "ws" || value == "whitespace") return '\0';
  if (value == "space") return ' ';
  if (value == "comma") return ',';
  if (value.size() == 1) return value.front();
  bad_value(key, value);
}

std::string delimiter_name(char c) {
  switch (c) {
    case '\t': return "tab";
    case '\0': return "ws";
    case ' ': return "space";
    case ',': return "comma";
    default: return std::string(1, c);
  }
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view content(line);
    if (const auto hash = content.find('#'); hash != std::string_view::npos) content = content.substr(0, hash);
    content = trim(content);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(content.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out[std::string(key)] = std::string(trim(content.substr(eq + 1)));
  }
  return out;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_key_values(in);
}

void RunConfig::set(std::string_view key, std::string_view value) {
  Hyperparams& h = train.hyper;
  if (key == "data") data = value;
  else if (key == "delimiter") load.delimiter = to_delimiter(key, value);
  else if (key == "user_field") load.user_field = to_size(key, value);
  else if (key == "item_field") load.item_field = to_size(key, value);
  else if (key == "timestamp_field") load.timestamp_field = to_size(key, value);
  else if (key == "train_ratio") split.train_ratio = to_double(key, value);
  else if (key == "val_ratio") split.val_ratio = to_double(key, value);
  else if (key == "test_ratio") split.test_ratio = to_double(key, value);
  else if (key == "min_interactions") split.min_interactions = to_size(key, value);
  else if (key == "ia_fraction") split.ia_fraction = to_double(key, value);
  else if (key == "max_seq_len") split.max_seq_len = to_size(key, value);
  else if (key == "dim") h.dim = to_size(key, value);
  else if (key == "heads") h.heads = to_size(key, value);
  else if (key == "layers") h.layers = to_size(key, value);
  else if (key == "delta") h.delta = to_double(key, value);
  else if (key == "beta1") h.beta1 = to_double(key, value);
  else if (key == "beta2") h.beta2 = to_double(key, value);
  else if (key == "lambda1") h.lambda1 = to_double(key, value);
  else if (key == "lambda2") h.lambda2 = to_double(key, value);
  else if (key == "learning_rate" || key == "lr") h.learning_rate = to_double(key, value);
  else if (key == "score_norm") {
    if (value == "row") h.score_norm = ScoreNorm::kRow;
    else if (value == "frobenius") h.score_norm = ScoreNorm::kFrobenius;
    else if (value == "column") h.score_norm = ScoreNorm::kColumn;
    else bad_value(key, value);
  } else if (key == "attention") h.options.attention = to_bool(key, value);
  else if (key == "individual_bias") h.options.individual_bias = to_bool(key, value);
  else if (key == "popularity") h.options.popularity = to_bool(key, value);
  else if (key == "optimizer") {
    if (value == "sgd") train.optimizer = OptimizerKind::kSgd;
    else if (value == "adam") train.optimizer = OptimizerKind::kAdam;
    else bad_value(key, value);
  } else if (key == "regularizer") {
    if (value == "squared") train.regularizer = RegularizerForm::kSquared;
    else if (value == "plain") train.regularizer = RegularizerForm::kPlain;
    else bad_value(key, value);
  } else if (key == "popularity_log_bucket") train.popularity_log_bucket = to_bool(key, value);
  else if (key == "batch_size") train.batch_size = to_size(key, value);
  else if (key == "epochs") train.epochs = to_size(key, value);
  else if (key == "patience") train.patience = to_size(key, value);
  else if (key == "monitor_k") train.monitor_k = to_size(key, value);
  else if (key == "seed") train.seed = to_size(key, value);
  else if (key == "ks") ks = to_list<std::size_t>(key, value, to_size);
  else if (key == "diag_ks") diag_ks = to_list<std::size_t>(key, value, to_size);
  else if (key == "score_users") score_users = to_size(key, value);
  else if (key == "threads") threads = to_size(key, value);
  else if (key == "out") out = value;
  else if (key == "ablate") {
    for (const auto& name : to_list<std::string>(key, value, [](std::string_view, std::string_view v) {
           return std::string(v);
         })) {
      apply_ablation(name);
    }
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void RunConfig::apply_ablation(std::string_view name) {
  Hyperparams& h = train.hyper;
  if (name == "no_sa") {
    h.delta = 0.0;
    h.options.attention = false;
  } else if (name == "no_dis") {
    h.beta1 = 0.0;
    h.options.popularity = false;
    h.options.individual_bias = false;
  } else if (name == "no_er") {
    h.beta2 = 0.0;
  } else if (name == "no_ws") {
    h.lambda1 = 1.0;
    h.lambda2 = 1.0;
  } else {
    throw ConfigError("unknown ablation '" + std::string(name) + "' (expected no_sa, no_dis, no_er, no_ws)");
  }
  for (const auto& existing : ablations) {
    if (existing == name) return;
  }
  ablations.emplace_back(name);
}

void RunConfig::validate() const {
  if (data.empty()) throw ConfigError("missing required key 'data'");
  split.validate();
  train.validate();
  if (ks.empty()) throw ConfigError("ks must not be empty");
  for (std::size_t k : ks) {
    if (k == 0) throw ConfigError("ks entries must be positive");
  }
  for (std::size_t k : diag_ks) {
    if (k == 0) throw ConfigError("diag_ks entries must be positive");
  }
  if (load.user_field == load.item_field || load.user_field == load.timestamp_field ||
      load.item_field == load.timestamp_field) {
    throw ConfigError("user_field, item_field and timestamp_field must differ");
  }
}

void RunConfig::write(std::ostream& o) const {
  const Hyperparams& h = train.hyper;
  const auto join = [](const auto& values) {
    std::ostringstream s;
    for (std::size_t i = 0; i < values.size(); ++i) s << (i ? "," : "") << values[i];
    return s.str();
  };
  o << std::setprecision(17);
  o << "data = " << data << '\n'
    << "delimiter = " << delimiter_name(load.delimiter) << '\n'
    << "user_field = " << load.user_field << '\n'
    << "item_field = " << load.item_field << '\n'
    << "timestamp_field = " << load.timestamp_field << '\n'
    << "train_ratio = " << split.train_ratio << '\n'
    << "val_ratio = " << split.val_ratio << '\n'
    << "test_ratio = " << split.test_ratio << '\n'
    << "min_interactions = " << split.min_interactions << '\n'
    << "ia_fraction = " << split.ia_fraction << '\n'
    << "max_seq_len = " << split.max_seq_len << '\n'
    << "dim = " << h.dim << '\n'
    << "heads = " << h.heads << '\n'
    << "layers = " << h.layers << '\n'
    << "delta = " << h.delta << '\n'
    << "beta1 = " << h.beta1 << '\n'
    << "beta2 = " << h.beta2 << '\n'
    << "lambda1 = " << h.lambda1 << '\n'
    << "lambda2 = " << h.lambda2 << '\n'
    << "learning_rate = " << h.learning_rate << '\n'
    << "score_norm = "
    << (h.score_norm == ScoreNorm::kRow ? "row" : h.score_norm == ScoreNorm::kColumn ? "column" : "frobenius")
    << '\n'
    << "attention = " << (h.options.attention ? "true" : "false") << '\n'
    << "individual_bias = " << (h.options.individual_bias ? "true" : "false") << '\n'
    << "popularity = " << (h.options.popularity ? "true" : "false") << '\n'
    << "optimizer = " << (train.optimizer == OptimizerKind::kSgd ? "sgd" : "adam") << '\n'
    << "regularizer = " << (train.regularizer == RegularizerForm::kSquared ? "squared" : "plain") << '\n'
    << "popularity_log_bucket = " << (train.popularity_log_bucket ? "true" : "false") << '\n'
    << "batch_size = " << train.batch_size << '\n'
    << "epochs = " << train.epochs << '\n'
    << "patience = " << train.patience << '\n'
    << "monitor_k = " << train.monitor_k << '\n'
    << "seed = " << train.seed << '\n'
    << "ks = " << join(ks) << '\n'
    << "diag_ks = " << join(diag_ks) << '\n'
    << "score_users = " << score_users << '\n'
    << "threads = " << threads << '\n'
    << "out = " << out << '\n';
  if (!ablations.empty()) o << "ablate = " << join(ablations) << '\n';
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig cfg;
  for (const auto& [key, value] : read_key_values(path)) cfg.set(key, value);
  // A relative data path is resolved against the config file's directory.
  if (!cfg.data.empty() && std::filesystem::path(cfg.data).is_relative()) {
    cfg.data = (path.parent_path() / cfg.data).string();
  }
  return cfg;
}

void SynthRunConfig::set(std::string_view key, std::string_view value) {
  if (key == "num_users") synth.num_users = to_size(key, value);
  else if (key == "num_items") synth.num_items = to_size(key, value);
  else if (key == "latent_dim") synth.latent_dim = to_size(key, value);
  else if (key == "alpha_pop") synth.alpha_pop = to_double(key, value);
  else if (key == "sigma_indi") synth.sigma_indi = to_double(key, value);
  else if (key == "events_per_user") synth.events_per_user = to_size(key, value);
  else if (key == "events_spread") synth.events_spread = to_size(key, value);
  else if (key == "seed") synth.seed = to_size(key, value);
  else if (key == "alpha_sweep") alpha_sweep = to_list<double>(key, value, to_double);
  else if (key == "out") out = value;
  else throw ConfigError("unknown synth config key '" + std::string(key) + "'");
}

SynthRunConfig load_synth_config(const std::filesystem::path& path) {
  SynthRunConfig cfg;
  for (const auto& [key, value] : read_key_values(path)) cfg.set(key, value);
  return cfg;
}

}  // namespace cadrec
