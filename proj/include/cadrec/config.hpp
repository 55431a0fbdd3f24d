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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cadrec/interactions.hpp"
#include "cadrec/synth.hpp"
#include "cadrec/trainer.hpp"

namespace cadrec {

// Flat `key = value` text; `#` starts a comment. Throws ConfigError naming
// the line on malformed input.
std::map<std::string, std::string> parse_key_values(std::istream& in);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

struct RunConfig {
  std::string data;                // interaction file
  LoadOptions load;
  SplitOptions split;
  TrainConfig train;
  std::vector<std::size_t> ks = {5, 10, 20};
  std::vector<std::size_t> diag_ks = {50, 100, 500, 1000};
  std::size_t score_users = 0;     // users sampled for pop_correlation, 0 = all
  std::size_t threads = 0;         // 0 = hardware parallelism
  std::string out = "out";
  std::vector<std::string> ablations;

  // Sets one field from its text form; unknown keys and bad values throw
  // ConfigError with the key name.
  void set(std::string_view key, std::string_view value);
  // no_sa: delta = 0; no_dis: beta1 = 0 and no individual bias;
  // no_er: beta2 = 0; no_ws: lambda1 = lambda2 = 1.
  void apply_ablation(std::string_view name);
  void validate() const;
  void write(std::ostream& out) const;
};

RunConfig load_run_config(const std::filesystem::path& path);

struct SynthRunConfig {
  SynthConfig synth;
  std::vector<double> alpha_sweep;  // one corpus per value when nonempty
  std::string out = "synth";

  void set(std::string_view key, std::string_view value);
};

SynthRunConfig load_synth_config(const std::filesystem::path& path);

}  // namespace cadrec
