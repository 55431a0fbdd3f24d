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

#include "cadrec/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "cadrec/errors.hpp"

namespace cadrec {
namespace {

constexpr std::array<char, 8> kMagic = {'C', 'A', 'D', 'R', 'E', 'C', 'K', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> bytes{};
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw ModelError("checkpoint truncated");
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw ModelError("checkpoint truncated");
  }
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

void put_section(std::ostream& out, const std::string& name, const Matrix& m) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(m.data()[i]));
}

Matrix hyper_row(const Hyperparams& h) {
  Matrix row(1, 13);
  row << static_cast<double>(h.dim), static_cast<double>(h.heads), static_cast<double>(h.layers),
      h.delta, h.beta1, h.beta2, h.lambda1, h.lambda2, h.learning_rate,
      static_cast<double>(h.score_norm), h.options.attention ? 1.0 : 0.0,
      h.options.individual_bias ? 1.0 : 0.0, h.options.popularity ? 1.0 : 0.0;
  return row;
}

Hyperparams hyper_from_row(const Matrix& row) {
  if (row.rows() != 1 || row.cols() != 13) throw ModelError("checkpoint: malformed hyper section");
  Hyperparams h;
  h.dim = static_cast<std::size_t>(row(0, 0));
  h.heads = static_cast<std::size_t>(row(0, 1));
  h.layers = static_cast<std::size_t>(row(0, 2));
  h.delta = row(0, 3);
  h.beta1 = row(0, 4);
  h.beta2 = row(0, 5);
  h.lambda1 = row(0, 6);
  h.lambda2 = row(0, 7);
  h.learning_rate = row(0, 8);
  const int norm = static_cast<int>(row(0, 9));
  if (norm < 0 || norm > 2) throw ModelError("checkpoint: unknown score normalization");
  h.score_norm = static_cast<ScoreNorm>(norm);
  h.options.attention = row(0, 10) != 0.0;
  h.options.individual_bias = row(0, 11) != 0.0;
  h.options.popularity = row(0, 12) != 0.0;
  return h;
}

}  // namespace

void save_checkpoint(const ModelParams& params, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, params.num_users());
  put_u64(out, params.num_items());
  put_u64(out, params.dim());
  put_u64(out, params.heads());
  put_u64(out, 4 + 2 * params.heads());
  put_section(out, "hyper", hyper_row(params.hyper));
  put_section(out, "item_embeddings", params.item_embeddings);
  put_section(out, "user_bias", params.user_bias);
  for (std::size_t h = 0; h < params.heads(); ++h) {
    put_section(out, "query." + std::to_string(h), params.query[h]);
    put_section(out, "key." + std::to_string(h), params.key[h]);
  }
  put_section(out, "value", params.value);
  if (!out) throw ModelError("failed to write checkpoint");
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  save_checkpoint(params, out);
}

ModelParams load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw ModelError("not a checkpoint file (bad magic)");
  }
  const std::uint64_t num_users = get_u64(in);
  const std::uint64_t num_items = get_u64(in);
  const std::uint64_t dim = get_u64(in);
  const std::uint64_t heads = get_u64(in);
  const std::uint64_t sections = get_u64(in);
  if (sections > 4096) throw ModelError("checkpoint: implausible section count");

  std::map<std::string, Matrix> by_name;
  for (std::uint64_t s = 0; s < sections; ++s) {
    const std::uint32_t len = get_u32(in);
    if (len > 256) throw ModelError("checkpoint: implausible section name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw ModelError("checkpoint truncated");
    const std::uint64_t rows = get_u64(in);
    const std::uint64_t cols = get_u64(in);
    if (rows > (1ULL << 32) || cols > (1ULL << 24)) throw ModelError("checkpoint: implausible shape");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<double>(get_u64(in));
    by_name.emplace(std::move(name), std::move(m));
  }

  const auto take = [&](const std::string& name, std::uint64_t rows, std::uint64_t cols) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ModelError("checkpoint: missing section " + name);
    if (static_cast<std::uint64_t>(it->second.rows()) != rows ||
        static_cast<std::uint64_t>(it->second.cols()) != cols) {
      throw ModelError("checkpoint: section " + name + " has the wrong shape");
    }
    return std::move(it->second);
  };

  ModelParams p;
  p.hyper = hyper_from_row(take("hyper", 1, 13));
  if (p.hyper.dim != dim || p.hyper.heads != heads) {
    throw ModelError("checkpoint: header disagrees with hyperparameters");
  }
  p.item_embeddings = take("item_embeddings", num_items, dim);
  p.user_bias = take("user_bias", num_users, dim);
  for (std::uint64_t h = 0; h < heads; ++h) {
    p.query.push_back(take("query." + std::to_string(h), dim, dim));
    p.key.push_back(take("key." + std::to_string(h), dim, dim));
  }
  p.value = take("value", dim, dim);
  return p;
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace cadrec
