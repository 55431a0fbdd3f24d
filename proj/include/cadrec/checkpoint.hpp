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

#include <filesystem>
#include <iosfwd>

#include "cadrec/encoders.hpp"

namespace cadrec {

// Binary layout, all integers and floats little-endian:
//   magic "CADRECK1"
//   u64 num_users, u64 num_items, u64 dim, u64 heads, u64 section_count
//   section_count x { u32 name_len, name bytes, u64 rows, u64 cols,
//                     rows*cols f64 row-major }
// Sections: "hyper" (1 x 13), "item_embeddings", "user_bias",
// "query.<h>", "key.<h>", "value".
void save_checkpoint(const ModelParams& params, std::ostream& out);
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);

// Throws DataError when the file is missing, ModelError when it is corrupt.
ModelParams load_checkpoint(std::istream& in);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace cadrec
