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

#include "cadrec/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace cadrec {

void init_logging() {
  auto logger = spdlog::get("cadrec");
  if (!logger) {
    logger = spdlog::stderr_color_mt("cadrec");
    logger->set_pattern("[%H:%M:%S] [%^%l%$] %v");
  }
  spdlog::set_default_logger(logger);

  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("CADREC_LOG")) {
    const std::string_view value(env);
    if (value == "debug") level = spdlog::level::debug;
    else if (value == "warn") level = spdlog::level::warn;
    else if (value == "error") level = spdlog::level::err;
  }
  spdlog::set_level(level);
}

}  // namespace cadrec
