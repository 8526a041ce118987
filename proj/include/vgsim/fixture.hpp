/*
 * Copyright 2026 The vgsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>

#include "vgsim/report.hpp"

namespace vgsim::fixture {

/// Small synthetic study: embeddings, image vectors, class membership,
/// captions, 100 regular trials whose predicted labels are the target's
/// nearest neighbours and whose random labels are its farthest words, a few
/// catch and out-of-vocabulary trials, responses with exactly 70% predicted
/// choices on the regular trials, a benchmark, GAM specs and a config file.
report::OutputSet make_fixture(std::uint64_t seed);

void write_fixture(const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace vgsim::fixture
