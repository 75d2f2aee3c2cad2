// Copyright 2026 The priorshift Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "priorshift/schedule.h"

namespace priorshift::cli {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
};

// Self-checks of the engine against closed-form or finite-difference oracles.
std::vector<SuiteResult> run_verify_suites(const Schedule& s, uint64_t seed);

}  // namespace priorshift::cli
