// Copyright 2026 The altdistill Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "altdistill/nn/gradient_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace altdistill::nn {

GradientCheckResult gradient_check(const std::function<double()>& loss_fn,
                                   std::span<Parameter> params, std::size_t probe_count,
                                   double h, std::uint64_t seed, double floor) {
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& p : params) {
    offsets.push_back(total);
    total += p.value.size();
  }

  std::vector<std::size_t> coords;
  if (probe_count >= total) {
    coords.resize(total);
    std::iota(coords.begin(), coords.end(), 0);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    coords.reserve(probe_count);
    for (std::size_t i = 0; i < probe_count; ++i) coords.push_back(pick(rng));
  }

  GradientCheckResult result;
  for (std::size_t flat : coords) {
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat);
    const std::size_t k = std::size_t(it - offsets.begin()) - 1;
    const std::size_t i = flat - offsets[k];
    Parameter& p = params[k];

    const double analytic = p.grad[i];
    const double saved = p.value[i];
    p.value[i] = saved + h;
    const double up = loss_fn();
    p.value[i] = saved - h;
    const double down = loss_fn();
    p.value[i] = saved;
    const double numeric = (up - down) / (2.0 * h);

    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    const double rel = std::abs(analytic - numeric) / denom;
    ++result.probes;
    if (rel > result.max_relative_error || !std::isfinite(rel)) {
      result.max_relative_error = rel;
      result.worst_parameter = p.name;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace altdistill::nn
