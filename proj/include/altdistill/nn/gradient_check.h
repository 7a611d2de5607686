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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "altdistill/nn/tensor.h"

namespace altdistill::nn {

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t probes = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
};

// Compares the analytic gradients already stored in params[*].grad against
// central differences (f(x+h) - f(x-h)) / 2h on probe_count coordinates
// drawn uniformly over all parameters (every coordinate when probe_count
// covers them all). Relative error is |a - n| / max(|a|, |n|, floor).
// Parameter values are restored afterwards.
GradientCheckResult gradient_check(const std::function<double()>& loss_fn,
                                   std::span<Parameter> params, std::size_t probe_count,
                                   double h, std::uint64_t seed = 0, double floor = 1e-8);

}  // namespace altdistill::nn
