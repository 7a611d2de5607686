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

#include <cstdint>
#include <span>
#include <vector>

#include "altdistill/nn/tensor.h"

namespace altdistill::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates per parameter plus the step counter.
class AdamState {
 public:
  AdamState(std::span<const Parameter> params, AdamOptions options);

  const AdamOptions& options() const { return options_; }
  std::int64_t step_count() const { return step_count_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  friend void adam_step(std::span<Parameter> params, AdamState& state);

  AdamOptions options_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t step_count_ = 0;
};

// Bias-corrected Adam update, then zeroes the gradients. Throws
// NumericalError("gradient overflow") on a non-finite gradient, before
// touching any parameter.
void adam_step(std::span<Parameter> params, AdamState& state);

double global_grad_norm(std::span<const Parameter> params);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_global_norm(std::span<Parameter> params, double max_norm);

}  // namespace altdistill::nn
