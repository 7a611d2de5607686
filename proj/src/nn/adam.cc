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

#include "altdistill/nn/adam.h"

#include <cmath>

#include "altdistill/errors.h"

namespace altdistill::nn {

AdamState::AdamState(std::span<const Parameter> params, AdamOptions options)
    : options_(options) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

void adam_step(std::span<Parameter> params, AdamState& state) {
  if (params.size() != state.m_.size()) {
    throw UsageError("adam_step: parameter count changed since the state was created");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].grad.shape() != state.m_[k].shape()) {
      throw UsageError("adam_step: shape mismatch " + shape_string(params[k].grad.shape()) +
                       " vs " + shape_string(state.m_[k].shape()));
    }
    if (!params[k].grad.all_finite()) throw NumericalError("gradient overflow");
  }

  const AdamOptions& o = state.options_;
  ++state.step_count_;
  const double t = double(state.step_count_);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    double* w = params[k].value.data();
    double* g = params[k].grad.data();
    double* m = state.m_[k].data();
    double* v = state.v_[k].data();
    const std::size_t n = params[k].value.size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      w[i] -= o.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + o.eps);
      g[i] = 0.0;
    }
  }
}

double global_grad_norm(std::span<const Parameter> params) {
  double sq = 0.0;
  for (const auto& p : params)
    for (double g : p.grad.values()) sq += g * g;
  return std::sqrt(sq);
}

double clip_global_norm(std::span<Parameter> params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (std::isfinite(norm) && norm > max_norm && max_norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& p : params)
      for (auto& g : p.grad.values()) g *= s;
  }
  return norm;
}

}  // namespace altdistill::nn
