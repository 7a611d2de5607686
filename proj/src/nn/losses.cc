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

#include "altdistill/nn/losses.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "altdistill/errors.h"

namespace altdistill::nn {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw UsageError(std::string(what) + ": size mismatch [" + std::to_string(a) + "] vs [" +
                     std::to_string(b) + "]");
  }
}

void check_log_normalized(std::span<const double> log_probs) {
  const double lse = logsumexp(log_probs);
  if (!(std::abs(lse) <= kLogNormTolerance)) {
    throw UsageError("log-probabilities are not normalized (logsumexp = " + std::to_string(lse) +
                     ")");
  }
}

}  // namespace

double logsumexp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  require_same_size(logits.size(), out.size(), "log_softmax");
  const double lse = logsumexp(logits);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
}

void check_distribution(std::span<const double> p, double tolerance) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError("distribution has a negative entry");
    sum += v;
  }
  if (!(std::abs(sum - 1.0) <= tolerance)) {
    throw UsageError("distribution is not normalized (sum = " + std::to_string(sum) + ")");
  }
}

double cross_entropy_step(std::span<const double> log_probs, std::size_t target) {
  if (target >= log_probs.size()) {
    throw DataError("invalid token id " + std::to_string(target));
  }
  check_log_normalized(log_probs);
  return -log_probs[target];
}

void cross_entropy_logit_grad(std::span<const double> log_probs, std::size_t target,
                              std::span<double> grad) {
  require_same_size(log_probs.size(), grad.size(), "cross_entropy_logit_grad");
  if (target >= log_probs.size()) {
    throw DataError("invalid token id " + std::to_string(target));
  }
  for (std::size_t i = 0; i < log_probs.size(); ++i) grad[i] = std::exp(log_probs[i]);
  grad[target] -= 1.0;
}

double kl_divergence_step(std::span<const double> target, std::span<const double> log_probs) {
  require_same_size(target.size(), log_probs.size(), "kl_divergence_step");
  check_distribution(target);
  check_log_normalized(log_probs);
  double kl = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] > 0.0) kl += target[i] * (std::log(target[i]) - log_probs[i]);
  }
  return kl;
}

void kl_divergence_logit_grad(std::span<const double> target, std::span<const double> log_probs,
                              std::span<double> grad) {
  require_same_size(target.size(), log_probs.size(), "kl_divergence_logit_grad");
  require_same_size(target.size(), grad.size(), "kl_divergence_logit_grad");
  for (std::size_t i = 0; i < target.size(); ++i) grad[i] = std::exp(log_probs[i]) - target[i];
}

}  // namespace altdistill::nn
