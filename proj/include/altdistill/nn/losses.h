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
#include <span>

namespace altdistill::nn {

inline constexpr double kLogNormTolerance = 1e-6;
inline constexpr double kProbSumTolerance = 1e-9;

double logsumexp(std::span<const double> x);
void log_softmax(std::span<const double> logits, std::span<double> out);

// Throws unless p is non-negative and sums to 1 within `tolerance`.
void check_distribution(std::span<const double> p, double tolerance = kProbSumTolerance);

// -log p(target). log_probs must be normalized (logsumexp within 1e-6 of 0).
double cross_entropy_step(std::span<const double> log_probs, std::size_t target);
// d(-log p(target)) / d logits = softmax - onehot(target).
void cross_entropy_logit_grad(std::span<const double> log_probs, std::size_t target,
                              std::span<double> grad);

// sum_w P(w) (log P(w) - log Q(w)) with 0 log 0 = 0, P = target, log Q = log_probs.
double kl_divergence_step(std::span<const double> target, std::span<const double> log_probs);
// d KL / d logits = softmax - target.
void kl_divergence_logit_grad(std::span<const double> target, std::span<const double> log_probs,
                              std::span<double> grad);

}  // namespace altdistill::nn
