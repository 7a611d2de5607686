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

// Serial reference LM built op-by-op on the autograd tape. Slow; kept so the
// batched kernels can be checked against an independent derivation.

#include <span>
#include <vector>

#include "altdistill/lm.h"

namespace altdistill {

// Per-step log-probability rows for positions 1..T of seq.
std::vector<std::vector<double>> reference_log_probs(const LmParams& params,
                                                     const TokenSequence& seq);

// Sum over positions of (1 - w) * CE(w_t) + w * KL(g_t || p_t), where w is
// teacher_weight and g_t = soft_targets[t] (ignored when w == 0). When
// with_grad, the gradient is added into params' grad tensors.
double reference_loss(LmParams& params, const TokenSequence& seq,
                      std::span<const std::vector<double>> soft_targets, double teacher_weight,
                      bool with_grad);

}  // namespace altdistill
