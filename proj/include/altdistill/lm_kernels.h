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

// Batched LSTM forward/backward kernels used for training and bulk scoring.
// Matrix products go through Eigen; per-row elementwise work (gate
// nonlinearities, log-softmax, loss gradients) is split across OpenMP threads
// by row, so results do not depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "altdistill/lm.h"

namespace altdistill {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

// Padded, time-major batch. Position t feeds inputs[t] and predicts
// targets[t]; mask is 0 on padding.
struct TokenBatch {
  std::size_t batch_size = 0;
  std::size_t steps = 0;
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;
  std::vector<std::uint8_t> mask;
  std::size_t num_tokens = 0;

  static TokenBatch from_sequences(std::span<const TokenSequence* const> sequences);

  std::size_t index(std::size_t t, std::size_t b) const { return t * batch_size + b; }
  TokenId input(std::size_t t, std::size_t b) const { return inputs[index(t, b)]; }
  TokenId target(std::size_t t, std::size_t b) const { return targets[index(t, b)]; }
  bool valid(std::size_t t, std::size_t b) const { return mask[index(t, b)] != 0; }
};

// Activations kept for backpropagation. Row blocks of `batch_size` rows are
// time steps; h and c carry an extra leading block for the zero initial state.
struct LayerCache {
  RowMatrix xh;     // [steps*B, in+H]
  RowMatrix gates;  // [steps*B, 4H], activated
  RowMatrix c;      // [(steps+1)*B, H]
  RowMatrix h;      // [(steps+1)*B, H]
  RowMatrix tanh_c; // [steps*B, H]
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  RowMatrix log_probs;  // [steps*B, V]

  // Top-layer hidden state of step t, [B, H].
  auto top_hidden(std::size_t t, std::size_t batch_size) const {
    return layers.back().h.middleRows((t + 1) * batch_size, batch_size);
  }
};

// Runs the recurrent layers. log_probs is filled only when with_outputs.
void lm_forward(const LmParams& params, const TokenBatch& batch, ForwardCache& cache,
                bool with_outputs = true);

// Row-wise log-softmax(hidden * W_out^T + b_out).
void lm_project(const LmParams& params, const Eigen::Ref<const RowMatrix>& hidden,
                RowMatrix& log_probs);

void log_softmax_rows(RowMatrix& logits);

// Accumulates d(loss)/d(params) into params' grad tensors given
// d(loss)/d(logits) for every position ([steps*B, V]).
void lm_backward(LmParams& params, const TokenBatch& batch, const ForwardCache& cache,
                 const RowMatrix& dlogits);

// Mean per-token (1 - w) CE + w KL(soft || p) over the batch's valid
// positions, soft[t] being [B, V] (w is ignored without soft targets). When
// dlogits is given it receives d(mean loss)/d(logits).
double lm_batch_objective(const TokenBatch& batch, const ForwardCache& cache,
                          const SoftTargets* soft, double teacher_weight,
                          RowMatrix* dlogits);

// Recurrent state for batched incremental inference.
struct BatchState {
  std::vector<RowMatrix> h;
  std::vector<RowMatrix> c;

  static BatchState zeros(const LmConfig& config, std::size_t rows);
  std::size_t rows() const { return h.empty() ? 0 : std::size_t(h[0].rows()); }
  // New state whose row i copies row `source[i]`.
  BatchState gather(std::span<const std::size_t> source) const;
};

// Feeds tokens[i] to row i, advancing the state; log_probs becomes [rows, V].
void lm_step(const LmParams& params, BatchState& state, std::span<const TokenId> tokens,
             RowMatrix& log_probs);

}  // namespace altdistill
