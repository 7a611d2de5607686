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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "altdistill/nn/tensor.h"
#include "altdistill/textcore.h"

namespace altdistill {

// Per time step, a batch_size x V row-major block of target distributions.
using SoftTargets = std::vector<nn::AlignedValues>;

// Architecture plus training scalars of one recurrent LM.
struct LmConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 128;
  std::size_t num_layers = 1;
  double lr = 1e-3;
  double clip_norm = 5.0;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 20;
  std::size_t patience = 2;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const LmConfig&) const = default;
};

// Multi-layer LSTM LM weights. Parameter order is fixed:
//   embedding [V, E]
//   lstm.<l>.weight [4H, in + H], lstm.<l>.bias [1, 4H]   (gate order i, f, g, o)
//   output.weight [V, H], output.bias [1, V]
class LmParams {
 public:
  LmParams() = default;
  LmParams(LmConfig config, std::vector<nn::Parameter> params);

  const LmConfig& config() const { return config_; }
  std::span<nn::Parameter> parameters() { return params_; }
  std::span<const nn::Parameter> parameters() const { return params_; }

  const nn::Tensor& embedding() const { return params_[0].value; }
  const nn::Tensor& lstm_weight(std::size_t layer) const { return params_[1 + 2 * layer].value; }
  const nn::Tensor& lstm_bias(std::size_t layer) const { return params_[2 + 2 * layer].value; }
  const nn::Tensor& output_weight() const { return params_[params_.size() - 2].value; }
  const nn::Tensor& output_bias() const { return params_.back().value; }

  std::size_t layer_input_dim(std::size_t layer) const {
    return layer == 0 ? config_.embed_dim : config_.hidden_dim;
  }

  bool all_finite() const;

 private:
  LmConfig config_;
  std::vector<nn::Parameter> params_;
};

// Expected parameter names and shapes for a config, in storage order.
std::vector<std::pair<std::string, nn::Shape>> lm_parameter_layout(const LmConfig& config);

// Per-layer hidden and cell vectors.
struct HiddenState {
  std::vector<std::vector<double>> h;
  std::vector<std::vector<double>> c;

  static HiddenState zeros(const LmConfig& config);
  bool operator==(const HiddenState&) const = default;
};

struct StepOutput {
  std::vector<double> log_probs;
  HiddenState state;
};

// Weights uniform in [-0.05, 0.05]; forget-gate biases 1.0.
LmParams init_lm(const LmConfig& config, std::mt19937_64& rng);
LmParams init_lm(const LmConfig& config);  // seeded from config.seed

// log p(. | history, token) and the advanced state.
StepOutput step_distribution(const LmParams& params, const HiddenState& state, TokenId token);

// Sum of log p(w_t | w_{1:t-1}) for t = 1..T, starting from BOS.
double sequence_log_prob(const LmParams& params, const TokenSequence& seq);

// Sum of log p over `suffix` given the context `prefix` (which includes BOS).
double conditional_log_prob(const LmParams& params, std::span<const TokenId> prefix,
                            std::span<const TokenId> suffix);

// Batched conditional_log_prob for many suffixes of equal length sharing one
// prefix.
std::vector<double> conditional_log_probs(const LmParams& params, std::span<const TokenId> prefix,
                                          std::span<const std::vector<TokenId>> suffixes);

// exp(-sum log p / sum T).
double perplexity(const LmParams& params, std::span<const Record> records);

struct Hypothesis {
  std::vector<TokenId> tokens;  // continuation only; may end early with EOS
  double log_prob = 0.0;

  bool operator==(const Hypothesis&) const = default;
};

// Breadth-first beam over content words and EOS. EOS is absorbing: a
// hypothesis that emits it keeps its score for the remaining steps. Ties are
// broken by lexicographic token order. Result is sorted best first.
std::vector<Hypothesis> beam_search(const LmParams& params, std::span<const TokenId> prefix,
                                    std::size_t continuation_len, std::size_t beam_width);

// ---- Training --------------------------------------------------------------

struct TrainingTrace {
  std::vector<double> train_loss;      // mean per-token loss per epoch
  std::vector<double> validation_ppl;  // after each epoch
  std::size_t best_epoch = 0;          // 1-based; 0 = initial weights
  double best_validation_ppl = 0.0;
};

struct TrainResult {
  LmParams params;
  TrainingTrace trace;
};

struct TokenBatch;

// Soft targets for one batch: soft_targets[t] is [batch, V] holding the
// supervision distribution for position t (rows of padded positions are
// ignored). Called once per batch in training order.
using SupervisionFn =
    std::function<void(const TokenBatch& batch, SoftTargets& soft_targets)>;

// Mixes per-position targets as (1 - teacher_weight) * onehot + teacher_weight * g.
struct Supervision {
  double teacher_weight = 0.0;
  SupervisionFn fill;
};

// Called with the records of each batch before it is trained on.
using BatchObserver = std::function<void(std::span<const Record* const> batch)>;

// Adam on the mean per-token loss, global-norm clipping, per-epoch validation
// perplexity, early stopping after `patience` epochs without improvement.
// Returns the best-validation checkpoint.
TrainResult train_lm(std::span<const Record> train, std::span<const Record> validation,
                     const LmConfig& config);

TrainResult train_supervised(std::span<const Record> train, std::span<const Record> validation,
                             const LmConfig& config, const Supervision* supervision,
                             const BatchObserver& observer = {});

}  // namespace altdistill
