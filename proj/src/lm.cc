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

#include "altdistill/lm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "altdistill/errors.h"
#include "altdistill/lm_kernels.h"
#include "altdistill/nn/adam.h"
#include "altdistill/nn/losses.h"

namespace altdistill {

namespace {

constexpr std::size_t kScoringBatch = 64;
constexpr std::size_t kSuffixChunk = 512;

BatchState to_batch_state(const HiddenState& s) {
  BatchState out;
  for (std::size_t l = 0; l < s.h.size(); ++l) {
    const auto H = Eigen::Index(s.h[l].size());
    out.h.push_back(Eigen::Map<const RowMatrix>(s.h[l].data(), 1, H));
    out.c.push_back(Eigen::Map<const RowMatrix>(s.c[l].data(), 1, H));
  }
  return out;
}

HiddenState to_hidden_state(const BatchState& s) {
  HiddenState out;
  for (std::size_t l = 0; l < s.h.size(); ++l) {
    out.h.emplace_back(s.h[l].data(), s.h[l].data() + s.h[l].size());
    out.c.emplace_back(s.c[l].data(), s.c[l].data() + s.c[l].size());
  }
  return out;
}

}  // namespace

void LmConfig::validate() const {
  if (vocab_size < Vocabulary::kNumSpecials + 1) throw UsageError("vocab_size must be >= 4");
  if (embed_dim < 1 || hidden_dim < 1 || num_layers < 1) {
    throw UsageError("LM dimensions must be >= 1");
  }
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (patience < 1) throw UsageError("patience must be >= 1");
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
  if (!(clip_norm > 0.0)) throw UsageError("clip_norm must be positive");
}

std::vector<std::pair<std::string, nn::Shape>> lm_parameter_layout(const LmConfig& c) {
  std::vector<std::pair<std::string, nn::Shape>> out;
  out.push_back({"embedding", {c.vocab_size, c.embed_dim}});
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const std::size_t in = l == 0 ? c.embed_dim : c.hidden_dim;
    const std::string p = "lstm." + std::to_string(l);
    out.push_back({p + ".weight", {4 * c.hidden_dim, in + c.hidden_dim}});
    out.push_back({p + ".bias", {1, 4 * c.hidden_dim}});
  }
  out.push_back({"output.weight", {c.vocab_size, c.hidden_dim}});
  out.push_back({"output.bias", {1, c.vocab_size}});
  return out;
}

LmParams::LmParams(LmConfig config, std::vector<nn::Parameter> params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const auto layout = lm_parameter_layout(config_);
  if (layout.size() != params_.size()) {
    throw DataError("LM expects " + std::to_string(layout.size()) + " parameter blocks, got " +
                    std::to_string(params_.size()));
  }
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (params_[k].name != layout[k].first || params_[k].value.shape() != layout[k].second) {
      throw DataError("LM parameter " + std::to_string(k) + " is " + params_[k].name + " " +
                      nn::shape_string(params_[k].value.shape()) + ", expected " +
                      layout[k].first + " " + nn::shape_string(layout[k].second));
    }
    if (params_[k].grad.shape() != params_[k].value.shape()) {
      params_[k].grad = nn::Tensor(params_[k].value.shape());
    }
  }
}

bool LmParams::all_finite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](const nn::Parameter& p) { return p.value.all_finite(); });
}

HiddenState HiddenState::zeros(const LmConfig& config) {
  HiddenState s;
  s.h.assign(config.num_layers, std::vector<double>(config.hidden_dim, 0.0));
  s.c.assign(config.num_layers, std::vector<double>(config.hidden_dim, 0.0));
  return s;
}

LmParams init_lm(const LmConfig& config, std::mt19937_64& rng) {
  config.validate();
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<nn::Parameter> params;
  for (auto& [name, shape] : lm_parameter_layout(config)) {
    nn::Tensor t(shape);
    for (auto& x : t.values()) x = u(rng);
    params.emplace_back(name, std::move(t));
  }
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    auto& bias = params[2 + 2 * l].value;
    for (std::size_t j = config.hidden_dim; j < 2 * config.hidden_dim; ++j) bias[j] = 1.0;
  }
  return LmParams(config, std::move(params));
}

LmParams init_lm(const LmConfig& config) {
  std::mt19937_64 rng(config.seed);
  return init_lm(config, rng);
}

StepOutput step_distribution(const LmParams& params, const HiddenState& state, TokenId token) {
  BatchState bs = to_batch_state(state);
  RowMatrix lp;
  const TokenId tokens[1] = {token};
  lm_step(params, bs, tokens, lp);
  return {std::vector<double>(lp.data(), lp.data() + lp.size()), to_hidden_state(bs)};
}

std::vector<double> conditional_log_probs(const LmParams& params, std::span<const TokenId> prefix,
                                          std::span<const std::vector<TokenId>> suffixes) {
  if (prefix.empty()) throw UsageError("conditional_log_probs: empty prefix");
  BatchState state = BatchState::zeros(params.config(), 1);
  RowMatrix first;
  for (TokenId tok : prefix) {
    const TokenId one[1] = {tok};
    lm_step(params, state, one, first);
  }

  std::vector<double> out(suffixes.size(), 0.0);
  if (suffixes.empty()) return out;
  const std::size_t len = suffixes.front().size();
  for (const auto& s : suffixes) {
    if (s.size() != len) throw UsageError("conditional_log_probs: suffix lengths differ");
  }

  for (std::size_t begin = 0; begin < suffixes.size(); begin += kSuffixChunk) {
    const std::size_t n = std::min(kSuffixChunk, suffixes.size() - begin);
    std::vector<std::size_t> zero_rows(n, 0);
    BatchState chunk = state.gather(zero_rows);
    RowMatrix dist = first.replicate(Eigen::Index(n), 1);
    std::vector<TokenId> tokens(n);
    for (std::size_t k = 0; k < len; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const TokenId tok = suffixes[begin + i][k];
        if (tok < 0 || std::size_t(tok) >= params.config().vocab_size) {
          throw DataError("invalid token id " + std::to_string(tok));
        }
        out[begin + i] += dist(Eigen::Index(i), tok);
        tokens[i] = tok;
      }
      if (k + 1 < len) lm_step(params, chunk, tokens, dist);
    }
  }
  return out;
}

double conditional_log_prob(const LmParams& params, std::span<const TokenId> prefix,
                            std::span<const TokenId> suffix) {
  const std::vector<TokenId> s(suffix.begin(), suffix.end());
  return conditional_log_probs(params, prefix, std::span<const std::vector<TokenId>>(&s, 1))[0];
}

double sequence_log_prob(const LmParams& params, const TokenSequence& seq) {
  validate_sequence(seq, params.config().vocab_size);
  return conditional_log_prob(params, std::span<const TokenId>(seq.ids).first(1),
                              std::span<const TokenId>(seq.ids).subspan(1));
}

double perplexity(const LmParams& params, std::span<const Record> records) {
  if (records.empty()) throw UsageError("perplexity of an empty record set");
  double total = 0.0;
  std::size_t tokens = 0;
  ForwardCache cache;
  std::vector<const TokenSequence*> seqs;
  for (std::size_t begin = 0; begin < records.size(); begin += kScoringBatch) {
    const std::size_t n = std::min(kScoringBatch, records.size() - begin);
    seqs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      validate_sequence(records[begin + i].tokens, params.config().vocab_size);
      seqs.push_back(&records[begin + i].tokens);
    }
    const TokenBatch batch = TokenBatch::from_sequences(seqs);
    lm_forward(params, batch, cache);
    for (std::size_t t = 0; t < batch.steps; ++t)
      for (std::size_t b = 0; b < batch.batch_size; ++b) {
        if (!batch.valid(t, b)) continue;
        total += cache.log_probs(Eigen::Index(batch.index(t, b)), batch.target(t, b));
      }
    tokens += batch.num_tokens;
  }
  return std::exp(-total / double(tokens));
}

TrainResult train_lm(std::span<const Record> train, std::span<const Record> validation,
                     const LmConfig& config) {
  return train_supervised(train, validation, config, nullptr);
}

TrainResult train_supervised(std::span<const Record> train, std::span<const Record> validation,
                             const LmConfig& config, const Supervision* supervision,
                             const BatchObserver& observer) {
  config.validate();
  if (train.empty() || validation.empty()) {
    throw DataError("training needs a non-empty corpus and validation set");
  }
  for (const auto& r : train) validate_sequence(r.tokens, config.vocab_size);
  const double w = supervision ? supervision->teacher_weight : 0.0;
  if (!(w >= 0.0 && w <= 1.0)) throw UsageError("teacher weight must be in [0, 1]");
  const std::size_t V = config.vocab_size;

  std::mt19937_64 init_rng(config.seed);
  LmParams params = init_lm(config, init_rng);
  std::mt19937_64 order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  nn::AdamState adam(params.parameters(), nn::AdamOptions{.lr = config.lr});

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result{params, {}};
  result.trace.best_validation_ppl = std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;

  ForwardCache cache;
  RowMatrix dlogits;
  SoftTargets soft;
  std::vector<const Record*> batch_records;
  std::vector<const TokenSequence*> batch_seqs;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;

    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - begin);
      batch_records.clear();
      batch_seqs.clear();
      for (std::size_t i = 0; i < n; ++i) {
        batch_records.push_back(&train[order[begin + i]]);
        batch_seqs.push_back(&train[order[begin + i]].tokens);
      }
      if (observer) observer(batch_records);
      const TokenBatch batch = TokenBatch::from_sequences(batch_seqs);
      lm_forward(params, batch, cache);
      if (w > 0.0) {
        soft.assign(batch.steps, nn::AlignedValues(batch.batch_size * V, 0.0));
        supervision->fill(batch, soft);
      }

      const double mean_loss = lm_batch_objective(batch, cache, w > 0.0 ? &soft : nullptr, w,
                                                  &dlogits);
      const double batch_loss = mean_loss * double(batch.num_tokens);
      if (!std::isfinite(batch_loss)) throw NumericalError("training diverged (non-finite loss)");
      epoch_loss += batch_loss;
      epoch_tokens += batch.num_tokens;

      lm_backward(params, batch, cache, dlogits);
      nn::clip_global_norm(params.parameters(), config.clip_norm);
      nn::adam_step(params.parameters(), adam);
    }

    const double val_ppl = perplexity(params, validation);
    if (!std::isfinite(val_ppl)) throw NumericalError("training diverged (validation PPL)");
    result.trace.train_loss.push_back(epoch_loss / double(epoch_tokens));
    result.trace.validation_ppl.push_back(val_ppl);
    if (val_ppl < result.trace.best_validation_ppl) {
      result.trace.best_validation_ppl = val_ppl;
      result.trace.best_epoch = epoch;
      result.params = params;
      stale_epochs = 0;
    } else if (++stale_epochs >= config.patience) {
      break;
    }
  }
  nn::zero_grads(result.params.parameters());
  return result;
}

}  // namespace altdistill
