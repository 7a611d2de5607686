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

#include "altdistill/lm_reference.h"

#include "altdistill/errors.h"
#include "altdistill/nn/autograd.h"

namespace altdistill {

namespace {

struct ReferenceGraph {
  nn::Tape tape;
  std::vector<nn::Tape::Var> log_probs;  // one [1, V] row per position
};

// Builds the unrolled graph. Parameters are bound when `bind` is set,
// otherwise copied in as constants.
void build(LmParams& params, const TokenSequence& seq, bool bind, ReferenceGraph& g) {
  const LmConfig& cfg = params.config();
  validate_sequence(seq, cfg.vocab_size);
  auto ps = params.parameters();
  auto var = [&](std::size_t k) {
    return bind ? g.tape.parameter(ps[k]) : g.tape.constant(ps[k].value);
  };

  const auto emb = var(0);
  std::vector<nn::Tape::Var> W, b;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    W.push_back(var(1 + 2 * l));
    b.push_back(var(2 + 2 * l));
  }
  const auto w_out = var(ps.size() - 2);
  const auto b_out = var(ps.size() - 1);

  const std::size_t H = cfg.hidden_dim;
  std::vector<nn::Tape::Var> h, c;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    h.push_back(g.tape.constant(nn::Tensor::matrix(1, H)));
    c.push_back(g.tape.constant(nn::Tensor::matrix(1, H)));
  }

  for (std::size_t t = 0; t + 1 < seq.ids.size(); ++t) {
    auto x = g.tape.row_lookup(emb, std::size_t(seq.ids[t]));
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
      auto z = g.tape.add(g.tape.matmul_nt(g.tape.concat_cols(x, h[l]), W[l]), b[l]);
      auto i = g.tape.sigmoid(g.tape.slice_cols(z, 0, H));
      auto f = g.tape.sigmoid(g.tape.slice_cols(z, H, 2 * H));
      auto gg = g.tape.tanh(g.tape.slice_cols(z, 2 * H, 3 * H));
      auto o = g.tape.sigmoid(g.tape.slice_cols(z, 3 * H, 4 * H));
      c[l] = g.tape.add(g.tape.mul(f, c[l]), g.tape.mul(i, gg));
      h[l] = g.tape.mul(o, g.tape.tanh(c[l]));
      x = h[l];
    }
    auto logits = g.tape.add(g.tape.matmul_nt(x, w_out), b_out);
    g.log_probs.push_back(g.tape.log_softmax_rows(logits));
  }
}

}  // namespace

std::vector<std::vector<double>> reference_log_probs(const LmParams& params,
                                                     const TokenSequence& seq) {
  ReferenceGraph g;
  LmParams copy = params;
  build(copy, seq, /*bind=*/false, g);
  std::vector<std::vector<double>> out;
  for (auto v : g.log_probs) {
    const auto vals = g.tape.value(v).values();
    out.emplace_back(vals.begin(), vals.end());
  }
  return out;
}

double reference_loss(LmParams& params, const TokenSequence& seq,
                      std::span<const std::vector<double>> soft_targets, double teacher_weight,
                      bool with_grad) {
  ReferenceGraph g;
  build(params, seq, with_grad, g);
  const std::size_t V = params.config().vocab_size;
  if (teacher_weight != 0.0 && soft_targets.size() != g.log_probs.size()) {
    throw UsageError("reference_loss: need one soft target per position");
  }

  std::vector<nn::Tape::Var> terms;
  for (std::size_t t = 0; t < g.log_probs.size(); ++t) {
    const auto target = std::size_t(seq.ids[t + 1]);
    auto ce = g.tape.cross_entropy(g.log_probs[t], target);
    if (teacher_weight == 0.0) {
      terms.push_back(ce);
      continue;
    }
    nn::Tensor gt({1, V}, soft_targets[t]);
    auto kl = g.tape.kl_divergence(gt, g.log_probs[t]);
    terms.push_back(g.tape.add(g.tape.scale(ce, 1.0 - teacher_weight),
                               g.tape.scale(kl, teacher_weight)));
  }
  auto total = terms.front();
  for (std::size_t k = 1; k < terms.size(); ++k) total = g.tape.add(total, terms[k]);
  if (with_grad) g.tape.backward(total);
  return g.tape.value(total)[0];
}

}  // namespace altdistill
