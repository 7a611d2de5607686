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

#include "altdistill/lm_kernels.h"

#include <algorithm>
#include <cmath>

#include "altdistill/errors.h"
#include "altdistill/nn/losses.h"

namespace altdistill {

namespace {

// Below this many scalar updates a parallel region costs more than it saves.
constexpr std::ptrdiff_t kParallelGrain = 1 << 14;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ConstMatrixMap as_matrix(const nn::Tensor& t) {
  return ConstMatrixMap(t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols()));
}

MatrixMap as_matrix(nn::Tensor& t) {
  return MatrixMap(t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols()));
}

Eigen::Map<const Eigen::RowVectorXd> as_row(const nn::Tensor& t) {
  return Eigen::Map<const Eigen::RowVectorXd>(t.data(), Eigen::Index(t.size()));
}

Eigen::Map<Eigen::RowVectorXd> as_row(nn::Tensor& t) {
  return Eigen::Map<Eigen::RowVectorXd>(t.data(), Eigen::Index(t.size()));
}

void check_token(TokenId token, std::size_t vocab_size) {
  if (token < 0 || std::size_t(token) >= vocab_size) {
    throw DataError("invalid token id " + std::to_string(token));
  }
}

// Applies the gate nonlinearities to z in place and advances one step of the
// cell. Rows are independent.
void cell_forward(Eigen::Ref<RowMatrix> z, const Eigen::Ref<const RowMatrix>& c_prev,
                  Eigen::Ref<RowMatrix> c, Eigen::Ref<RowMatrix> tanh_c, Eigen::Ref<RowMatrix> h) {
  const std::ptrdiff_t rows = z.rows();
  const std::ptrdiff_t H = c.cols();
#pragma omp parallel for schedule(static) if (rows * H > kParallelGrain)
  for (std::ptrdiff_t b = 0; b < rows; ++b) {
    double* zr = z.row(b).data();
    for (std::ptrdiff_t j = 0; j < H; ++j) {
      const double i = sigmoid(zr[j]);
      const double f = sigmoid(zr[H + j]);
      const double g = std::tanh(zr[2 * H + j]);
      const double o = sigmoid(zr[3 * H + j]);
      zr[j] = i;
      zr[H + j] = f;
      zr[2 * H + j] = g;
      zr[3 * H + j] = o;
      const double cv = f * c_prev(b, j) + i * g;
      const double tc = std::tanh(cv);
      c(b, j) = cv;
      tanh_c(b, j) = tc;
      h(b, j) = o * tc;
    }
  }
}

}  // namespace

TokenBatch TokenBatch::from_sequences(std::span<const TokenSequence* const> sequences) {
  TokenBatch batch;
  batch.batch_size = sequences.size();
  for (const auto* s : sequences) batch.steps = std::max(batch.steps, s->length());
  const std::size_t n = batch.steps * batch.batch_size;
  batch.inputs.assign(n, Vocabulary::kEos);
  batch.targets.assign(n, Vocabulary::kEos);
  batch.mask.assign(n, 0);
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    const auto& ids = sequences[b]->ids;
    for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
      const std::size_t k = batch.index(t, b);
      batch.inputs[k] = ids[t];
      batch.targets[k] = ids[t + 1];
      batch.mask[k] = 1;
      ++batch.num_tokens;
    }
  }
  return batch;
}

void log_softmax_rows(RowMatrix& logits) {
  const std::ptrdiff_t rows = logits.rows();
#pragma omp parallel for schedule(static) if (rows * logits.cols() > kParallelGrain)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    auto row = logits.row(r);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    row.array() -= lse;
  }
}

void lm_project(const LmParams& params, const Eigen::Ref<const RowMatrix>& hidden,
                RowMatrix& log_probs) {
  const auto W = as_matrix(params.output_weight());
  log_probs.resize(hidden.rows(), W.rows());
  log_probs.noalias() = hidden * W.transpose();
  log_probs.rowwise() += as_row(params.output_bias());
  log_softmax_rows(log_probs);
}

void lm_forward(const LmParams& params, const TokenBatch& batch, ForwardCache& cache,
                bool with_outputs) {
  const LmConfig& cfg = params.config();
  const Eigen::Index B = Eigen::Index(batch.batch_size);
  const Eigen::Index T = Eigen::Index(batch.steps);
  const Eigen::Index H = Eigen::Index(cfg.hidden_dim);
  cache.layers.resize(cfg.num_layers);

  const auto emb = as_matrix(params.embedding());
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    LayerCache& lc = cache.layers[l];
    const Eigen::Index in = Eigen::Index(params.layer_input_dim(l));
    const auto W = as_matrix(params.lstm_weight(l));
    const auto Wx = W.leftCols(in);
    const auto Wh = W.rightCols(H);

    lc.xh.resize(T * B, in);
    if (l == 0) {
      for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index b = 0; b < B; ++b) {
          const TokenId tok = batch.input(std::size_t(t), std::size_t(b));
          check_token(tok, cfg.vocab_size);
          lc.xh.row(t * B + b) = emb.row(tok);
        }
    } else {
      lc.xh = cache.layers[l - 1].h.bottomRows(T * B);
    }

    lc.gates.resize(T * B, 4 * H);
    lc.gates.noalias() = lc.xh * Wx.transpose();
    lc.gates.rowwise() += as_row(params.lstm_bias(l));
    lc.c.setZero((T + 1) * B, H);
    lc.h.setZero((T + 1) * B, H);
    lc.tanh_c.resize(T * B, H);
    for (Eigen::Index t = 0; t < T; ++t) {
      auto z = lc.gates.middleRows(t * B, B);
      if (t > 0) z.noalias() += lc.h.middleRows(t * B, B) * Wh.transpose();
      cell_forward(z, lc.c.middleRows(t * B, B), lc.c.middleRows((t + 1) * B, B),
                   lc.tanh_c.middleRows(t * B, B), lc.h.middleRows((t + 1) * B, B));
    }
  }
  if (with_outputs) lm_project(params, cache.layers.back().h.bottomRows(T * B), cache.log_probs);
}

void lm_backward(LmParams& params, const TokenBatch& batch, const ForwardCache& cache,
                 const RowMatrix& dlogits) {
  const LmConfig& cfg = params.config();
  const Eigen::Index B = Eigen::Index(batch.batch_size);
  const Eigen::Index T = Eigen::Index(batch.steps);
  const Eigen::Index H = Eigen::Index(cfg.hidden_dim);
  auto grads = params.parameters();
  const std::size_t n = grads.size();

  const auto Wout = as_matrix(params.output_weight());
  const auto top = cache.layers.back().h.bottomRows(T * B);
  as_matrix(grads[n - 2].grad).noalias() += dlogits.transpose() * top;
  as_row(grads[n - 1].grad) += dlogits.colwise().sum();
  RowMatrix dh_in = dlogits * Wout;  // [T*B, H]

  RowMatrix dz(T * B, 4 * H);
  RowMatrix dh_next(B, H), dc_next(B, H);
  for (std::size_t l = cfg.num_layers; l-- > 0;) {
    const LayerCache& lc = cache.layers[l];
    const Eigen::Index in = Eigen::Index(params.layer_input_dim(l));
    const auto W = as_matrix(params.lstm_weight(l));
    const auto Wh = W.rightCols(H);
    dh_next.setZero();
    dc_next.setZero();

    for (Eigen::Index t = T; t-- > 0;) {
      const Eigen::Index r0 = t * B;
#pragma omp parallel for schedule(static) if (B * H > kParallelGrain)
      for (Eigen::Index b = 0; b < B; ++b) {
        const double* g = lc.gates.row(r0 + b).data();
        double* d = dz.row(r0 + b).data();
        for (Eigen::Index j = 0; j < H; ++j) {
          const double i = g[j], f = g[H + j], gg = g[2 * H + j], o = g[3 * H + j];
          const double tc = lc.tanh_c(r0 + b, j);
          const double c_prev = lc.c(r0 + b, j);
          const double dh = dh_in(r0 + b, j) + dh_next(b, j);
          const double dc = dc_next(b, j) + dh * o * (1.0 - tc * tc);
          d[j] = dc * gg * i * (1.0 - i);
          d[H + j] = dc * c_prev * f * (1.0 - f);
          d[2 * H + j] = dc * i * (1.0 - gg * gg);
          d[3 * H + j] = dh * tc * o * (1.0 - o);
          dc_next(b, j) = dc * f;
        }
      }
      if (t > 0) dh_next.noalias() = dz.middleRows(r0, B) * Wh;
    }

    auto dW = as_matrix(grads[1 + 2 * l].grad);
    dW.leftCols(in).noalias() += dz.transpose() * lc.xh;
    dW.rightCols(H).noalias() += dz.transpose() * lc.h.topRows(T * B);
    as_row(grads[2 + 2 * l].grad) += dz.colwise().sum();
    RowMatrix dx = dz * W.leftCols(in);  // [T*B, in]
    if (l > 0) {
      dh_in = std::move(dx);
    } else {
      auto dEmb = as_matrix(grads[0].grad);
      for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index b = 0; b < B; ++b) {
          dEmb.row(batch.input(std::size_t(t), std::size_t(b))) += dx.row(t * B + b);
        }
    }
  }
}

BatchState BatchState::zeros(const LmConfig& config, std::size_t rows) {
  BatchState s;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    s.h.push_back(RowMatrix::Zero(Eigen::Index(rows), Eigen::Index(config.hidden_dim)));
    s.c.push_back(RowMatrix::Zero(Eigen::Index(rows), Eigen::Index(config.hidden_dim)));
  }
  return s;
}

BatchState BatchState::gather(std::span<const std::size_t> source) const {
  BatchState out;
  for (std::size_t l = 0; l < h.size(); ++l) {
    RowMatrix nh(Eigen::Index(source.size()), h[l].cols());
    RowMatrix nc(Eigen::Index(source.size()), c[l].cols());
    for (std::size_t i = 0; i < source.size(); ++i) {
      nh.row(Eigen::Index(i)) = h[l].row(Eigen::Index(source[i]));
      nc.row(Eigen::Index(i)) = c[l].row(Eigen::Index(source[i]));
    }
    out.h.push_back(std::move(nh));
    out.c.push_back(std::move(nc));
  }
  return out;
}

void lm_step(const LmParams& params, BatchState& state, std::span<const TokenId> tokens,
             RowMatrix& log_probs) {
  const LmConfig& cfg = params.config();
  const Eigen::Index R = Eigen::Index(tokens.size());
  const Eigen::Index H = Eigen::Index(cfg.hidden_dim);
  if (state.rows() != tokens.size()) {
    throw UsageError("lm_step: state has " + std::to_string(state.rows()) + " rows but got " +
                     std::to_string(tokens.size()) + " tokens");
  }
  const auto emb = as_matrix(params.embedding());
  RowMatrix x(R, Eigen::Index(cfg.embed_dim));
  for (Eigen::Index r = 0; r < R; ++r) {
    check_token(tokens[std::size_t(r)], cfg.vocab_size);
    x.row(r) = emb.row(tokens[std::size_t(r)]);
  }
  RowMatrix z, c_new(R, H), tanh_c(R, H), h_new(R, H);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const Eigen::Index in = Eigen::Index(params.layer_input_dim(l));
    const auto W = as_matrix(params.lstm_weight(l));
    z.resize(R, 4 * H);
    z.noalias() = x * W.leftCols(in).transpose();
    z.noalias() += state.h[l] * W.rightCols(H).transpose();
    z.rowwise() += as_row(params.lstm_bias(l));
    cell_forward(z, state.c[l], c_new, tanh_c, h_new);
    state.c[l] = c_new;
    state.h[l] = h_new;
    x = h_new;
  }
  lm_project(params, x, log_probs);
}

double lm_batch_objective(const TokenBatch& batch, const ForwardCache& cache,
                          const SoftTargets* soft, double teacher_weight,
                          RowMatrix* dlogits) {
  const double w = soft ? teacher_weight : 0.0;
  const std::size_t V = std::size_t(cache.log_probs.cols());
  const std::ptrdiff_t rows = std::ptrdiff_t(batch.steps * batch.batch_size);
  if (cache.log_probs.rows() != rows) throw UsageError("forward cache does not match batch");
  if (dlogits) dlogits->resize(rows, Eigen::Index(V));
  std::vector<double> row_loss(std::size_t(rows), 0.0);
  const double scale = 1.0 / double(batch.num_tokens);
  int bad_target = 0;
#pragma omp parallel for schedule(static) reduction(| : bad_target)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t t = std::size_t(r) / batch.batch_size;
    const std::size_t b = std::size_t(r) % batch.batch_size;
    if (!batch.valid(t, b)) {
      if (dlogits) dlogits->row(r).setZero();
      continue;
    }
    const double* lp = cache.log_probs.row(r).data();
    const TokenId y = batch.target(t, b);
    double loss = -lp[y];
    if (w > 0.0) {
      const double* g = (*soft)[t].data() + b * V;
      double kl = 0.0, mass = 0.0;
      for (std::size_t v = 0; v < V; ++v) {
        if (g[v] < 0.0) bad_target = 1;
        mass += g[v];
        if (g[v] > 0.0) kl += g[v] * (std::log(g[v]) - lp[v]);
      }
      if (std::abs(mass - 1.0) > nn::kProbSumTolerance) bad_target = 1;
      loss = (1.0 - w) * loss + w * kl;
      if (dlogits) {
        auto d = dlogits->row(r);
        for (std::size_t v = 0; v < V; ++v) {
          d[Eigen::Index(v)] = (std::exp(lp[v]) - w * g[v]) * scale;
        }
        d[y] -= (1.0 - w) * scale;
      }
    } else if (dlogits) {
      auto d = dlogits->row(r);
      for (std::size_t v = 0; v < V; ++v) d[Eigen::Index(v)] = std::exp(lp[v]) * scale;
      d[y] -= scale;
    }
    row_loss[std::size_t(r)] = loss;
  }
  if (bad_target) throw UsageError("supervision target is not a probability distribution");
  double total = 0.0;
  for (double l : row_loss) total += l;
  return total * scale;
}

}  // namespace altdistill
