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

#include <algorithm>

#include "altdistill/errors.h"
#include "altdistill/lm.h"
#include "altdistill/lm_kernels.h"

namespace altdistill {

namespace {

// Hypotheses that emitted EOS keep being extended with EOS so every beam
// entry has the same length; the padding is trimmed on output.
struct Beam {
  std::vector<TokenId> tokens;
  double score = 0.0;
  bool ended = false;
};

struct Candidate {
  double score;
  std::size_t parent;
  TokenId token;
};

}  // namespace

std::vector<Hypothesis> beam_search(const LmParams& params, std::span<const TokenId> prefix,
                                    std::size_t continuation_len, std::size_t beam_width) {
  if (beam_width < 1) throw UsageError("beam_width must be >= 1");
  if (continuation_len < 1) throw UsageError("continuation_len must be >= 1");
  if (prefix.empty()) throw UsageError("beam_search: empty prefix");
  const std::size_t V = params.config().vocab_size;

  BatchState state = BatchState::zeros(params.config(), 1);
  RowMatrix dist;
  for (TokenId tok : prefix) {
    const TokenId one[1] = {tok};
    lm_step(params, state, one, dist);
  }

  std::vector<Beam> beam(1);
  std::vector<Candidate> cands;
  for (std::size_t step = 0; step < continuation_len; ++step) {
    cands.clear();
    for (std::size_t i = 0; i < beam.size(); ++i) {
      if (beam[i].ended) {
        cands.push_back({beam[i].score, i, Vocabulary::kEos});
        continue;
      }
      for (std::size_t v = Vocabulary::kEos; v < V; ++v) {
        cands.push_back({beam[i].score + dist(Eigen::Index(i), Eigen::Index(v)), i, TokenId(v)});
      }
    }
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return beam[a.parent].tokens < beam[b.parent].tokens;
      return a.token < b.token;
    };
    const std::size_t keep = std::min(beam_width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + std::ptrdiff_t(keep), cands.end(), better);

    std::vector<Beam> next(keep);
    std::vector<std::size_t> parents(keep);
    std::vector<TokenId> fed(keep);
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = cands[k];
      next[k].tokens = beam[c.parent].tokens;
      next[k].tokens.push_back(c.token);
      next[k].score = c.score;
      next[k].ended = c.token == Vocabulary::kEos;
      parents[k] = c.parent;
      fed[k] = c.token;
    }
    beam = std::move(next);
    if (step + 1 < continuation_len) {
      state = state.gather(parents);
      lm_step(params, state, fed, dist);
    }
  }

  std::vector<Hypothesis> out;
  out.reserve(beam.size());
  for (auto& b : beam) {
    auto eos = std::find(b.tokens.begin(), b.tokens.end(), Vocabulary::kEos);
    if (eos != b.tokens.end()) b.tokens.erase(eos + 1, b.tokens.end());
    out.push_back({std::move(b.tokens), b.score});
  }
  return out;
}

}  // namespace altdistill
