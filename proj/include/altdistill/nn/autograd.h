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
#include <functional>
#include <vector>

#include "altdistill/nn/tensor.h"

namespace altdistill::nn {

// Reverse-mode tape over rank-2 tensors (scalars are 1x1). Every op computes
// its value eagerly and records a backward rule; backward() replays the rules
// in reverse and adds the results into the bound Parameters' grad tensors.
//
// This is the serial reference path. The LM training kernels do not go
// through the tape; tests compare them against it.
class Tape {
 public:
  struct Var {
    std::size_t id = 0;
  };

  Var constant(Tensor value);
  Var parameter(Parameter& p);

  Var matmul(Var a, Var b);     // [n,k] x [k,m]
  Var matmul_nt(Var a, Var b);  // [n,k] x [m,k]^T
  // Same shapes, or b a single row broadcast over the rows of a.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, std::size_t begin, std::size_t end);
  Var row_lookup(Var table, std::size_t row);
  Var log_softmax_rows(Var a);
  Var sum(Var a);

  // Scalar losses over a single row of log-probabilities.
  Var cross_entropy(Var log_probs, std::size_t target);
  Var kl_divergence(const Tensor& target, Var log_probs);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1. loss must be 1x1.
  void backward(Var loss);

 private:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  Var push(Tensor value, BackwardFn backward);
  Node& node(Var v) { return nodes_.at(v.id); }

  std::vector<Node> nodes_;
};

}  // namespace altdistill::nn
