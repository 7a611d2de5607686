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

#include "altdistill/nn/autograd.h"

#include <cmath>

#include "altdistill/errors.h"
#include "altdistill/nn/losses.h"

namespace altdistill::nn {

namespace {

void require(bool ok, const char* op, const Tensor& a, const Tensor& b) {
  if (!ok) {
    throw UsageError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_matrix(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw UsageError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tape::Var Tape::push(Tensor value, BackwardFn backward) {
  Node n;
  n.grad = Tensor(value.shape());
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Tape::Var Tape::constant(Tensor value) {
  require_matrix(value, "constant");
  return push(std::move(value), nullptr);
}

Tape::Var Tape::parameter(Parameter& p) {
  require_matrix(p.value, "parameter");
  Var v = push(p.value, nullptr);
  node(v).param = &p;
  return v;
}

Tape::Var Tape::matmul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_matrix(A, "matmul");
  require_matrix(B, "matmul");
  require(A.cols() == B.rows(), "matmul", A, B);
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Tensor out = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < m; ++j) out.at(i, j) += A.at(i, p) * B.at(p, j);
  return push(std::move(out), [a, b, n, k, m](Tape& t, std::size_t self) {
    const Tensor& G = t.nodes_[self].grad;
    const Tensor& A = t.nodes_[a.id].value;
    const Tensor& B = t.nodes_[b.id].value;
    Tensor& dA = t.nodes_[a.id].grad;
    Tensor& dB = t.nodes_[b.id].grad;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < m; ++j) {
          dA.at(i, p) += G.at(i, j) * B.at(p, j);
          dB.at(p, j) += A.at(i, p) * G.at(i, j);
        }
  });
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_matrix(A, "matmul_nt");
  require_matrix(B, "matmul_nt");
  require(A.cols() == B.cols(), "matmul_nt", A, B);
  const std::size_t n = A.rows(), k = A.cols(), m = B.rows();
  Tensor out = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += A.at(i, p) * B.at(j, p);
      out.at(i, j) = s;
    }
  return push(std::move(out), [a, b, n, k, m](Tape& t, std::size_t self) {
    const Tensor& G = t.nodes_[self].grad;
    const Tensor& A = t.nodes_[a.id].value;
    const Tensor& B = t.nodes_[b.id].value;
    Tensor& dA = t.nodes_[a.id].grad;
    Tensor& dB = t.nodes_[b.id].grad;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t p = 0; p < k; ++p) {
          dA.at(i, p) += G.at(i, j) * B.at(j, p);
          dB.at(j, p) += G.at(i, j) * A.at(i, p);
        }
  });
}

Tape::Var Tape::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  const bool same = A.shape() == B.shape();
  const bool row_broadcast = B.rank() == 2 && B.rows() == 1 && A.rank() == 2 && B.cols() == A.cols();
  require(same || row_broadcast, "add", A, B);
  Tensor out = A;
  const std::size_t cols = A.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += same ? B[i] : B[i % cols];
  return push(std::move(out), [a, b, same, cols](Tape& t, std::size_t self) {
    const Tensor& G = t.nodes_[self].grad;
    Tensor& dA = t.nodes_[a.id].grad;
    Tensor& dB = t.nodes_[b.id].grad;
    for (std::size_t i = 0; i < G.size(); ++i) {
      dA[i] += G[i];
      dB[same ? i : i % cols] += G[i];
    }
  });
}

Tape::Var Tape::mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require(A.shape() == B.shape(), "mul", A, B);
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return push(std::move(out), [a, b](Tape& t, std::size_t self) {
    const Tensor& G = t.nodes_[self].grad;
    const Tensor& A = t.nodes_[a.id].value;
    const Tensor& B = t.nodes_[b.id].value;
    Tensor& dA = t.nodes_[a.id].grad;
    Tensor& dB = t.nodes_[b.id].grad;
    for (std::size_t i = 0; i < G.size(); ++i) {
      dA[i] += G[i] * B[i];
      dB[i] += G[i] * A[i];
    }
  });
}

Tape::Var Tape::scale(Var a, double s) {
  Tensor out = value(a);
  for (auto& x : out.values()) x *= s;
  return push(std::move(out), [a, s](Tape& t, std::size_t self) {
    const Tensor& G = t.nodes_[self].grad;
    Tensor& dA = t.nodes_[a.id].grad;
    for (std::size_t i = 0; i < G.size(); ++i) dA[i] += s * G[i];
  });
}

Tape::Var Tape::sigmoid(Var a) {
  Tensor out = value(a);
  for (auto& x : out.values()) x = sigmoid_scalar(x);
  return push(std::move(out), [a](Tape& t, std::size_t self) {
    const Tensor& G = t.nodes_[self].grad;
    const Tensor& Y = t.nodes_[self].value;
    Tensor& dA = t.nodes_[a.id].grad;
    for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * Y[i] * (1.0 - Y[i]);
  });
}

Tape::Var Tape::tanh(Var a) {
  Tensor out = value(a);
  for (auto& x : out.values()) x = std::tanh(x);
  return push(std::move(out), [a](Tape& t, std::size_t self) {
    const Tensor& G = t.nodes_[self].grad;
    const Tensor& Y = t.nodes_[self].value;
    Tensor& dA = t.nodes_[a.id].grad;
    for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * (1.0 - Y[i] * Y[i]);
  });
}

Tape::Var Tape::concat_cols(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_matrix(A, "concat_cols");
  require_matrix(B, "concat_cols");
  require(A.rows() == B.rows(), "concat_cols", A, B);
  const std::size_t n = A.rows(), ca = A.cols(), cb = B.cols();
  Tensor out = Tensor::matrix(n, ca + cb);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out.at(i, j) = A.at(i, j);
    for (std::size_t j = 0; j < cb; ++j) out.at(i, ca + j) = B.at(i, j);
  }
  return push(std::move(out), [a, b, n, ca, cb](Tape& t, std::size_t self) {
    const Tensor& G = t.nodes_[self].grad;
    Tensor& dA = t.nodes_[a.id].grad;
    Tensor& dB = t.nodes_[b.id].grad;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < ca; ++j) dA.at(i, j) += G.at(i, j);
      for (std::size_t j = 0; j < cb; ++j) dB.at(i, j) += G.at(i, ca + j);
    }
  });
}

Tape::Var Tape::slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& A = value(a);
  require_matrix(A, "slice_cols");
  if (begin >= end || end > A.cols()) {
    throw UsageError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for " + shape_string(A.shape()));
  }
  const std::size_t n = A.rows(), w = end - begin;
  Tensor out = Tensor::matrix(n, w);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < w; ++j) out.at(i, j) = A.at(i, begin + j);
  return push(std::move(out), [a, begin, n, w](Tape& t, std::size_t self) {
    const Tensor& G = t.nodes_[self].grad;
    Tensor& dA = t.nodes_[a.id].grad;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) dA.at(i, begin + j) += G.at(i, j);
  });
}

Tape::Var Tape::row_lookup(Var table, std::size_t row) {
  const Tensor& T = value(table);
  require_matrix(T, "row_lookup");
  if (row >= T.rows()) {
    throw DataError("row_lookup: row " + std::to_string(row) + " out of range for " +
                    shape_string(T.shape()));
  }
  const std::size_t w = T.cols();
  Tensor out = Tensor::matrix(1, w);
  for (std::size_t j = 0; j < w; ++j) out[j] = T.at(row, j);
  return push(std::move(out), [table, row, w](Tape& t, std::size_t self) {
    const Tensor& G = t.nodes_[self].grad;
    Tensor& dT = t.nodes_[table.id].grad;
    for (std::size_t j = 0; j < w; ++j) dT.at(row, j) += G[j];
  });
}

Tape::Var Tape::log_softmax_rows(Var a) {
  const Tensor& A = value(a);
  require_matrix(A, "log_softmax_rows");
  const std::size_t n = A.rows(), m = A.cols();
  Tensor out = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    log_softmax(A.values().subspan(i * m, m), out.values().subspan(i * m, m));
  }
  return push(std::move(out), [a, n, m](Tape& t, std::size_t self) {
    const Tensor& G = t.nodes_[self].grad;
    const Tensor& Y = t.nodes_[self].value;
    Tensor& dA = t.nodes_[a.id].grad;
    for (std::size_t i = 0; i < n; ++i) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < m; ++j) gsum += G.at(i, j);
      for (std::size_t j = 0; j < m; ++j) dA.at(i, j) += G.at(i, j) - std::exp(Y.at(i, j)) * gsum;
    }
  });
}

Tape::Var Tape::sum(Var a) {
  double s = 0.0;
  for (double x : value(a).values()) s += x;
  return push(Tensor({1, 1}, std::vector<double>{s}), [a](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad[0];
    for (auto& x : t.nodes_[a.id].grad.values()) x += g;
  });
}

Tape::Var Tape::cross_entropy(Var log_probs, std::size_t target) {
  const Tensor& L = value(log_probs);
  if (L.rank() != 2 || L.rows() != 1) {
    throw UsageError("cross_entropy: expected one row, got " + shape_string(L.shape()));
  }
  const double loss = cross_entropy_step(L.values(), target);
  return push(Tensor({1, 1}, std::vector<double>{loss}), [log_probs, target](Tape& t, std::size_t self) {
    t.nodes_[log_probs.id].grad[target] -= t.nodes_[self].grad[0];
  });
}

Tape::Var Tape::kl_divergence(const Tensor& target, Var log_probs) {
  const Tensor& L = value(log_probs);
  if (L.rank() != 2 || L.rows() != 1 || target.size() != L.size()) {
    throw UsageError("kl_divergence: shape mismatch " + shape_string(target.shape()) + " vs " +
                     shape_string(L.shape()));
  }
  const double loss = kl_divergence_step(target.values(), L.values());
  return push(Tensor({1, 1}, std::vector<double>{loss}),
              [log_probs, target](Tape& t, std::size_t self) {
                const double g = t.nodes_[self].grad[0];
                Tensor& dL = t.nodes_[log_probs.id].grad;
                for (std::size_t j = 0; j < dL.size(); ++j) dL[j] -= g * target[j];
              });
}

void Tape::backward(Var loss) {
  Node& root = node(loss);
  if (root.value.size() != 1) {
    throw UsageError("backward: loss must be a scalar, got " + shape_string(root.value.shape()));
  }
  for (auto& n : nodes_) n.grad.fill(0.0);
  root.grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].backward) nodes_[i].backward(*this, i);
  }
  for (auto& n : nodes_) {
    if (!n.param) continue;
    for (std::size_t j = 0; j < n.grad.size(); ++j) n.param->grad[j] += n.grad[j];
  }
}

}  // namespace altdistill::nn
