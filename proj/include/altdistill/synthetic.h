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
#include <random>
#include <string>
#include <vector>

namespace altdistill {

// A class-based Markov language: sentences walk a sparse transition graph
// over word classes and each class emits words with Zipfian weights. Stands
// in for a real corpus of the same shape (one sentence per record).
struct SyntheticLanguageConfig {
  std::size_t num_words = 500;
  std::size_t num_classes = 20;
  std::size_t successors_per_class = 3;
  double zipf_exponent = 1.0;
  std::size_t min_length = 4;
  std::size_t max_length = 12;
  std::uint64_t seed = 1;
};

// Deterministic pronounceable spelling for word number `index`.
std::string synthetic_word(std::size_t index);

class SyntheticLanguage {
 public:
  explicit SyntheticLanguage(const SyntheticLanguageConfig& config);

  std::string sample_sentence(std::mt19937_64& rng) const;
  std::vector<std::string> sample_corpus(std::size_t num_sentences, std::uint64_t seed) const;

  const std::vector<std::string>& words() const { return words_; }
  const SyntheticLanguageConfig& config() const { return config_; }

 private:
  SyntheticLanguageConfig config_;
  std::vector<std::string> words_;
  std::vector<std::vector<std::size_t>> class_members_;
  std::vector<std::discrete_distribution<std::size_t>> emission_;
  std::vector<std::vector<std::size_t>> successors_;
  std::vector<std::discrete_distribution<std::size_t>> transition_;
};

}  // namespace altdistill
