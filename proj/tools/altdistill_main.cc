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

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "altdistill/errors.h"
#include "altdistill/experiment.h"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::size_t> m;
  std::optional<std::string> policy;
  std::optional<double> sigma;
  std::optional<double> lambda;
  bool pure_distill = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required();
  cmd->add_option("--m", o.m, "number of teachers");
  cmd->add_option("--policy", o.policy, "agg | alt-random:<seed> | alt-perm:<seed>");
  cmd->add_option("--sigma", o.sigma, "Gaussian noise scale");
  cmd->add_option("--lambda", o.lambda, "weight of the teacher KL term (mixed loss)");
  cmd->add_flag("--pure-distill", o.pure_distill, "train the student on the KL term only");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--jobs", o.jobs, "parallel teacher trainings");
}

altdistill::ExperimentConfig load(const Overrides& o) {
  auto cfg = altdistill::load_experiment_config(o.config);
  if (o.m) cfg.num_teachers = *o.m;
  if (o.policy) cfg.policy = *o.policy;
  if (o.sigma) cfg.sigma = *o.sigma;
  if (o.lambda) {
    cfg.lambda = *o.lambda;
    cfg.pure_distill = false;
  }
  if (o.pure_distill) cfg.pure_distill = true;
  if (o.seed) cfg.seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Alternating-teaching distillation with canary memorization audits"};
  app.require_subcommand(1);
  Overrides o;
  std::string role;
  std::string target;
  std::vector<std::string> methods;

  auto* prepare = app.add_subcommand("prepare", "build vocabulary and tokenized splits");
  auto* insert = app.add_subcommand("insert-canaries", "generate canaries and insert them");
  auto* train = app.add_subcommand("train", "train baseline, teachers, or student");
  auto* audit = app.add_subcommand("audit", "run BS/RS detection on a checkpoint");
  auto* compare = app.add_subcommand("compare", "tabulate audit reports");
  for (auto* cmd : {prepare, insert, train, audit, compare}) add_common(cmd, o);
  train->add_option("--role", role, "baseline | teachers | student")->required();
  audit->add_option("target", target, "baseline, a student label, or a checkpoint path")
      ->required();
  compare->add_option("methods", methods, "report labels in row order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const auto cfg = load(o);
    std::string out;
    if (*prepare) out = altdistill::run_prepare(cfg);
    else if (*insert) out = altdistill::run_insert_canaries(cfg);
    else if (*train) out = altdistill::run_train(cfg, altdistill::parse_train_role(role));
    else if (*audit) out = altdistill::run_audit(cfg, target);
    else out = altdistill::run_compare(cfg, methods);
    std::cout << out;
    return 0;
  } catch (const altdistill::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(altdistill::ErrorKind::kData);
  }
}
