// Copyright 2026 The sirenrec Authors
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

// siren: split / train / evaluate / diagnose.

#include "CLI11.hpp"
#include "siren/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

struct KeyHelp {
  const char* key;
  const char* help;
};

// Every configuration key is also a flag of the same name.
constexpr KeyHelp kKeys[] = {
    {"dataset", "ratings file"},
    {"splits", "directory of fold manifests (default: splits)"},
    {"format", "tsv | movielens-dat"},
    {"rating-min", "lowest valid rating"},
    {"rating-max", "highest valid rating"},
    {"w-o", "sign threshold; edge weight is rating - w-o"},
    {"min-interactions", "drop users/items with fewer ratings (0 = off)"},
    {"folds", "number of folds"},
    {"fold", "held-out fold index"},
    {"backbone", "lightgcn | lrgccf | ngcf"},
    {"variant", "mlp-gn | gnn-gn | no-gn | no-split"},
    {"dim", "embedding dimension"},
    {"layers", "GNN layers"},
    {"mlp-layers", "MLP layers on the negative graph"},
    {"attn-dim", "attention hidden width"},
    {"leaky-alpha", "LeakyReLU slope (ngcf)"},
    {"dropout", "dropout rate (MLP hidden layers, attention inputs)"},
    {"loss", "sign-aware-bpr | standard-bpr"},
    {"n-neg", "negative samples per training edge"},
    {"c", "score multiplier for low-rated observed items"},
    {"lambda-reg", "L2 regularisation strength"},
    {"lr", "Adam learning rate"},
    {"batch-size", "triples per minibatch"},
    {"epochs", "training epochs"},
    {"positive-only", "train on positive edges only"},
    {"noise-degree", "signed | positive: degree used by the negative sampler"},
    {"k", "comma-separated cutoffs"},
    {"groups", "also report per-sparsity-group metrics"},
    {"all-users", "average over all users instead of users with test positives"},
    {"checkpoint-every", "periodic checkpoint interval in epochs (0 = final only)"},
    {"seed", "root random seed"},
    {"threads", "evaluation worker threads"},
    {"out", "output directory for runs"},
};

struct Options {
  std::string config_file;
  std::map<std::string, std::string> values;
};

void add_config_flags(CLI::App* app, Options& opt) {
  app->add_option("--config", opt.config_file, "key=value configuration file; flags override it");
  for (const auto& k : kKeys) {
    app->add_option_function<std::string>(
        std::string("--") + k.key, [&opt, key = std::string(k.key)](const std::string& v) { opt.values[key] = v; },
        k.help)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
}

siren::ExperimentConfig resolve(const Options& opt) {
  siren::ExperimentConfig cfg;
  if (!opt.config_file.empty()) {
    std::ifstream in(opt.config_file);
    if (!in) throw siren::DataError("cannot open " + opt.config_file);
    cfg = siren::read_config(in);
  }
  for (const auto& [k, v] : opt.values) siren::apply_key(cfg, k, v);
  cfg.train.seed = cfg.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sign-aware graph recommender"};
  app.require_subcommand(1);

  Options split_opt, train_opt, eval_opt, diag_opt;
  bool force = false, inject = false;
  std::vector<std::string> runs;
  std::string aggregate_dir = "runs";

  auto* split = app.add_subcommand("split", "write k-fold manifests for a ratings file");
  add_config_flags(split, split_opt);
  split->add_flag("--force", force, "overwrite existing manifests");

  auto* train = app.add_subcommand("train", "train one fold and write a run directory");
  add_config_flags(train, train_opt);

  auto* evaluate = app.add_subcommand("evaluate", "rank held-out items for trained runs");
  add_config_flags(evaluate, eval_opt);
  evaluate->add_option("--run", runs, "run directory (repeatable)")->required();
  evaluate->add_option("--aggregate-out", aggregate_dir, "where to write the cross-run aggregate");

  auto* diagnose = app.add_subcommand("diagnose", "gradient, sampler and partition self-checks");
  add_config_flags(diagnose, diag_opt);
  diagnose->add_flag("--inject-gradient-bug", inject, "corrupt one analytic gradient entry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? siren::kExitOk : siren::kExitUsage;
  }

  try {
    if (*split) {
      siren::cmd_split(resolve(split_opt), force);
    } else if (*train) {
      const auto run = siren::cmd_train(resolve(train_opt));
      std::cout << "wrote " << run.string() << '\n';
    } else if (*evaluate) {
      std::vector<siren::fs::path> dirs(runs.begin(), runs.end());
      siren::cmd_evaluate(dirs, resolve(eval_opt), aggregate_dir);
    } else if (*diagnose) {
      return siren::cmd_diagnose(resolve(diag_opt), inject);
    }
  } catch (const siren::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return siren::kExitNumerical;
  } catch (const siren::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return siren::kExitUsage;
  } catch (const siren::ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return siren::kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return siren::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return siren::kExitData;
  }
  return siren::kExitOk;
}
