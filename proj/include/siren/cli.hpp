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

#pragma once

// Experiment commands behind the `siren` tool. Each takes a resolved
// ExperimentConfig and works on files; the executable only parses flags.
//
// Layout:
//   <splits>/fold_<f>.tsv               test records of fold f (+ fold column)
//   <out>/<run-id>/config               resolved configuration
//   <out>/<run-id>/checkpoints/         epoch_<n>.ckpt, final.ckpt, embeddings.bin
//   <out>/<run-id>/logs/                train.csv (deterministic), train.log (with timings)
//   <out>/<run-id>/reports/             metrics.csv, metrics.txt

#include "siren/checkpoint.hpp"
#include "siren/config.hpp"
#include "siren/data.hpp"
#include "siren/diagnostics.hpp"
#include "siren/graph.hpp"
#include "siren/metrics.hpp"
#include "siren/model.hpp"
#include "siren/train.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace siren {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

/// Raised for command preconditions the user can fix (missing files, refusing to overwrite).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or unreadable inputs.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

namespace detail {

inline std::ifstream open_in(const fs::path& p, bool binary = false) {
  std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

inline std::ofstream open_out(const fs::path& p, bool binary = false) {
  std::ofstream out(p, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

inline fs::path manifest_path(const fs::path& dir, std::size_t fold) {
  return dir / ("fold_" + std::to_string(fold) + ".tsv");
}

}  // namespace detail

/// Records, dense indexing and fold membership reconstructed from manifests.
struct FoldData {
  DatasetDescriptor descriptor;
  std::vector<Interaction> train;
  std::vector<Interaction> test;
};

inline FoldData load_fold(const ExperimentConfig& cfg) {
  if (cfg.fold >= cfg.folds) throw UsageError("fold index must be < number of folds");
  std::vector<RatingRecord> all;
  std::vector<std::uint32_t> fold_of;
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    const auto path = detail::manifest_path(cfg.splits, f);
    if (!fs::exists(path)) throw DataError("missing fold manifest " + path.string());
    auto in = detail::open_in(path);
    for (auto& row : read_manifest(in, cfg.scale)) {
      all.push_back(std::move(row.record));
      fold_of.push_back(row.fold);
    }
  }
  FoldData d;
  d.descriptor = DatasetDescriptor(all, cfg.scale);
  for (std::size_t i = 0; i < all.size(); ++i) {
    (fold_of[i] == cfg.fold ? d.test : d.train).push_back(d.descriptor.resolve(all[i]));
  }
  return d;
}

inline std::vector<RatingRecord> load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.empty()) throw UsageError("--dataset is required");
  auto in = detail::open_in(cfg.dataset);
  return filter_min_interactions(parse_ratings(in, cfg.format, cfg.scale), cfg.min_interactions);
}

/// Writes one manifest per fold. Returns the number of records written.
inline std::size_t cmd_split(const ExperimentConfig& cfg, bool force, std::ostream& log = std::cout) {
  if (cfg.folds < 2) throw UsageError("--folds must be >= 2");
  const fs::path dir = cfg.splits;
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    if (fs::exists(detail::manifest_path(dir, f)) && !force) {
      throw UsageError(detail::manifest_path(dir, f).string() + " exists; pass --force to overwrite");
    }
  }
  const auto records = load_dataset(cfg);
  const auto fold_of = kfold_assignment(records.size(), cfg.folds, cfg.seed);
  fs::create_directories(dir);
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    auto out = detail::open_out(detail::manifest_path(dir, f));
    write_manifest(out, records, fold_of, static_cast<std::uint32_t>(f));
  }
  log << "split " << records.size() << " records into " << cfg.folds << " folds under " << dir.string()
      << '\n';
  return records.size();
}

inline std::string run_id(const ExperimentConfig& cfg) {
  std::string id = std::string(variant_name(cfg.model.variant)) + "-" +
                   backbone_name(cfg.model.backbone) + "-" + loss_name(cfg.train.loss);
  if (cfg.train.positive_only) id += "-posonly";
  return id + "-fold" + std::to_string(cfg.fold) + "-seed" + std::to_string(cfg.seed);
}

inline void write_epoch_csv_header(std::ostream& out) { out << "epoch,mean_loss,regularization,triples\n"; }

inline void write_epoch_csv(std::ostream& out, const EpochRecord& r) {
  out << r.epoch << ',' << detail::format_double(r.mean_loss) << ','
      << detail::format_double(r.regularization) << ',' << r.triples << '\n';
}

inline SignedBipartiteGraph training_graph(const FoldData& d, const ExperimentConfig& cfg) {
  auto g = build_signed_graph(d.descriptor.num_users(), d.descriptor.num_items(), d.train, cfg.w_o);
  return cfg.train.positive_only ? positive_subgraph(g) : g;
}

/// Trains one fold; returns the run directory.
inline fs::path cmd_train(ExperimentConfig cfg, std::ostream& log = std::cout) {
  cfg.train.seed = cfg.seed;
  const auto data = load_fold(cfg);
  const auto graph = training_graph(data, cfg);
  const fs::path run = fs::path(cfg.out) / run_id(cfg);
  fs::create_directories(run / "checkpoints");
  fs::create_directories(run / "logs");
  fs::create_directories(run / "reports");
  {
    auto out = detail::open_out(run / "config");
    write_config(out, cfg);
  }
  auto csv = detail::open_out(run / "logs" / "train.csv");
  auto human = detail::open_out(run / "logs" / "train.log");
  write_epoch_csv_header(csv);
  log << "run " << run.string() << ": " << data.descriptor.num_users() << " users, "
      << data.descriptor.num_items() << " items, " << graph.edges.size() << " training edges\n";
  auto on_epoch = [&](const EpochRecord& r, const ModelState& state) {
    write_epoch_csv(csv, r);
    csv.flush();
    std::ostringstream line;
    line << "epoch " << std::setw(4) << r.epoch << "  loss " << std::fixed << std::setprecision(6)
         << r.mean_loss << "  reg " << r.regularization << "  " << std::setprecision(2) << r.seconds
         << "s\n";
    human << line.str();
    human.flush();
    log << line.str();
    if (cfg.checkpoint_every > 0 && r.epoch % cfg.checkpoint_every == 0) {
      auto ck = detail::open_out(run / "checkpoints" / ("epoch_" + std::to_string(r.epoch) + ".ckpt"), true);
      save_checkpoint(ck, cfg.model, state);
    }
  };
  // positive_only is already applied to `graph`.
  auto tc = cfg.train;
  tc.positive_only = false;
  const auto result = train(graph, cfg.model, tc, on_epoch);
  {
    auto ck = detail::open_out(run / "checkpoints" / "final.ckpt", true);
    save_checkpoint(ck, cfg.model, result.state);
    auto emb = detail::open_out(run / "checkpoints" / "embeddings.bin", true);
    save_matrix(emb, "z", result.embeddings);
  }
  return run;
}

inline bool same_model(const ModelConfig& a, const ModelConfig& b) {
  return a.backbone == b.backbone && a.variant == b.variant && a.dim == b.dim &&
         a.gnn_layers == b.gnn_layers && a.mlp_layers == b.mlp_layers &&
         a.attention_dim == b.attention_dim && a.leaky_relu_alpha == b.leaky_relu_alpha;
}

inline ExperimentConfig read_run_config(const fs::path& run) {
  auto in = detail::open_in(run / "config");
  return read_config(in);
}

/// Evaluates one run directory from its final checkpoint and writes its reports.
inline RankingReport evaluate_run(const fs::path& run, const std::vector<std::size_t>& ks, bool groups,
                                  std::size_t threads, std::ostream& log = std::cout) {
  const auto cfg = read_run_config(run);
  auto ck_in = detail::open_in(run / "checkpoints" / "final.ckpt", true);
  const auto ck = load_checkpoint(ck_in);
  const auto data = load_fold(cfg);
  if (!same_model(ck.config, cfg.model) || ck.state.num_users != data.descriptor.num_users() ||
      ck.state.num_items != data.descriptor.num_items()) {
    throw ValidationError("checkpoint in " + run.string() + " does not match its config or fold data");
  }
  const auto graph = training_graph(data, cfg);
  const auto z = forward(build_graph_inputs(graph, cfg.model), ck.state, cfg.model).embeddings.z;
  EvalOptions opt;
  opt.ks = ks;
  opt.groups = groups;
  opt.average_over_all_users = cfg.all_users;
  opt.threads = threads;
  const auto report = evaluate(z, data.descriptor.num_users(), data.descriptor.num_items(), data.train,
                               data.test, opt);
  fs::create_directories(run / "reports");
  {
    auto csv = detail::open_out(run / "reports" / "metrics.csv");
    write_report_csv(csv, report);
    auto txt = detail::open_out(run / "reports" / "metrics.txt");
    write_report_table(txt, report);
  }
  log << run.string() << '\n';
  write_report_table(log, report);
  return report;
}

/// Evaluates each run; with more than one run also writes mean +- std to `aggregate_dir`.
inline std::vector<RankingReport> cmd_evaluate(const std::vector<fs::path>& runs,
                                               const ExperimentConfig& cfg,
                                               const fs::path& aggregate_dir,
                                               std::ostream& log = std::cout) {
  if (runs.empty()) throw UsageError("no run directory given (--run)");
  std::vector<RankingReport> reports;
  for (const auto& r : runs) reports.push_back(evaluate_run(r, cfg.ks, cfg.groups, cfg.threads, log));
  if (reports.size() > 1) {
    const auto rows = aggregate(reports);
    fs::create_directories(aggregate_dir);
    auto csv = detail::open_out(aggregate_dir / "aggregate.csv");
    write_aggregate_csv(csv, rows);
    auto txt = detail::open_out(aggregate_dir / "aggregate.txt");
    write_aggregate_table(txt, rows);
    log << "aggregate over " << reports.size() << " runs\n";
    write_aggregate_table(log, rows);
  }
  return reports;
}

/// Runs built-in checks; returns kExitOk or kExitNumerical.
inline int cmd_diagnose(const ExperimentConfig& cfg, bool inject_gradient_bug,
                        std::ostream& log = std::cout) {
  const auto checks = run_diagnostics(inject_gradient_bug, cfg.seed + 1);
  write_diagnostics(log, checks);
  const bool ok = std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed(); });
  log << (ok ? "all checks passed\n" : "diagnostics FAILED\n");
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace siren
