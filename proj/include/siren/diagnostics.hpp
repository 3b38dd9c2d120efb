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

// Self-checks on tiny built-in instances: analytic vs finite-difference
// gradients, the negative sampler against its exact distribution, and the
// sign partition on random graphs.

#include "siren/graph.hpp"
#include "siren/model.hpp"
#include "siren/train.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace siren {

/// Tiny random rating set over `users` x `items` with roughly `density` fill.
inline std::vector<Interaction> random_interactions(std::size_t users, std::size_t items,
                                                    double density, Rng& rng) {
  std::bernoulli_distribution present(density);
  std::uniform_int_distribution<int> rating(1, 5);
  std::vector<Interaction> out;
  for (std::uint32_t u = 0; u < users; ++u) {
    for (std::uint32_t i = 0; i < items; ++i) {
      if (present(rng)) out.push_back({u, i, static_cast<double>(rating(rng))});
    }
  }
  return out;
}

/// Moves every parameter to a generic random point so no entry sits at an
/// initialisation symmetry (zero biases, identical rows).
inline void randomize_parameters(ModelState& s, Rng& rng, double spread = 0.5) {
  std::uniform_real_distribution<double> d(-spread, spread);
  for (auto& [name, m] : parameter_list(s)) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = d(rng);
  }
}

struct GradientCheckEntry {
  std::string parameter;
  double max_relative_error = 0.0;
};

/// Entry-wise |analytic - numeric| / max(|analytic|, |numeric|), maximised per
/// parameter tensor. Entries where both are below `floor` count as exact.
inline std::vector<GradientCheckEntry> gradient_check(const GraphInputs& graphs, ModelState state,
                                                      const ModelConfig& cfg,
                                                      std::span<const TrainingTriple> batch,
                                                      const LossOptions& opt, double h = 1e-4,
                                                      bool inject_bug = false,
                                                      double floor = 1e-10) {
  ModelConfig eval_cfg = cfg;
  eval_cfg.dropout = 0.0;
  auto analytic = backward(batch, graphs, state, eval_cfg, opt).gradient;
  if (inject_bug) {
    auto g = parameter_list(analytic);
    if (!g.empty()) (*g.front().second)(0, 0) *= -1.5;
  }
  auto loss_at = [&](const ModelState& s) {
    const auto z = forward(graphs, s, eval_cfg).embeddings.z;
    return sign_aware_bpr_loss(batch, z, s.num_users, s, opt).total;
  };
  std::vector<GradientCheckEntry> out;
  auto params = parameter_list(state);
  auto grads = parameter_list(analytic);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k].second;
    const Matrix& g = *grads[k].second;
    GradientCheckEntry entry{params[k].first, 0.0};
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + h;
      const double up = loss_at(state);
      p.data()[i] = saved - h;
      const double down = loss_at(state);
      p.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = g.data()[i];
      const double scale = std::max(std::abs(a), std::abs(numeric));
      if (scale < floor) continue;
      entry.max_relative_error = std::max(entry.max_relative_error, std::abs(a - numeric) / scale);
    }
    out.push_back(entry);
  }
  return out;
}

/// Smallest |pre-activation| feeding a ReLU or LeakyReLU. Finite differences
/// are only meaningful when this exceeds the step by a wide margin.
inline double kink_distance(const ForwardPass& pass) {
  double d = std::numeric_limits<double>::infinity();
  auto scan = [&](const std::vector<Matrix>& ms) {
    for (const auto& m : ms) {
      if (m.size() > 0) d = std::min(d, m.cwiseAbs().minCoeff());
    }
  };
  scan(pass.gnn.preact);
  scan(pass.negative_gnn.preact);
  scan(pass.mlp.preact);
  return d;
}

/// The standard tiny instance: graph, random model state and a batch mixing
/// both edge signs.
inline constexpr double kMinKinkDistance = 1e-3;

struct TinyInstance {
  SignedBipartiteGraph graph;
  GraphInputs inputs;
  ModelState state;
  std::vector<TrainingTriple> batch;
};

inline TinyInstance make_tiny_instance(const ModelConfig& cfg, std::uint64_t seed,
                                       std::size_t users = 5, std::size_t items = 6) {
  auto rng = make_rng(seed, "tiny-instance");
  TinyInstance t;
  std::vector<Interaction> ratings;
  // Keep drawing until both signs are present and nobody has rated everything.
  while (true) {
    ratings = random_interactions(users, items, 0.45, rng);
    std::vector<std::size_t> per_user(users, 0);
    bool pos = false, neg = false;
    for (const auto& r : ratings) {
      ++per_user[r.user];
      pos |= r.rating > 3.5;
      neg |= r.rating < 3.5;
    }
    const bool ok = std::all_of(per_user.begin(), per_user.end(),
                                [&](std::size_t n) { return n < items - 1; });
    if (pos && neg && ok) break;
  }
  t.graph = build_signed_graph(users, items, ratings, 3.5);
  t.inputs = build_graph_inputs(t.graph, cfg);
  t.state = initialize_model(cfg, users, items, seed);
  ModelConfig eval_cfg = cfg;
  eval_cfg.dropout = 0.0;
  do {
    randomize_parameters(t.state, rng);
  } while (kink_distance(forward(t.inputs, t.state, eval_cfg)) < kMinKinkDistance);
  auto sample_rng = make_rng(seed, "tiny-sampling");
  t.batch = sample_negatives(t.graph, NegativeSampler(t.graph), 2, sample_rng).triples;
  return t;
}

struct DiagnosticCheck {
  std::string name;
  double value = 0.0;      // max relative error or distance
  double threshold = 0.0;  // passes when value < threshold
  bool passed() const { return value < threshold; }
};

/// Total-variation distance between empirical negative draws for one user and
/// the exact restricted d^{3/4} distribution.
inline double sampler_tv_distance(const SignedBipartiteGraph& g, std::uint32_t user,
                                  std::size_t draws, std::uint64_t seed) {
  NegativeSampler sampler(g);
  auto rng = make_rng(seed, "sampler-check");
  std::vector<double> freq(g.num_items, 0.0);
  for (std::size_t n = 0; n < draws; ++n) freq[sampler.draw(user, rng)] += 1.0;
  double tv = 0.0;
  for (std::uint32_t j = 0; j < g.num_items; ++j) {
    tv += std::abs(freq[j] / static_cast<double>(draws) - sampler.probability(user, j));
  }
  return 0.5 * tv;
}

/// Fixed toy graph for sampler checks: user 0 rated items 0 and 1; item
/// degrees otherwise vary from 1 to 16.
inline SignedBipartiteGraph sampler_toy_graph() {
  std::vector<Interaction> r;
  const std::size_t users = 20, items = 8;
  const std::uint32_t degree[items] = {3, 5, 1, 16, 4, 9, 2, 7};
  r.push_back({0, 0, 5.0});
  r.push_back({0, 1, 1.0});
  for (std::uint32_t j = 0; j < items; ++j) {
    for (std::uint32_t u = 1, placed = (j <= 1); placed < degree[j]; ++u, ++placed) {
      r.push_back({u, j, (u + j) % 2 ? 4.0 : 2.0});
    }
  }
  return build_signed_graph(users, items, r, 3.5);
}

/// Largest violation count of E^p + E^n = E^s with correct signs over random graphs (0 = clean).
inline std::size_t partition_violations(std::size_t cases, std::uint64_t seed) {
  auto rng = make_rng(seed, "partition-check");
  std::uniform_int_distribution<std::size_t> size(1, 12);
  std::uniform_real_distribution<double> weight(-3.0, 3.0);
  std::size_t bad = 0;
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t m = size(rng), n = size(rng);
    SignedBipartiteGraph g{m, n, 3.5, {}};
    std::bernoulli_distribution present(0.4);
    for (std::uint32_t u = 0; u < m; ++u) {
      for (std::uint32_t i = 0; i < n; ++i) {
        if (present(rng)) {
          double w = weight(rng);
          if (w == 0.0) w = 1.0;
          g.edges.push_back({u, i, w});
        }
      }
    }
    const auto p = partition(g);
    bool ok = p.positive.size() + p.negative.size() == g.edges.size();
    for (const auto& e : p.positive) ok &= e.weight > 0.0;
    for (const auto& e : p.negative) ok &= e.weight < 0.0;
    std::vector<SignedEdge> merged = p.positive;
    merged.insert(merged.end(), p.negative.begin(), p.negative.end());
    auto key = [](const SignedEdge& e) { return std::tuple(e.user, e.item, e.weight); };
    auto less = [&](const SignedEdge& a, const SignedEdge& b) { return key(a) < key(b); };
    auto expected = g.edges;
    std::sort(merged.begin(), merged.end(), less);
    std::sort(expected.begin(), expected.end(), less);
    ok &= merged == expected;
    bad += !ok;
  }
  return bad;
}

/// Runs all built-in checks. Gradient checks cover every backbone x variant.
inline std::vector<DiagnosticCheck> run_diagnostics(bool inject_gradient_bug = false,
                                                    std::uint64_t seed = 1) {
  std::vector<DiagnosticCheck> checks;
  for (auto backbone : {Backbone::kLightGcn, Backbone::kLrGccf, Backbone::kNgcf}) {
    for (auto variant : {Variant::kMlpGn, Variant::kGnnGn, Variant::kNoGn, Variant::kNoSplit}) {
      ModelConfig cfg;
      cfg.backbone = backbone;
      cfg.variant = variant;
      cfg.dim = 4;
      cfg.attention_dim = 4;
      cfg.gnn_layers = 2;
      cfg.dropout = 0.0;
      auto tiny = make_tiny_instance(cfg, seed);
      const LossOptions opt{2.0, 0.05, LossKind::kSignAware};
      double worst = 0.0;
      for (const auto& e : gradient_check(tiny.inputs, tiny.state, cfg, tiny.batch, opt, 1e-4,
                                          inject_gradient_bug)) {
        worst = std::max(worst, e.max_relative_error);
      }
      checks.push_back({std::string("gradient/") + backbone_name(backbone) + "/" + variant_name(variant),
                        worst, 1e-4});
    }
  }
  checks.push_back({"sampler/tv-distance", sampler_tv_distance(sampler_toy_graph(), 0, 100000, seed), 0.01});
  checks.push_back({"partition/violations", static_cast<double>(partition_violations(1000, seed)), 0.5});
  return checks;
}

inline void write_diagnostics(std::ostream& out, const std::vector<DiagnosticCheck>& checks) {
  for (const auto& c : checks) {
    out << (c.passed() ? "PASS " : "FAIL ") << c.name << "  value=" << c.value
        << "  threshold=" << c.threshold << '\n';
  }
}

}  // namespace siren
