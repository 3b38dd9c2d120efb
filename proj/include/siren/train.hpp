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

#include "siren/common.hpp"
#include "siren/graph.hpp"
#include "siren/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <span>
#include <string>
#include <vector>

namespace siren {

// ---------------------------------------------------------------------------
// Negative sampling

/// (u, i, j): u observed i (with the sign of that rating), j is an unobserved item.
struct TrainingTriple {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::uint32_t negative_item = 0;
  bool low_rating = false;  // observed edge has negative weight

  friend bool operator==(const TrainingTriple&, const TrainingTriple&) = default;
};

/// Which graph item degrees for the d^{3/4} noise distribution come from.
enum class NoiseDegree { kSigned, kPositive };

/// Draws unobserved items with probability proportional to degree^{3/4},
/// restricted to items the user has not rated (rejection against the
/// unrestricted distribution).
class NegativeSampler {
 public:
  explicit NegativeSampler(const SignedBipartiteGraph& g, NoiseDegree base = NoiseDegree::kSigned)
      : num_items_(g.num_items), neighbours_(g.num_users) {
    std::vector<double> degree(g.num_items, 0.0);
    for (const auto& e : g.edges) {
      neighbours_[e.user].push_back(e.item);
      if (base == NoiseDegree::kSigned || e.weight > 0.0) degree[e.item] += 1.0;
    }
    for (auto& n : neighbours_) std::sort(n.begin(), n.end());
    weight_.resize(g.num_items);
    std::size_t support = 0;
    for (std::size_t j = 0; j < g.num_items; ++j) {
      weight_[j] = std::pow(degree[j], 0.75);
      total_ += weight_[j];
      support += weight_[j] > 0.0;
    }
    if (support > 0) noise_ = std::discrete_distribution<std::uint32_t>(weight_.begin(), weight_.end());
    saturated_.resize(g.num_users);
    for (std::size_t u = 0; u < g.num_users; ++u) {
      std::size_t covered = 0;
      for (auto j : neighbours_[u]) covered += weight_[j] > 0.0;
      saturated_[u] = covered == support;
    }
  }

  bool is_neighbour(std::uint32_t user, std::uint32_t item) const {
    const auto& n = neighbours_.at(user);
    return std::binary_search(n.begin(), n.end(), item);
  }

  /// True when every item with non-zero noise mass is already rated by the user.
  bool saturated(std::uint32_t user) const { return saturated_.at(user); }

  /// Exact probability that draw(user) returns `item`.
  double probability(std::uint32_t user, std::uint32_t item) const {
    if (saturated(user) || is_neighbour(user, item)) return 0.0;
    double outside = total_;
    for (auto j : neighbours_[user]) outside -= weight_[j];
    return weight_.at(item) / outside;
  }

  std::uint32_t draw(std::uint32_t user, Rng& rng) const {
    if (saturated(user)) throw std::logic_error("no unobserved item to sample for this user");
    while (true) {
      const auto j = noise_(rng);
      if (!is_neighbour(user, j)) return j;
    }
  }

  std::size_t num_items() const noexcept { return num_items_; }

 private:
  std::size_t num_items_;
  std::vector<std::vector<std::uint32_t>> neighbours_;
  std::vector<double> weight_;
  double total_ = 0.0;
  std::vector<char> saturated_;
  mutable std::discrete_distribution<std::uint32_t> noise_;
};

struct SampledTriples {
  std::vector<TrainingTriple> triples;
  std::vector<std::uint32_t> skipped_users;  // rated every sampleable item
};

/// N_neg triples per signed edge. Edges of saturated users are skipped.
inline SampledTriples sample_negatives(const SignedBipartiteGraph& g, const NegativeSampler& sampler,
                                       std::size_t n_neg, Rng& rng) {
  SampledTriples out;
  out.triples.reserve(g.edges.size() * n_neg);
  std::vector<char> reported(g.num_users, 0);
  for (const auto& e : g.edges) {
    if (sampler.saturated(e.user)) {
      if (!reported[e.user]) {
        reported[e.user] = 1;
        out.skipped_users.push_back(e.user);
      }
      continue;
    }
    for (std::size_t n = 0; n < n_neg; ++n) {
      out.triples.push_back({e.user, e.item, sampler.draw(e.user, rng), e.weight < 0.0});
    }
  }
  return out;
}

inline SampledTriples sample_negatives(const SignedBipartiteGraph& g, std::size_t n_neg,
                                       std::uint64_t seed,
                                       NoiseDegree base = NoiseDegree::kSigned) {
  NegativeSampler sampler(g, base);
  auto rng = make_rng(seed, "sampling");
  return sample_negatives(g, sampler, n_neg, rng);
}

// ---------------------------------------------------------------------------
// Loss

enum class LossKind { kSignAware, kStandard };

inline LossKind parse_loss(std::string_view s) {
  if (s == "sign-aware-bpr" || s == "sign-aware") return LossKind::kSignAware;
  if (s == "standard-bpr" || s == "bpr") return LossKind::kStandard;
  throw std::invalid_argument("unknown loss '" + std::string(s) + "'");
}

inline const char* loss_name(LossKind k) {
  return k == LossKind::kSignAware ? "sign-aware-bpr" : "standard-bpr";
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double log_sigmoid(double x) { return -softplus(-x); }

struct LossOptions {
  double c = 2.0;
  double lambda_reg = 0.1;
  LossKind kind = LossKind::kSignAware;
};

struct LossValue {
  double total = 0.0;           // bpr + regularization
  double bpr = 0.0;             // -sum log p
  double regularization = 0.0;  // lambda * ||theta||^2
  std::vector<double> terms;    // -log p per triple
};

namespace detail {

// Argument of the sigmoid for one triple, and the multiplier applied to r_ui.
inline std::pair<double, double> triple_margin(const TrainingTriple& t, const Matrix& z,
                                               std::size_t num_users, const LossOptions& opt) {
  const double r_pos = predict_preference(z, num_users, t.user, t.item);
  const double r_neg = predict_preference(z, num_users, t.user, t.negative_item);
  const double scale = (opt.kind == LossKind::kSignAware && t.low_rating) ? opt.c : 1.0;
  return {scale * r_pos - r_neg, scale};
}

}  // namespace detail

inline double squared_norm(const ModelState& s) {
  double n = 0.0;
  for (const auto& [name, m] : parameter_list(s)) n += m->squaredNorm();
  return n;
}

/// L = -sum log sigma(a r_ui - r_uj) + lambda ||theta||^2 with a = c for
/// low-rated observed items (sign-aware mode) and 1 otherwise.
inline LossValue sign_aware_bpr_loss(std::span<const TrainingTriple> batch, const Matrix& z,
                                     std::size_t num_users, const ModelState& params,
                                     const LossOptions& opt) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  if (opt.kind == LossKind::kSignAware && !(opt.c > 1.0)) {
    throw std::invalid_argument("sign-aware loss needs c > 1");
  }
  LossValue v;
  v.terms.reserve(batch.size());
  for (const auto& t : batch) {
    const double term = softplus(-detail::triple_margin(t, z, num_users, opt).first);
    v.terms.push_back(term);
    v.bpr += term;
  }
  v.regularization = opt.lambda_reg * squared_norm(params);
  v.total = v.bpr + v.regularization;
  return v;
}

/// dL/dZ of the pairwise term only.
inline Matrix loss_gradient_wrt_embeddings(std::span<const TrainingTriple> batch, const Matrix& z,
                                           std::size_t num_users, const LossOptions& opt) {
  Matrix dz = Matrix::Zero(z.rows(), z.cols());
  for (const auto& t : batch) {
    const auto [x, scale] = detail::triple_margin(t, z, num_users, opt);
    // d/dx softplus(-x) = -sigmoid(-x)
    const double g = -detail::stable_sigmoid(-x);
    const auto u = static_cast<Eigen::Index>(t.user);
    const auto i = static_cast<Eigen::Index>(num_users + t.item);
    const auto j = static_cast<Eigen::Index>(num_users + t.negative_item);
    dz.row(u) += g * (scale * z.row(i) - z.row(j));
    dz.row(i) += (g * scale) * z.row(u);
    dz.row(j) -= g * z.row(u);
  }
  return dz;
}

/// 2 lambda theta, added into `grad`.
inline void add_regularization_gradient(const ModelState& params, double lambda, ModelState& grad) {
  auto p = parameter_list(params);
  auto g = parameter_list(grad);
  for (std::size_t k = 0; k < p.size(); ++k) *g[k].second += (2.0 * lambda) * *p[k].second;
}

struct LossAndGradient {
  LossValue loss;
  ModelState gradient;
};

/// Forward, loss and exact reverse-mode gradient for one mini-batch.
inline LossAndGradient backward(std::span<const TrainingTriple> batch, const GraphInputs& graphs,
                                const ModelState& state, const ModelConfig& cfg,
                                const LossOptions& opt, Rng* dropout_rng = nullptr) {
  const auto pass = forward(graphs, state, cfg, dropout_rng);
  const Matrix& z = pass.embeddings.z;
  LossAndGradient out{sign_aware_bpr_loss(batch, z, state.num_users, state, opt), zeros_like(state)};
  const Matrix dz = loss_gradient_wrt_embeddings(batch, z, state.num_users, opt);
  forward_backward(graphs, state, cfg, pass, dz, out.gradient);
  add_regularization_gradient(state, opt.lambda_reg, out.gradient);
  return out;
}

// ---------------------------------------------------------------------------
// Adam

struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  ModelState first_moment;
  ModelState second_moment;
};

inline OptimizerState make_optimizer(const ModelState& params) {
  OptimizerState opt;
  opt.first_moment = zeros_like(params);
  opt.second_moment = zeros_like(params);
  return opt;
}

/// One bias-corrected Adam update. Rejects non-finite gradients before touching anything.
inline void adam_step(ModelState& params, const ModelState& grads, OptimizerState& opt, double lr) {
  auto p = parameter_list(params);
  auto g = parameter_list(grads);
  auto m = parameter_list(opt.first_moment);
  auto v = parameter_list(opt.second_moment);
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw ShapeError("optimizer state does not mirror parameters");
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g[k].second->rows() != p[k].second->rows() || g[k].second->cols() != p[k].second->cols()) {
      throw ShapeError("gradient shape mismatch for " + p[k].first);
    }
    if (!g[k].second->allFinite()) throw NumericalError("non-finite gradient in " + p[k].first);
  }
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto& mk = *m[k].second;
    auto& vk = *v[k].second;
    const auto& gk = *g[k].second;
    mk = opt.beta1 * mk + (1.0 - opt.beta1) * gk;
    vk = opt.beta2 * vk + (1.0 - opt.beta2) * gk.cwiseProduct(gk);
    p[k].second->array() -=
        lr * (mk.array() / c1) / ((vk.array() / c2).sqrt() + opt.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainConfig {
  std::size_t n_neg = 40;
  double c = 2.0;
  double lambda_reg = 0.1;
  double learning_rate = 0.005;
  std::size_t batch_size = 1024;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::kSignAware;
  bool positive_only = false;  // train on positive edges only (plain BPR baseline setup)
  NoiseDegree noise_degree = NoiseDegree::kSigned;

  LossOptions loss_options() const { return {c, lambda_reg, loss}; }

  void validate() const {
    if (!(c > 1.0)) throw std::invalid_argument("c must be > 1");
    if (n_neg < 1 || batch_size < 1) throw std::invalid_argument("n_neg and batch_size must be >= 1");
    if (!(learning_rate > 0.0) || lambda_reg < 0.0) {
      throw std::invalid_argument("learning rate must be > 0 and lambda >= 0");
    }
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;       // mean -log p per triple
  double regularization = 0.0;  // lambda ||theta||^2 averaged over batches
  std::size_t triples = 0;
  double seconds = 0.0;
};

struct TrainingResult {
  ModelState state;
  Matrix embeddings;  // final Z, evaluation mode
  std::vector<EpochRecord> log;
  std::vector<std::uint32_t> skipped_users;
};

inline SignedBipartiteGraph positive_subgraph(const SignedBipartiteGraph& g) {
  SignedBipartiteGraph out{g.num_users, g.num_items, g.threshold, {}};
  for (const auto& e : g.edges) {
    if (e.weight > 0.0) out.edges.push_back(e);
  }
  return out;
}

/// Called after every epoch with the record and current parameters.
using EpochCallback = std::function<void(const EpochRecord&, const ModelState&)>;

/// Mini-batch training: each epoch resamples the triple set, shuffles it, and
/// takes one Adam step per batch on a full-graph forward pass.
inline TrainingResult train(const SignedBipartiteGraph& signed_graph, const ModelConfig& cfg,
                            const TrainConfig& tc, const EpochCallback& on_epoch = {},
                            ModelState* initial_state = nullptr) {
  cfg.validate();
  tc.validate();
  const SignedBipartiteGraph g = tc.positive_only ? positive_subgraph(signed_graph) : signed_graph;
  const GraphInputs graphs = build_graph_inputs(g, cfg);
  const NegativeSampler sampler(g, tc.noise_degree);
  const LossOptions opt = tc.loss_options();

  TrainingResult result;
  result.state = initial_state ? *initial_state : initialize_model(cfg, g.num_users, g.num_items, tc.seed);
  auto adam = make_optimizer(result.state);

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    auto sampling_rng = make_rng(tc.seed, "sampling", epoch);
    auto dropout_rng = make_rng(tc.seed, "dropout", epoch);
    auto sampled = sample_negatives(g, sampler, tc.n_neg, sampling_rng);
    if (epoch == 1) {
      result.skipped_users = sampled.skipped_users;
      for (auto u : sampled.skipped_users) {
        std::clog << "warning: user " << u << " rated every sampleable item; edges skipped\n";
      }
    }
    auto& triples = sampled.triples;
    if (triples.empty()) throw std::runtime_error("no training triples could be sampled");
    std::shuffle(triples.begin(), triples.end(), sampling_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.triples = triples.size();
    double bpr_sum = 0.0, reg_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t lo = 0; lo < triples.size(); lo += tc.batch_size) {
      const std::size_t hi = std::min(triples.size(), lo + tc.batch_size);
      std::span<const TrainingTriple> batch(triples.data() + lo, hi - lo);
      auto lg = backward(batch, graphs, result.state, cfg, opt,
                         cfg.dropout > 0.0 ? &dropout_rng : nullptr);
      if (!std::isfinite(lg.loss.total)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batches + 1));
      }
      adam_step(result.state, lg.gradient, adam, tc.learning_rate);
      bpr_sum += lg.loss.bpr;
      reg_sum += lg.loss.regularization;
      ++batches;
    }
    rec.mean_loss = bpr_sum / static_cast<double>(triples.size());
    rec.regularization = reg_sum / static_cast<double>(batches);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec, result.state);
  }
  result.embeddings = forward(graphs, result.state, cfg).embeddings.z;
  return result;
}

}  // namespace siren
