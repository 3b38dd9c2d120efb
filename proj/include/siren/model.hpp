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

// Learnable state and forward pass: a GNN over the positive edges, an MLP over
// per-node free embeddings for the negative side, and a two-way attention that
// fuses both into the final node embeddings.
//
// Every forward stage has a matching *_backward that consumes the cache it
// filled; the loss-level gradient lives in train.hpp.

#include "siren/common.hpp"
#include "siren/graph.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace siren {

/// How the negative side is modelled.
///  - kMlpGn:   MLP embeddings for G^n, fused with attention (the full model).
///  - kGnnGn:   a second, independently parameterised GNN over G^n.
///  - kNoGn:    no negative-side embeddings; Z = Z_p.
///  - kNoSplit: one GNN over all signed edges regardless of sign; Z = its output.
enum class Variant { kMlpGn, kGnnGn, kNoGn, kNoSplit };

inline Variant parse_variant(std::string_view s) {
  if (s == "mlp-gn") return Variant::kMlpGn;
  if (s == "gnn-gn") return Variant::kGnnGn;
  if (s == "no-gn") return Variant::kNoGn;
  if (s == "no-split") return Variant::kNoSplit;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kMlpGn: return "mlp-gn";
    case Variant::kGnnGn: return "gnn-gn";
    case Variant::kNoGn: return "no-gn";
    case Variant::kNoSplit: return "no-split";
  }
  return "?";
}

inline bool uses_attention(Variant v) { return v == Variant::kMlpGn || v == Variant::kGnnGn; }

struct ModelConfig {
  Backbone backbone = Backbone::kLightGcn;
  std::size_t dim = 64;
  std::size_t gnn_layers = 3;
  std::size_t mlp_layers = 2;
  std::size_t attention_dim = 64;
  double leaky_relu_alpha = 0.1;
  double dropout = 0.5;
  Variant variant = Variant::kMlpGn;

  /// Width of Z_p. Concatenating backbones stack all L+1 layer outputs.
  std::size_t output_dim() const {
    return backbone == Backbone::kLightGcn ? dim : (gnn_layers + 1) * dim;
  }

  void validate() const {
    if (dim < 1 || gnn_layers < 1 || mlp_layers < 1 || attention_dim < 1) {
      throw std::invalid_argument("model dimensions and layer counts must be >= 1");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
    if (!(leaky_relu_alpha > 0.0)) throw std::invalid_argument("LeakyReLU slope must be > 0");
  }
};

struct GnnParams {
  Matrix embedding;                       // h^0, (M+N) x d
  std::vector<Matrix> weight;             // lrgccf W^l, ngcf W_1^l; empty for lightgcn
  std::vector<Matrix> interaction_weight; // ngcf W_2^l
};

struct MlpParams {
  Matrix embedding;            // Z^n_0, (M+N) x d
  std::vector<Matrix> weight;  // d_{l-1} x d_l
  std::vector<Matrix> bias;    // 1 x d_l
};

struct AttentionParams {
  Matrix weight;  // d' x d_out
  Matrix query;   // d' x 1
  Matrix bias;    // 1 x d'
};

/// Every learnable tensor. Optional blocks exist only for variants that use them.
struct ModelState {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  GnnParams gnn;
  std::optional<GnnParams> negative_gnn;
  std::optional<MlpParams> mlp;
  std::optional<AttentionParams> attention;

  std::size_t num_nodes() const noexcept { return num_users + num_items; }
};

/// Named views of every parameter matrix, in a fixed order shared by all
/// states with the same configuration.
template <class State>
auto parameter_list(State& s) {
  using Ptr = std::conditional_t<std::is_const_v<State>, const Matrix*, Matrix*>;
  std::vector<std::pair<std::string, Ptr>> out;
  auto add_gnn = [&](auto& g, const std::string& prefix) {
    out.emplace_back(prefix + ".embedding", &g.embedding);
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
      out.emplace_back(prefix + ".weight." + std::to_string(l + 1), &g.weight[l]);
    }
    for (std::size_t l = 0; l < g.interaction_weight.size(); ++l) {
      out.emplace_back(prefix + ".interaction_weight." + std::to_string(l + 1),
                       &g.interaction_weight[l]);
    }
  };
  add_gnn(s.gnn, "gnn");
  if (s.negative_gnn) add_gnn(*s.negative_gnn, "negative_gnn");
  if (s.mlp) {
    out.emplace_back("mlp.embedding", &s.mlp->embedding);
    for (std::size_t l = 0; l < s.mlp->weight.size(); ++l) {
      out.emplace_back("mlp.weight." + std::to_string(l + 1), &s.mlp->weight[l]);
      out.emplace_back("mlp.bias." + std::to_string(l + 1), &s.mlp->bias[l]);
    }
  }
  if (s.attention) {
    out.emplace_back("attention.weight", &s.attention->weight);
    out.emplace_back("attention.query", &s.attention->query);
    out.emplace_back("attention.bias", &s.attention->bias);
  }
  return out;
}

inline ModelState zeros_like(const ModelState& s) {
  ModelState z = s;
  for (auto& [name, m] : parameter_list(z)) m->setZero();
  return z;
}

inline std::size_t parameter_count(const ModelState& s) {
  std::size_t n = 0;
  for (const auto& [name, m] : parameter_list(s)) n += static_cast<std::size_t>(m->size());
  return n;
}

namespace detail {

inline Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

inline GnnParams init_gnn(const ModelConfig& cfg, std::size_t nodes, Rng& rng) {
  GnnParams g;
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  g.embedding = xavier_uniform(static_cast<Eigen::Index>(nodes), d, rng);
  if (cfg.backbone != Backbone::kLightGcn) {
    for (std::size_t l = 0; l < cfg.gnn_layers; ++l) g.weight.push_back(xavier_uniform(d, d, rng));
  }
  if (cfg.backbone == Backbone::kNgcf) {
    for (std::size_t l = 0; l < cfg.gnn_layers; ++l) {
      g.interaction_weight.push_back(xavier_uniform(d, d, rng));
    }
  }
  return g;
}

}  // namespace detail

inline ModelState initialize_model(const ModelConfig& cfg, std::size_t num_users,
                                   std::size_t num_items, std::uint64_t seed) {
  cfg.validate();
  auto rng = make_rng(seed, "init");
  ModelState s;
  s.num_users = num_users;
  s.num_items = num_items;
  const std::size_t nodes = num_users + num_items;
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  const auto d_out = static_cast<Eigen::Index>(cfg.output_dim());
  s.gnn = detail::init_gnn(cfg, nodes, rng);
  if (cfg.variant == Variant::kGnnGn) s.negative_gnn = detail::init_gnn(cfg, nodes, rng);
  if (cfg.variant == Variant::kMlpGn) {
    MlpParams m;
    m.embedding = detail::xavier_uniform(static_cast<Eigen::Index>(nodes), d, rng);
    Eigen::Index in = d;
    for (std::size_t l = 0; l < cfg.mlp_layers; ++l) {
      const Eigen::Index out = (l + 1 == cfg.mlp_layers) ? d_out : d;
      m.weight.push_back(detail::xavier_uniform(in, out, rng));
      m.bias.push_back(Matrix::Zero(1, out));
      in = out;
    }
    s.mlp = std::move(m);
  }
  if (uses_attention(cfg.variant)) {
    const auto da = static_cast<Eigen::Index>(cfg.attention_dim);
    AttentionParams a;
    a.weight = detail::xavier_uniform(da, d_out, rng);
    a.query = detail::xavier_uniform(da, 1, rng);
    a.bias = Matrix::Zero(1, da);
    s.attention = std::move(a);
  }
  return s;
}

// ---------------------------------------------------------------------------
// GNN propagation

struct GnnCache {
  std::vector<Matrix> hidden;      // h^0 .. h^L
  std::vector<Matrix> aggregated;  // A h^{l-1}, l = 1..L
  std::vector<Matrix> preact;      // ngcf only: input to LeakyReLU
};

inline Matrix gnn_forward(const NormalizedAdjacency& adj, const GnnParams& p,
                          const ModelConfig& cfg, GnnCache* cache = nullptr) {
  if (adj.variant() != cfg.backbone) throw ShapeError("adjacency variant does not match backbone");
  if (static_cast<std::size_t>(p.embedding.rows()) != adj.num_nodes() ||
      static_cast<std::size_t>(p.embedding.cols()) != cfg.dim) {
    throw ShapeError("GNN embedding table has the wrong shape");
  }
  const std::size_t L = cfg.gnn_layers;
  if (cfg.backbone != Backbone::kLightGcn && p.weight.size() != L) {
    throw ShapeError("GNN weight count does not match layer count");
  }
  if (cfg.backbone == Backbone::kNgcf && p.interaction_weight.size() != L) {
    throw ShapeError("NGCF interaction weight count does not match layer count");
  }
  GnnCache local;
  GnnCache& c = cache ? *cache : local;
  c.hidden.assign(1, p.embedding);
  c.aggregated.clear();
  c.preact.clear();
  for (std::size_t l = 0; l < L; ++l) {
    const Matrix& h = c.hidden.back();
    Matrix agg;
    adj.multiply(h, agg);
    switch (cfg.backbone) {
      case Backbone::kLightGcn:
        c.hidden.push_back(agg);
        break;
      case Backbone::kLrGccf:
        c.hidden.push_back(agg * p.weight[l]);
        break;
      case Backbone::kNgcf: {
        Matrix pre = (h + agg) * p.weight[l] + h.cwiseProduct(agg) * p.interaction_weight[l];
        const double a = cfg.leaky_relu_alpha;
        c.hidden.push_back(pre.unaryExpr([a](double v) { return v > 0.0 ? v : a * v; }));
        c.preact.push_back(std::move(pre));
        break;
      }
    }
    c.aggregated.push_back(std::move(agg));
  }
  const auto n = p.embedding.rows();
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  if (cfg.backbone == Backbone::kLightGcn) {
    Matrix z = Matrix::Zero(n, d);
    for (const auto& h : c.hidden) z += h;
    return z / static_cast<double>(L + 1);
  }
  Matrix z(n, d * static_cast<Eigen::Index>(L + 1));
  for (std::size_t l = 0; l <= L; ++l) z.middleCols(static_cast<Eigen::Index>(l) * d, d) = c.hidden[l];
  return z;
}

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(Z_p).
inline void gnn_backward(const NormalizedAdjacency& adj, const GnnParams& p, const ModelConfig& cfg,
                         const GnnCache& c, const Matrix& dz, GnnParams& grad) {
  const std::size_t L = cfg.gnn_layers;
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  // Gradient arriving at each h^l from layer aggregation.
  std::vector<Matrix> dh(L + 1);
  for (std::size_t l = 0; l <= L; ++l) {
    dh[l] = cfg.backbone == Backbone::kLightGcn
                ? Matrix(dz / static_cast<double>(L + 1))
                : Matrix(dz.middleCols(static_cast<Eigen::Index>(l) * d, d));
  }
  Matrix tmp;
  for (std::size_t l = L; l >= 1; --l) {
    const Matrix& h_prev = c.hidden[l - 1];
    const Matrix& agg = c.aggregated[l - 1];
    switch (cfg.backbone) {
      case Backbone::kLightGcn:
        adj.multiply_transpose(dh[l], tmp);
        dh[l - 1] += tmp;
        break;
      case Backbone::kLrGccf: {
        grad.weight[l - 1] += agg.transpose() * dh[l];
        Matrix dagg = dh[l] * p.weight[l - 1].transpose();
        adj.multiply_transpose(dagg, tmp);
        dh[l - 1] += tmp;
        break;
      }
      case Backbone::kNgcf: {
        const double a = cfg.leaky_relu_alpha;
        const Matrix& pre = c.preact[l - 1];
        Matrix dpre = dh[l].binaryExpr(pre, [a](double g, double v) { return v > 0.0 ? g : a * g; });
        grad.weight[l - 1] += (h_prev + agg).transpose() * dpre;
        grad.interaction_weight[l - 1] += h_prev.cwiseProduct(agg).transpose() * dpre;
        Matrix d_sum = dpre * p.weight[l - 1].transpose();
        Matrix d_prod = dpre * p.interaction_weight[l - 1].transpose();
        dh[l - 1] += d_sum + d_prod.cwiseProduct(agg);
        Matrix dagg = d_sum + d_prod.cwiseProduct(h_prev);
        adj.multiply_transpose(dagg, tmp);
        dh[l - 1] += tmp;
        break;
      }
    }
  }
  grad.embedding += dh[0];
}

/// Z_p for the state's primary GNN.
inline Matrix propagate(const NormalizedAdjacency& adj, const ModelState& state,
                        const ModelConfig& cfg) {
  return gnn_forward(adj, state.gnn, cfg);
}

// ---------------------------------------------------------------------------
// MLP over the negative side

struct MlpCache {
  std::vector<Matrix> input;   // layer inputs Z^n_{l-1}
  std::vector<Matrix> preact;  // Z^n_{l-1} W^l + 1 b^l
  std::vector<Matrix> mask;    // inverted-dropout masks on hidden outputs; empty when not training
};

namespace detail {

inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(rng) ? scale : 0.0;
  return m;
}

}  // namespace detail

/// Z^n_l = ReLU(Z^n_{l-1} W^l + 1 b^l). Pass a generator to train with dropout
/// on the hidden activations; nullptr evaluates deterministically.
inline Matrix mlp_forward(const MlpParams& p, const ModelConfig& cfg, Rng* dropout_rng = nullptr,
                          MlpCache* cache = nullptr) {
  if (p.weight.size() != cfg.mlp_layers || p.bias.size() != cfg.mlp_layers) {
    throw ShapeError("MLP layer count mismatch");
  }
  MlpCache local;
  MlpCache& c = cache ? *cache : local;
  c.input.clear();
  c.preact.clear();
  c.mask.clear();
  Matrix a = p.embedding;
  for (std::size_t l = 0; l < cfg.mlp_layers; ++l) {
    if (a.cols() != p.weight[l].rows() || p.bias[l].cols() != p.weight[l].cols()) {
      throw ShapeError("MLP layer " + std::to_string(l + 1) + " dimension mismatch");
    }
    Matrix pre = a * p.weight[l];
    pre.rowwise() += p.bias[l].row(0);
    Matrix out = pre.cwiseMax(0.0);
    const bool hidden = l + 1 < cfg.mlp_layers;
    if (dropout_rng && hidden && cfg.dropout > 0.0) {
      c.mask.push_back(detail::dropout_mask(out.rows(), out.cols(), cfg.dropout, *dropout_rng));
      out = out.cwiseProduct(c.mask.back());
    }
    c.input.push_back(std::move(a));
    c.preact.push_back(std::move(pre));
    a = std::move(out);
  }
  return a;
}

inline void mlp_backward(const MlpParams& p, const ModelConfig& cfg, const MlpCache& c,
                         const Matrix& dz, MlpParams& grad) {
  Matrix dout = dz;
  for (std::size_t l = cfg.mlp_layers; l-- > 0;) {
    if (l + 1 < cfg.mlp_layers && !c.mask.empty()) dout = dout.cwiseProduct(c.mask[l]);
    Matrix dpre = dout.binaryExpr(c.preact[l], [](double g, double v) { return v > 0.0 ? g : 0.0; });
    grad.weight[l] += c.input[l].transpose() * dpre;
    grad.bias[l] += dpre.colwise().sum();
    dout = dpre * p.weight[l].transpose();
  }
  grad.embedding += dout;
}

// ---------------------------------------------------------------------------
// Attention fusion

struct EmbeddingSet {
  Matrix z_positive;      // Z_p
  Matrix z_negative;      // Z_n (empty when the variant has none)
  Vector alpha_positive;  // per-node importance of Z_p
  Vector alpha_negative;
  Matrix z;               // final embeddings
};

struct AttentionCache {
  Matrix input_positive, input_negative;  // after dropout
  Matrix mask_positive, mask_negative;    // empty when not training
  Matrix tanh_positive, tanh_negative;    // tanh(W z^T + b), row per node
};

namespace detail {

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

/// Scores each embedding with q^T tanh(W z^T + b), softmaxes the two scores per
/// node, and mixes Z_p and Z_n with the resulting weights. Dropout (when a
/// generator is passed) applies to the scoring inputs only.
inline EmbeddingSet attention_fuse(const Matrix& zp, const Matrix& zn, const AttentionParams& p,
                                   double dropout = 0.0, Rng* dropout_rng = nullptr,
                                   AttentionCache* cache = nullptr) {
  if (zp.rows() != zn.rows() || zp.cols() != zn.cols()) {
    throw ShapeError("attention inputs differ in shape");
  }
  if (p.weight.cols() != zp.cols() || p.query.rows() != p.weight.rows() ||
      p.bias.cols() != p.weight.rows()) {
    throw ShapeError("attention parameters do not match input width");
  }
  AttentionCache local;
  AttentionCache& c = cache ? *cache : local;
  if (dropout_rng && dropout > 0.0) {
    c.mask_positive = detail::dropout_mask(zp.rows(), zp.cols(), dropout, *dropout_rng);
    c.mask_negative = detail::dropout_mask(zn.rows(), zn.cols(), dropout, *dropout_rng);
    c.input_positive = zp.cwiseProduct(c.mask_positive);
    c.input_negative = zn.cwiseProduct(c.mask_negative);
  } else {
    c.mask_positive.resize(0, 0);
    c.mask_negative.resize(0, 0);
    c.input_positive = zp;
    c.input_negative = zn;
  }
  auto score = [&](const Matrix& in, Matrix& t) {
    t = in * p.weight.transpose();
    t.rowwise() += p.bias.row(0);
    t = t.array().tanh().matrix();
    return Vector(t * p.query.col(0));
  };
  const Vector wp = score(c.input_positive, c.tanh_positive);
  const Vector wn = score(c.input_negative, c.tanh_negative);

  EmbeddingSet e;
  e.alpha_positive.resize(zp.rows());
  e.alpha_negative.resize(zp.rows());
  for (Eigen::Index x = 0; x < zp.rows(); ++x) {
    const double delta = wp[x] - wn[x];
    e.alpha_positive[x] = detail::stable_sigmoid(delta);
    e.alpha_negative[x] = detail::stable_sigmoid(-delta);
  }
  e.z = e.alpha_positive.asDiagonal() * zp + e.alpha_negative.asDiagonal() * zn;
  e.z_positive = zp;
  e.z_negative = zn;
  return e;
}

/// Given dL/dZ, accumulates parameter gradients and returns (dL/dZ_p, dL/dZ_n).
inline std::pair<Matrix, Matrix> attention_backward(const EmbeddingSet& e, const AttentionParams& p,
                                                    const AttentionCache& c, const Matrix& dz,
                                                    AttentionParams& grad) {
  const Eigen::Index n = dz.rows();
  Matrix dzp = e.alpha_positive.asDiagonal() * dz;
  Matrix dzn = e.alpha_negative.asDiagonal() * dz;
  Vector dscore(n);  // d/d(w_p - w_n)
  for (Eigen::Index x = 0; x < n; ++x) {
    const double dalpha = dz.row(x).dot(e.z_positive.row(x)) - dz.row(x).dot(e.z_negative.row(x));
    dscore[x] = dalpha * e.alpha_positive[x] * e.alpha_negative[x];
  }
  auto branch = [&](const Matrix& t, const Matrix& in, const Matrix& mask, double sign, Matrix& dzin) {
    const Vector dw = sign * dscore;
    grad.query.col(0) += t.transpose() * dw;
    Matrix g = (1.0 - t.array().square()).matrix();
    g = dw.asDiagonal() * g;
    g = g * p.query.col(0).asDiagonal();
    grad.weight += g.transpose() * in;
    grad.bias += g.colwise().sum();
    Matrix din = g * p.weight;
    if (mask.size() > 0) din = din.cwiseProduct(mask);
    dzin += din;
  };
  branch(c.tanh_positive, c.input_positive, c.mask_positive, 1.0, dzp);
  branch(c.tanh_negative, c.input_negative, c.mask_negative, -1.0, dzn);
  return {std::move(dzp), std::move(dzn)};
}

// ---------------------------------------------------------------------------
// Whole-model forward

/// Propagation structures a variant needs, built once per training graph.
struct GraphInputs {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  NormalizedAdjacency primary;                  // G^p, or all of G^s for no-split
  std::optional<NormalizedAdjacency> negative;  // G^n, gnn-gn only
};

inline GraphInputs build_graph_inputs(const SignedBipartiteGraph& g, const ModelConfig& cfg) {
  GraphInputs in;
  in.num_users = g.num_users;
  in.num_items = g.num_items;
  if (cfg.variant == Variant::kNoSplit) {
    in.primary = NormalizedAdjacency(g.num_users, g.num_items, g.edges, cfg.backbone);
    return in;
  }
  const auto parts = partition(g);
  in.primary = normalized_adjacency(parts, cfg.backbone);
  if (cfg.variant == Variant::kGnnGn) {
    in.negative = NormalizedAdjacency(g.num_users, g.num_items, parts.negative, cfg.backbone);
  }
  return in;
}

struct ForwardPass {
  EmbeddingSet embeddings;
  GnnCache gnn;
  GnnCache negative_gnn;
  MlpCache mlp;
  AttentionCache attention;
};

/// Full forward pass. `dropout_rng` non-null means training mode.
inline ForwardPass forward(const GraphInputs& graphs, const ModelState& state,
                           const ModelConfig& cfg, Rng* dropout_rng = nullptr) {
  if (graphs.num_users != state.num_users || graphs.num_items != state.num_items) {
    throw ShapeError("graph and model disagree on node counts");
  }
  ForwardPass f;
  Matrix zp = gnn_forward(graphs.primary, state.gnn, cfg, &f.gnn);
  if (!uses_attention(cfg.variant)) {
    auto& e = f.embeddings;
    e.alpha_positive = Vector::Ones(zp.rows());
    e.alpha_negative = Vector::Zero(zp.rows());
    e.z = zp;
    e.z_positive = std::move(zp);
    return f;
  }
  Matrix zn;
  if (cfg.variant == Variant::kMlpGn) {
    if (!state.mlp) throw ShapeError("mlp-gn variant needs MLP parameters");
    zn = mlp_forward(*state.mlp, cfg, dropout_rng, &f.mlp);
  } else {
    if (!state.negative_gnn || !graphs.negative) throw ShapeError("gnn-gn variant needs a negative GNN");
    zn = gnn_forward(*graphs.negative, *state.negative_gnn, cfg, &f.negative_gnn);
  }
  if (!state.attention) throw ShapeError("variant needs attention parameters");
  f.embeddings = attention_fuse(zp, zn, *state.attention, cfg.dropout, dropout_rng, &f.attention);
  return f;
}

/// Accumulates into `grad` the parameter gradient for a given dL/dZ.
inline void forward_backward(const GraphInputs& graphs, const ModelState& state,
                             const ModelConfig& cfg, const ForwardPass& f, const Matrix& dz,
                             ModelState& grad) {
  if (!uses_attention(cfg.variant)) {
    gnn_backward(graphs.primary, state.gnn, cfg, f.gnn, dz, grad.gnn);
    return;
  }
  auto [dzp, dzn] = attention_backward(f.embeddings, *state.attention, f.attention, dz, *grad.attention);
  gnn_backward(graphs.primary, state.gnn, cfg, f.gnn, dzp, grad.gnn);
  if (cfg.variant == Variant::kMlpGn) {
    mlp_backward(*state.mlp, cfg, f.mlp, dzn, *grad.mlp);
  } else {
    gnn_backward(*graphs.negative, *state.negative_gnn, cfg, f.negative_gnn, dzn, *grad.negative_gnn);
  }
}

/// Predicted preference r_ui = z_u . z_i over final embeddings (users first, then items).
inline double predict_preference(const Matrix& z, std::size_t num_users, std::size_t user,
                                 std::size_t item) {
  const std::size_t row = num_users + item;
  if (user >= num_users || row >= static_cast<std::size_t>(z.rows())) {
    throw std::out_of_range("user or item index out of range");
  }
  return z.row(static_cast<Eigen::Index>(user)).dot(z.row(static_cast<Eigen::Index>(row)));
}

}  // namespace siren
