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
#include "siren/data.hpp"

#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

namespace siren {

struct SignedEdge {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double weight = 0.0;  // rating minus the like/dislike threshold

  friend bool operator==(const SignedEdge&, const SignedEdge&) = default;
};

/// User-item graph whose edge weights are ratings shifted by `threshold`.
/// Zero-weight edges are never stored.
struct SignedBipartiteGraph {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  double threshold = 3.5;
  std::vector<SignedEdge> edges;

  std::size_t num_nodes() const noexcept { return num_users + num_items; }
};

/// Shifts every rating by `threshold`. A repeated (user, item) pair is an error.
inline SignedBipartiteGraph build_signed_graph(std::size_t num_users, std::size_t num_items,
                                               std::span<const Interaction> train, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("rating threshold must be positive");
  SignedBipartiteGraph g{num_users, num_items, threshold, {}};
  g.edges.reserve(train.size());
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(train.size() * 2);
  for (const auto& r : train) {
    if (r.user >= num_users || r.item >= num_items) {
      throw ShapeError("interaction index out of range");
    }
    const std::uint64_t key = (std::uint64_t{r.user} << 32) | r.item;
    if (!seen.insert(key).second) {
      throw ValidationError("duplicate rating for user " + std::to_string(r.user) + ", item " +
                            std::to_string(r.item));
    }
    const double w = r.rating - threshold;
    if (w != 0.0) g.edges.push_back({r.user, r.item, w});
  }
  return g;
}

inline SignedBipartiteGraph build_signed_graph(const DatasetDescriptor& desc,
                                               const std::vector<RatingRecord>& train,
                                               double threshold) {
  const auto resolved = desc.resolve(train);
  return build_signed_graph(desc.num_users(), desc.num_items(), resolved, threshold);
}

/// Edge-disjoint split of a signed graph. Both halves keep the full node sets.
struct PartitionedGraphs {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<SignedEdge> positive;
  std::vector<SignedEdge> negative;
};

inline PartitionedGraphs partition(const SignedBipartiteGraph& g) {
  PartitionedGraphs p{g.num_users, g.num_items, {}, {}};
  for (const auto& e : g.edges) {
    if (e.weight > 0.0) {
      p.positive.push_back(e);
    } else if (e.weight < 0.0) {
      p.negative.push_back(e);
    }
  }
  return p;
}

inline void write_edges(std::ostream& out, std::span<const SignedEdge> edges) {
  for (const auto& e : edges) out << e.user << '\t' << e.item << '\t' << e.weight << '\n';
}

enum class Backbone { kLightGcn, kLrGccf, kNgcf };

inline Backbone parse_backbone(std::string_view s) {
  if (s == "lightgcn") return Backbone::kLightGcn;
  if (s == "lrgccf") return Backbone::kLrGccf;
  if (s == "ngcf") return Backbone::kNgcf;
  throw std::invalid_argument("unknown backbone '" + std::string(s) + "'");
}

inline const char* backbone_name(Backbone b) {
  switch (b) {
    case Backbone::kLightGcn: return "lightgcn";
    case Backbone::kLrGccf: return "lrgccf";
    case Backbone::kNgcf: return "ngcf";
  }
  return "?";
}

/// Degree-normalized propagation matrix over the (M+N)-node space, stored as CSR.
/// Users occupy rows 0..M-1 and items rows M..M+N-1.
///
/// lightgcn / ngcf: A[x][y] = 1/sqrt(|N_x| |N_y|) for neighbours only.
/// lrgccf:          A[x][y] = 1/(sqrt(|N_x|+1) sqrt(|N_y|+1)) for neighbours and x itself.
class NormalizedAdjacency {
 public:
  NormalizedAdjacency() = default;

  NormalizedAdjacency(std::size_t num_users, std::size_t num_items,
                      std::span<const SignedEdge> edges, Backbone variant)
      : variant_(variant), num_users_(num_users), num_items_(num_items) {
    const std::size_t n = num_users + num_items;
    degree_.assign(n, 0);
    for (const auto& e : edges) {
      ++degree_[e.user];
      ++degree_[num_users + e.item];
    }
    const bool self = variant == Backbone::kLrGccf;
    row_ptr_.assign(n + 1, 0);
    for (std::size_t x = 0; x < n; ++x) row_ptr_[x + 1] = row_ptr_[x] + degree_[x] + (self ? 1 : 0);
    cols_.resize(row_ptr_[n]);
    coef_.resize(row_ptr_[n]);
    std::vector<std::size_t> fill(row_ptr_.begin(), row_ptr_.end() - 1);
    auto put = [&](std::size_t x, std::size_t y) {
      cols_[fill[x]] = static_cast<std::uint32_t>(y);
      coef_[fill[x]] = weight(x, y);
      ++fill[x];
    };
    if (self) {
      for (std::size_t x = 0; x < n; ++x) put(x, x);
    }
    for (const auto& e : edges) {
      const std::size_t u = e.user, v = num_users + e.item;
      put(u, v);
      put(v, u);
    }
  }

  Backbone variant() const noexcept { return variant_; }
  std::size_t num_users() const noexcept { return num_users_; }
  std::size_t num_items() const noexcept { return num_items_; }
  std::size_t num_nodes() const noexcept { return degree_.size(); }
  std::size_t num_entries() const noexcept { return cols_.size(); }

  /// Neighbour count |N_x| in the source edge set (self term not counted).
  std::uint32_t degree(std::size_t node) const { return degree_.at(node); }
  const std::vector<std::uint32_t>& degrees() const noexcept { return degree_; }

  /// Coefficient stored at (x, y); 0 when absent.
  double coefficient(std::size_t x, std::size_t y) const {
    double c = 0.0;
    for (std::size_t k = row_ptr_.at(x); k < row_ptr_[x + 1]; ++k) {
      if (cols_[k] == y) c += coef_[k];
    }
    return c;
  }

  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> entries() const {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> out;
    out.reserve(cols_.size());
    for (std::size_t x = 0; x + 1 < row_ptr_.size(); ++x) {
      for (std::size_t k = row_ptr_[x]; k < row_ptr_[x + 1]; ++k) {
        out.emplace_back(static_cast<std::uint32_t>(x), cols_[k], coef_[k]);
      }
    }
    return out;
  }

  /// out = A * in
  void multiply(const Matrix& in, Matrix& out) const {
    check_rows(in);
    out.setZero(in.rows(), in.cols());
    for (Eigen::Index x = 0; x < in.rows(); ++x) {
      auto row = out.row(x);
      for (std::size_t k = row_ptr_[x]; k < row_ptr_[x + 1]; ++k) row += coef_[k] * in.row(cols_[k]);
    }
  }

  /// out = A^T * in
  void multiply_transpose(const Matrix& in, Matrix& out) const {
    check_rows(in);
    out.setZero(in.rows(), in.cols());
    for (Eigen::Index x = 0; x < in.rows(); ++x) {
      for (std::size_t k = row_ptr_[x]; k < row_ptr_[x + 1]; ++k) {
        out.row(cols_[k]) += coef_[k] * in.row(x);
      }
    }
  }

  Matrix operator*(const Matrix& in) const {
    Matrix out;
    multiply(in, out);
    return out;
  }

 private:
  double weight(std::size_t x, std::size_t y) const {
    if (variant_ == Backbone::kLrGccf) {
      return 1.0 / (std::sqrt(degree_[x] + 1.0) * std::sqrt(degree_[y] + 1.0));
    }
    return 1.0 / std::sqrt(static_cast<double>(degree_[x]) * degree_[y]);
  }

  void check_rows(const Matrix& in) const {
    if (static_cast<std::size_t>(in.rows()) != num_nodes()) {
      throw ShapeError("adjacency has " + std::to_string(num_nodes()) + " nodes, input has " +
                       std::to_string(in.rows()) + " rows");
    }
  }

  Backbone variant_ = Backbone::kLightGcn;
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::vector<std::uint32_t> degree_;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> cols_;
  std::vector<double> coef_;
};

/// Propagation structure over the positive edges.
inline NormalizedAdjacency normalized_adjacency(const PartitionedGraphs& p, Backbone variant) {
  return NormalizedAdjacency(p.num_users, p.num_items, p.positive, variant);
}

}  // namespace siren
