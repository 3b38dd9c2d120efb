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

#include "../oracles.hpp"
#include "siren/siren.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

namespace siren::testing {

using oracle::dense_oracle;
using oracle::propagation_oracle;

inline std::vector<RatingRecord> parse_tsv(const std::string& text) {
  std::istringstream in(text);
  return parse_ratings(in, RatingFormat::kTsv);
}

inline RatingRecord rec(std::string u, std::string i, double r, std::int64_t ts = 0) {
  return {std::move(u), std::move(i), r, ts};
}

/// Dense (M+N)x(M+N) matrix of an adjacency, built from its entry list.
inline Matrix to_dense(const NormalizedAdjacency& a) {
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(a.num_nodes()),
                          static_cast<Eigen::Index>(a.num_nodes()));
  for (const auto& [x, y, c] : a.entries()) d(x, y) += c;
  return d;
}

/// Random signed graph with every user/item pair present with probability `density`.
inline SignedBipartiteGraph random_graph(std::size_t users, std::size_t items, double density,
                                         Rng& rng) {
  return build_signed_graph(users, items, random_interactions(users, items, density, rng), 3.5);
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline double relative_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max(max_abs(a), max_abs(b));
  return scale == 0.0 ? 0.0 : max_abs(a - b) / scale;
}

inline const char* env(const char* name) {
  const char* v = std::getenv(name);
  return v && *v ? v : nullptr;
}

}  // namespace siren::testing
