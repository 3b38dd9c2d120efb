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

// Latent-factor generator for explicit ratings, used for offline tests and
// demos when no public dataset is at hand. Which items a user rates follows an
// "interest" factor and item popularity; the rating itself follows a "taste"
// factor correlated with interest, so low ratings still say something about
// what a user watches.

#include "siren/common.hpp"
#include "siren/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

namespace siren {

struct SyntheticSpec {
  std::size_t users = 943;
  std::size_t items = 1682;
  std::size_t factors = 8;
  std::size_t min_per_user = 20;
  double mean_extra_per_user = 86.0;  // geometric tail on top of min_per_user
  double popularity_spread = 1.2;     // log-normal sigma of item popularity
  double interest_strength = 1.5;
  double taste_correlation = 0.6;
  double noise = 0.5;
  // Cumulative share of ratings 1..4 (the rest are 5s).
  std::array<double, 4> rating_cdf{0.06, 0.17, 0.43, 0.78};
  std::uint64_t seed = 7;
};

inline std::vector<RatingRecord> synthetic_ratings(const SyntheticSpec& spec) {
  auto rng = make_rng(spec.seed, "synthetic");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto k = static_cast<Eigen::Index>(spec.factors);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.factors));

  Matrix user_interest(static_cast<Eigen::Index>(spec.users), k);
  Matrix user_taste(static_cast<Eigen::Index>(spec.users), k);
  Matrix item_factor(static_cast<Eigen::Index>(spec.items), k);
  for (Eigen::Index i = 0; i < user_interest.size(); ++i) user_interest.data()[i] = normal(rng);
  const double rho = spec.taste_correlation;
  for (Eigen::Index i = 0; i < user_taste.size(); ++i) {
    user_taste.data()[i] = rho * user_interest.data()[i] + std::sqrt(1.0 - rho * rho) * normal(rng);
  }
  for (Eigen::Index i = 0; i < item_factor.size(); ++i) item_factor.data()[i] = normal(rng) * scale;

  std::vector<double> log_pop(spec.items), item_bias(spec.items);
  for (std::size_t j = 0; j < spec.items; ++j) {
    log_pop[j] = spec.popularity_spread * normal(rng);
    item_bias[j] = 0.25 * log_pop[j] + 0.4 * normal(rng);
  }
  std::vector<double> user_bias(spec.users);
  for (auto& b : user_bias) b = 0.5 * normal(rng);

  struct Raw {
    std::size_t user, item;
    double score;
  };
  std::vector<Raw> raw;
  const double p_stop = 1.0 / (1.0 + spec.mean_extra_per_user);
  std::geometric_distribution<std::size_t> extra(p_stop);
  std::vector<std::pair<double, std::size_t>> keys(spec.items);
  for (std::size_t u = 0; u < spec.users; ++u) {
    const std::size_t n = std::min(spec.items / 2, spec.min_per_user + extra(rng));
    const auto affinity = item_factor * user_interest.row(static_cast<Eigen::Index>(u)).transpose();
    // Weighted sampling without replacement: keep the n largest log(U)/w keys.
    for (std::size_t j = 0; j < spec.items; ++j) {
      const double log_w = log_pop[j] + spec.interest_strength * affinity[static_cast<Eigen::Index>(j)];
      keys[j] = {std::log(unit(rng) + 1e-300) * std::exp(-log_w), j};
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n), keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t j = keys[r].second;
      const double taste = user_taste.row(static_cast<Eigen::Index>(u))
                               .dot(item_factor.row(static_cast<Eigen::Index>(j))) * 2.0;
      raw.push_back({u, j, user_bias[u] + item_bias[j] + taste + spec.noise * normal(rng)});
    }
  }

  std::vector<double> sorted(raw.size());
  std::transform(raw.begin(), raw.end(), sorted.begin(), [](const Raw& r) { return r.score; });
  std::sort(sorted.begin(), sorted.end());
  std::array<double, 4> cut{};
  for (std::size_t c = 0; c < 4; ++c) {
    cut[c] = sorted[std::min(sorted.size() - 1, static_cast<std::size_t>(spec.rating_cdf[c] * sorted.size()))];
  }
  std::vector<RatingRecord> out;
  out.reserve(raw.size());
  std::int64_t ts = 880000000;
  for (const auto& r : raw) {
    int rating = 5;
    for (std::size_t c = 0; c < 4; ++c) {
      if (r.score < cut[c]) {
        rating = static_cast<int>(c) + 1;
        break;
      }
    }
    out.push_back({std::to_string(r.user + 1), std::to_string(r.item + 1), static_cast<double>(rating), ts++});
  }
  // Interleave users the way raw dumps usually are.
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace siren
