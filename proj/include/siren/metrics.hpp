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

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace siren {

/// Per-user relevant test items (rating >= threshold), sorted ascending.
struct GroundTruth {
  std::vector<std::vector<std::uint32_t>> items;

  const std::vector<std::uint32_t>& of(std::size_t user) const { return items.at(user); }
};

inline GroundTruth build_ground_truth(std::size_t num_users, std::span<const Interaction> test,
                                      double min_rating = 4.0) {
  GroundTruth t;
  t.items.resize(num_users);
  for (const auto& r : test) {
    if (r.rating >= min_rating) t.items.at(r.user).push_back(r.item);
  }
  for (auto& v : t.items) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return t;
}

struct Recommendation {
  std::vector<std::uint32_t> items;  // best first
  bool short_list = false;           // fewer than K candidates were available
};

/// Highest-scoring K items outside `exclude` (sorted ascending). Ties go to the lower index.
inline Recommendation topk_from_scores(std::span<const double> scores, std::size_t k,
                                       std::span<const std::uint32_t> exclude = {}) {
  if (k < 1) throw std::invalid_argument("K must be >= 1");
  std::vector<std::uint32_t> candidates;
  candidates.reserve(scores.size());
  for (std::uint32_t j = 0; j < scores.size(); ++j) {
    if (!std::binary_search(exclude.begin(), exclude.end(), j)) candidates.push_back(j);
  }
  Recommendation rec;
  rec.short_list = candidates.size() < k;
  const std::size_t take = std::min(k, candidates.size());
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), better);
  candidates.resize(take);
  rec.items = std::move(candidates);
  return rec;
}

/// Ranks items for `user` by z_u . z_i over the final embeddings.
inline Recommendation topk_recommend(const Matrix& z, std::size_t num_users, std::uint32_t user,
                                     std::size_t k, std::span<const std::uint32_t> exclude = {}) {
  if (user >= num_users) throw std::out_of_range("user index out of range");
  const auto n_items = z.rows() - static_cast<Eigen::Index>(num_users);
  const Vector scores =
      z.bottomRows(n_items) * z.row(static_cast<Eigen::Index>(user)).transpose();
  return topk_from_scores(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
                          k, exclude);
}

namespace detail {

inline std::size_t hits(std::span<const std::uint32_t> recs, std::span<const std::uint32_t> truth,
                        std::size_t k) {
  std::size_t h = 0;
  for (std::size_t i = 0; i < std::min(k, recs.size()); ++i) {
    h += std::binary_search(truth.begin(), truth.end(), recs[i]);
  }
  return h;
}

}  // namespace detail

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// `truth` must be sorted and non-empty.
inline PrecisionRecall precision_recall_at_k(std::span<const std::uint32_t> recs,
                                             std::span<const std::uint32_t> truth, std::size_t k) {
  if (truth.empty()) throw std::invalid_argument("empty ground truth");
  const auto h = static_cast<double>(detail::hits(recs, truth, k));
  return {h / static_cast<double>(k), h / static_cast<double>(truth.size())};
}

/// Binary-relevance nDCG with min(|truth|, K) ideal placements. `truth` sorted, non-empty.
inline double ndcg_at_k(std::span<const std::uint32_t> recs, std::span<const std::uint32_t> truth,
                        std::size_t k) {
  if (truth.empty()) throw std::invalid_argument("empty ground truth");
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, recs.size()); ++i) {
    if (std::binary_search(truth.begin(), truth.end(), recs[i])) dcg += 1.0 / std::log2(i + 2.0);
  }
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, truth.size()); ++i) idcg += 1.0 / std::log2(i + 2.0);
  return dcg / idcg;
}

struct MetricTriple {
  double precision = 0.0;
  double recall = 0.0;
  double ndcg = 0.0;
};

struct GroupReport {
  std::string label;
  std::size_t users = 0;
  std::map<std::size_t, MetricTriple> metrics;
};

struct RankingReport {
  std::vector<std::size_t> ks;
  std::size_t evaluated_users = 0;
  std::map<std::size_t, MetricTriple> overall;
  std::vector<GroupReport> groups;  // empty unless grouping was requested
};

struct EvalOptions {
  std::vector<std::size_t> ks{5, 10, 15};
  bool groups = false;
  bool average_over_all_users = false;  // divide by M instead of by evaluated users
  double relevance_threshold = 4.0;
  std::size_t threads = 1;
};

/// Training-interaction bins used for the sparsity breakdown.
struct SparsityBin {
  const char* label;
  std::size_t lo, hi;  // [lo, hi)
};

inline constexpr SparsityBin kSparsityBins[] = {
    {"[0,20)", 0, 20},
    {"[20,50)", 20, 50},
    {"[50,inf)", 50, std::numeric_limits<std::size_t>::max()},
};

inline std::size_t sparsity_bin(std::size_t train_count) {
  for (std::size_t b = 0; b < std::size(kSparsityBins); ++b) {
    if (train_count < kSparsityBins[b].hi) return b;
  }
  return std::size(kSparsityBins) - 1;
}

/// Ranks every user with test ground truth against all items they did not
/// interact with in training and averages P@K, R@K and nDCG@K.
inline RankingReport evaluate(const Matrix& z, std::size_t num_users, std::size_t num_items,
                              std::span<const Interaction> train, std::span<const Interaction> test,
                              const EvalOptions& opt = {}) {
  if (opt.ks.empty()) throw std::invalid_argument("no cutoffs requested");
  if (static_cast<std::size_t>(z.rows()) != num_users + num_items) {
    throw ShapeError("embedding rows do not match user + item count");
  }
  const auto truth = build_ground_truth(num_users, test, opt.relevance_threshold);
  std::vector<std::vector<std::uint32_t>> seen(num_users);
  for (const auto& r : train) seen.at(r.user).push_back(r.item);
  for (auto& v : seen) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  const std::size_t k_max = *std::max_element(opt.ks.begin(), opt.ks.end());
  const std::size_t nk = opt.ks.size();

  // Per-user metrics, then a reduction in user order regardless of thread count.
  std::vector<MetricTriple> per_user(num_users * nk);
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t u = lo; u < hi; ++u) {
      if (truth.items[u].empty()) continue;
      const auto rec = topk_recommend(z, num_users, static_cast<std::uint32_t>(u), k_max, seen[u]);
      for (std::size_t a = 0; a < nk; ++a) {
        const auto pr = precision_recall_at_k(rec.items, truth.items[u], opt.ks[a]);
        per_user[u * nk + a] = {pr.precision, pr.recall, ndcg_at_k(rec.items, truth.items[u], opt.ks[a])};
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(opt.threads, num_users));
  if (threads == 1) {
    work(0, num_users);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(work, t * num_users / threads, (t + 1) * num_users / threads);
    }
  }

  RankingReport report;
  report.ks = opt.ks;
  const std::size_t nbins = std::size(kSparsityBins);
  std::vector<std::vector<MetricTriple>> sums(nbins + 1, std::vector<MetricTriple>(nk));
  std::vector<std::size_t> evaluated(nbins + 1, 0), population(nbins + 1, 0);
  for (std::size_t u = 0; u < num_users; ++u) {
    const std::size_t b = sparsity_bin(seen[u].size());
    ++population[b];
    ++population[nbins];
    if (truth.items[u].empty()) continue;
    ++evaluated[b];
    ++evaluated[nbins];
    for (std::size_t a = 0; a < nk; ++a) {
      for (std::size_t slot : {b, nbins}) {
        sums[slot][a].precision += per_user[u * nk + a].precision;
        sums[slot][a].recall += per_user[u * nk + a].recall;
        sums[slot][a].ndcg += per_user[u * nk + a].ndcg;
      }
    }
  }
  if (evaluated[nbins] == 0) throw std::runtime_error("no user has test ground truth to evaluate");
  auto mean = [&](std::size_t slot) {
    std::map<std::size_t, MetricTriple> m;
    const double denom = static_cast<double>(opt.average_over_all_users ? population[slot] : evaluated[slot]);
    for (std::size_t a = 0; a < nk; ++a) {
      MetricTriple t;
      if (denom > 0) t = {sums[slot][a].precision / denom, sums[slot][a].recall / denom, sums[slot][a].ndcg / denom};
      m[opt.ks[a]] = t;
    }
    return m;
  };
  report.evaluated_users = evaluated[nbins];
  report.overall = mean(nbins);
  if (opt.groups) {
    for (std::size_t b = 0; b < nbins; ++b) {
      report.groups.push_back({kSparsityBins[b].label, evaluated[b], mean(b)});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Output

inline void write_report_csv(std::ostream& out, const RankingReport& r) {
  out << "K,metric,value,group\n";
  auto rows = [&](const std::map<std::size_t, MetricTriple>& m, const std::string& group) {
    for (const auto& [k, t] : m) {
      out << k << ",precision," << detail::format_double(t.precision) << ',' << group << '\n';
      out << k << ",recall," << detail::format_double(t.recall) << ',' << group << '\n';
      out << k << ",ndcg," << detail::format_double(t.ndcg) << ',' << group << '\n';
    }
  };
  rows(r.overall, "all");
  for (const auto& g : r.groups) rows(g.metrics, g.label);
}

inline void write_report_table(std::ostream& out, const RankingReport& r) {
  auto block = [&](const std::map<std::size_t, MetricTriple>& m, const std::string& title,
                   std::size_t users) {
    out << title << " (" << users << " users)\n";
    out << "  " << std::setw(4) << "K" << std::setw(10) << "P@K" << std::setw(10) << "R@K"
        << std::setw(10) << "nDCG@K" << '\n';
    for (const auto& [k, t] : m) {
      out << "  " << std::setw(4) << k << std::fixed << std::setprecision(4) << std::setw(10)
          << t.precision << std::setw(10) << t.recall << std::setw(10) << t.ndcg << '\n';
    }
    out.unsetf(std::ios::floatfield);
  };
  block(r.overall, "all", r.evaluated_users);
  for (const auto& g : r.groups) block(g.metrics, "group " + g.label, g.users);
}

/// Mean and sample standard deviation of one metric across runs.
struct AggregateRow {
  std::size_t k = 0;
  std::string metric;
  std::string group;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t runs = 0;
};

inline std::vector<AggregateRow> aggregate(const std::vector<RankingReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("nothing to aggregate");
  std::vector<AggregateRow> rows;
  auto collect = [&](const std::string& group, auto&& pick_map) {
    for (std::size_t k : reports.front().ks) {
      for (const char* metric : {"precision", "recall", "ndcg"}) {
        std::vector<double> xs;
        for (const auto& r : reports) {
          const auto* m = pick_map(r);
          if (!m || !m->count(k)) throw std::invalid_argument("reports disagree on cutoffs or groups");
          const auto& t = m->at(k);
          xs.push_back(metric[0] == 'p' ? t.precision : metric[0] == 'r' ? t.recall : t.ndcg);
        }
        AggregateRow row{k, metric, group, 0.0, 0.0, xs.size()};
        for (double x : xs) row.mean += x;
        row.mean /= static_cast<double>(xs.size());
        if (xs.size() > 1) {
          for (double x : xs) row.stddev += (x - row.mean) * (x - row.mean);
          row.stddev = std::sqrt(row.stddev / static_cast<double>(xs.size() - 1));
        }
        rows.push_back(row);
      }
    }
  };
  collect("all", [](const RankingReport& r) { return &r.overall; });
  for (std::size_t g = 0; g < reports.front().groups.size(); ++g) {
    const std::string label = reports.front().groups[g].label;
    collect(label, [g](const RankingReport& r) {
      return g < r.groups.size() ? &r.groups[g].metrics : nullptr;
    });
  }
  return rows;
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "K,metric,mean,std,group,runs\n";
  for (const auto& r : rows) {
    out << r.k << ',' << r.metric << ',' << detail::format_double(r.mean) << ','
        << detail::format_double(r.stddev) << ',' << r.group << ',' << r.runs << '\n';
  }
}

inline void write_aggregate_table(std::ostream& out, const std::vector<AggregateRow>& rows) {
  std::string group;
  for (const auto& r : rows) {
    if (r.group != group) {
      group = r.group;
      out << "group " << group << '\n';
    }
    out << "  " << r.metric << '@' << r.k << "  " << std::fixed << std::setprecision(4) << r.mean
        << " +- " << r.stddev << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

}  // namespace siren
