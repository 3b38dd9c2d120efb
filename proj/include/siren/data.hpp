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

#include <algorithm>
#include <charconv>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace siren {

/// One explicit-feedback interaction as it appears in the raw data.
struct RatingRecord {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::int64_t timestamp = 0;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

struct RatingScale {
  double min = 1.0;
  double max = 5.0;

  bool contains(double r) const noexcept { return r >= min && r <= max; }
};

enum class RatingFormat { kTsv, kMovielensDat };

inline RatingFormat parse_format(std::string_view name) {
  if (name == "tsv") return RatingFormat::kTsv;
  if (name == "movielens-dat" || name == "dat") return RatingFormat::kMovielensDat;
  throw std::invalid_argument("unknown rating format '" + std::string(name) + "'");
}

inline const char* format_name(RatingFormat f) {
  return f == RatingFormat::kTsv ? "tsv" : "movielens-dat";
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

// Parses user/item/rating[/timestamp] fields; `line_no` is only used for errors.
inline RatingRecord record_from_fields(const std::vector<std::string_view>& f, std::size_t line_no) {
  if (f.size() != 3 && f.size() != 4) {
    throw ParseError(line_no, "expected 3 or 4 fields, got " + std::to_string(f.size()));
  }
  if (f[0].empty() || f[1].empty()) throw ParseError(line_no, "empty user or item identifier");
  RatingRecord r;
  r.user_id = std::string(f[0]);
  r.item_id = std::string(f[1]);
  auto rating = parse_number<double>(f[2]);
  if (!rating) throw ParseError(line_no, "bad rating '" + std::string(f[2]) + "'");
  r.rating = *rating;
  if (f.size() == 4) {
    auto ts = parse_number<std::int64_t>(f[3]);
    if (!ts) throw ParseError(line_no, "bad timestamp '" + std::string(f[3]) + "'");
    r.timestamp = *ts;
  }
  return r;
}

}  // namespace detail

/// Streams rating records out of `source`. Blank lines are skipped; in TSV,
/// lines starting with '#' are comments. Order is preserved.
inline std::vector<RatingRecord> parse_ratings(std::istream& source, RatingFormat format,
                                               RatingScale scale = {}) {
  std::vector<RatingRecord> records;
  std::string line;
  std::size_t line_no = 0;
  const std::string_view sep = format == RatingFormat::kTsv ? "\t" : "::";
  while (std::getline(source, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (detail::is_blank(view)) continue;
    if (format == RatingFormat::kTsv && view.front() == '#') continue;
    auto rec = detail::record_from_fields(detail::split_fields(view, sep), line_no);
    if (!scale.contains(rec.rating)) {
      throw ValidationError("line " + std::to_string(line_no) + ": rating " +
                            detail::format_double(rec.rating) + " outside scale [" +
                            detail::format_double(scale.min) + ", " +
                            detail::format_double(scale.max) + "]");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline void write_tsv_record(std::ostream& out, const RatingRecord& r) {
  out << r.user_id << '\t' << r.item_id << '\t' << detail::format_double(r.rating) << '\t'
      << r.timestamp;
}

inline void write_tsv(std::ostream& out, const std::vector<RatingRecord>& records) {
  for (const auto& r : records) {
    write_tsv_record(out, r);
    out << '\n';
  }
}

/// Repeatedly drops users and items with fewer than `threshold` interactions
/// until every survivor meets the threshold.
inline std::vector<RatingRecord> filter_min_interactions(std::vector<RatingRecord> records,
                                                         std::size_t threshold) {
  if (threshold == 0) return records;
  while (true) {
    std::unordered_map<std::string_view, std::size_t> user_deg, item_deg;
    for (const auto& r : records) {
      ++user_deg[r.user_id];
      ++item_deg[r.item_id];
    }
    std::vector<char> keep(records.size());
    bool changed = false;
    for (std::size_t i = 0; i < records.size(); ++i) {
      keep[i] = user_deg[records[i].user_id] >= threshold && item_deg[records[i].item_id] >= threshold;
      changed |= !keep[i];
    }
    if (!changed) return records;
    std::vector<RatingRecord> next;
    next.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (keep[i]) next.push_back(std::move(records[i]));
    }
    records = std::move(next);
  }
}

/// A rating after identifier resolution. Users are 0..M-1 and items 0..N-1.
struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double rating = 0.0;
};

/// Bijection between external identifiers and dense indices, in order of first appearance.
class DatasetDescriptor {
 public:
  DatasetDescriptor() = default;

  explicit DatasetDescriptor(const std::vector<RatingRecord>& records, RatingScale scale = {})
      : scale_(scale) {
    for (const auto& r : records) {
      intern(user_index_, user_ids_, r.user_id);
      intern(item_index_, item_ids_, r.item_id);
    }
  }

  std::size_t num_users() const noexcept { return user_ids_.size(); }
  std::size_t num_items() const noexcept { return item_ids_.size(); }
  RatingScale scale() const noexcept { return scale_; }

  const std::string& user_id(std::uint32_t u) const { return user_ids_.at(u); }
  const std::string& item_id(std::uint32_t i) const { return item_ids_.at(i); }

  std::uint32_t user_index(const std::string& id) const { return lookup(user_index_, id, "user"); }
  std::uint32_t item_index(const std::string& id) const { return lookup(item_index_, id, "item"); }

  Interaction resolve(const RatingRecord& r) const {
    return {user_index(r.user_id), item_index(r.item_id), r.rating};
  }

  std::vector<Interaction> resolve(const std::vector<RatingRecord>& records) const {
    std::vector<Interaction> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(resolve(r));
    return out;
  }

 private:
  using IndexMap = std::unordered_map<std::string, std::uint32_t>;

  static void intern(IndexMap& map, std::vector<std::string>& ids, const std::string& id) {
    if (map.try_emplace(id, static_cast<std::uint32_t>(ids.size())).second) ids.push_back(id);
  }

  static std::uint32_t lookup(const IndexMap& map, const std::string& id, const char* kind) {
    auto it = map.find(id);
    if (it == map.end()) throw ValidationError(std::string("unknown ") + kind + " id '" + id + "'");
    return it->second;
  }

  RatingScale scale_;
  IndexMap user_index_, item_index_;
  std::vector<std::string> user_ids_, item_ids_;
};

struct FoldSplit {
  std::size_t fold_index = 0;
  std::vector<RatingRecord> train;
  std::vector<RatingRecord> test;
};

/// Test-fold index of every record: a seeded shuffle cut into k contiguous
/// chunks, so fold sizes differ by at most one.
inline std::vector<std::uint32_t> kfold_assignment(std::size_t num_records, std::size_t k,
                                                   std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k-fold split needs k >= 2");
  if (num_records == 0) throw std::invalid_argument("k-fold split of an empty record list");
  if (k > num_records) {
    throw std::invalid_argument("k = " + std::to_string(k) + " exceeds record count " +
                                std::to_string(num_records));
  }
  std::vector<std::size_t> order(num_records);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint32_t> fold_of(num_records);
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t lo = f * num_records / k;
    const std::size_t hi = (f + 1) * num_records / k;
    for (std::size_t p = lo; p < hi; ++p) fold_of[order[p]] = static_cast<std::uint32_t>(f);
  }
  return fold_of;
}

inline std::vector<FoldSplit> kfold_split(const std::vector<RatingRecord>& records, std::size_t k,
                                          std::uint64_t seed) {
  const auto fold_of = kfold_assignment(records.size(), k, seed);
  std::vector<FoldSplit> folds(k);
  for (std::size_t f = 0; f < k; ++f) folds[f].fold_index = f;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(records[i]);
    }
  }
  return folds;
}

// Fold manifests: the test records of one fold, TSV with a trailing fold column.

inline constexpr std::string_view kManifestHeader = "# user\titem\trating\ttimestamp\tfold";

inline void write_manifest(std::ostream& out, const std::vector<RatingRecord>& records,
                           const std::vector<std::uint32_t>& fold_of, std::uint32_t fold) {
  out << kManifestHeader << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (fold_of[i] != fold) continue;
    write_tsv_record(out, records[i]);
    out << '\t' << fold << '\n';
  }
}

struct ManifestRow {
  RatingRecord record;
  std::uint32_t fold = 0;
};

inline std::vector<ManifestRow> read_manifest(std::istream& in, RatingScale scale = {}) {
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (detail::is_blank(view) || view.front() == '#') continue;
    auto fields = detail::split_fields(view, "\t");
    if (fields.size() != 5) throw ParseError(line_no, "manifest rows need 5 fields");
    auto fold = detail::parse_number<std::uint32_t>(fields.back());
    if (!fold) throw ParseError(line_no, "bad fold index");
    fields.pop_back();
    ManifestRow row{detail::record_from_fields(fields, line_no), *fold};
    if (!scale.contains(row.record.rating)) {
      throw ValidationError("line " + std::to_string(line_no) + ": rating outside scale");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace siren
