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

#include "siren/data.hpp"
#include "siren/model.hpp"
#include "siren/train.hpp"

#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace siren {

/// Everything needed to reproduce one experiment run.
struct ExperimentConfig {
  std::string dataset;
  std::string splits = "splits";  // directory of fold manifests
  RatingFormat format = RatingFormat::kTsv;
  RatingScale scale{};
  double w_o = 3.5;
  std::size_t min_interactions = 0;
  std::size_t folds = 5;
  std::size_t fold = 0;
  ModelConfig model{};
  TrainConfig train{};
  std::vector<std::size_t> ks{5, 10, 15};
  bool groups = false;
  bool all_users = false;
  std::size_t checkpoint_every = 0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string out = "runs";
};

using KeyValues = std::map<std::string, std::string>;

/// `key=value` per line; blank lines and lines starting with '#' or '[' are ignored.
inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#' || line[first] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\"");
      const auto b = s.find_last_not_of(" \t\"");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::string join_ks(const std::vector<std::size_t>& ks) {
  std::string s;
  for (std::size_t i = 0; i < ks.size(); ++i) s += (i ? "," : "") + std::to_string(ks[i]);
  return s;
}

inline std::vector<std::size_t> parse_ks(const std::string& s) {
  std::vector<std::size_t> ks;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto v = detail::parse_number<std::size_t>(tok);
    if (!v || *v == 0) throw std::invalid_argument("bad cutoff list '" + s + "'");
    ks.push_back(*v);
  }
  if (ks.empty()) throw std::invalid_argument("empty cutoff list");
  return ks;
}

inline void write_model_config(std::ostream& out, const ModelConfig& m) {
  out << "backbone=" << backbone_name(m.backbone) << '\n'
      << "variant=" << variant_name(m.variant) << '\n'
      << "dim=" << m.dim << '\n'
      << "layers=" << m.gnn_layers << '\n'
      << "mlp-layers=" << m.mlp_layers << '\n'
      << "attn-dim=" << m.attention_dim << '\n'
      << "leaky-alpha=" << detail::format_double(m.leaky_relu_alpha) << '\n'
      << "dropout=" << detail::format_double(m.dropout) << '\n';
}

inline void write_config(std::ostream& out, const ExperimentConfig& c) {
  out << "dataset=" << c.dataset << '\n'
      << "splits=" << c.splits << '\n'
      << "format=" << format_name(c.format) << '\n'
      << "rating-min=" << detail::format_double(c.scale.min) << '\n'
      << "rating-max=" << detail::format_double(c.scale.max) << '\n'
      << "w-o=" << detail::format_double(c.w_o) << '\n'
      << "min-interactions=" << c.min_interactions << '\n'
      << "folds=" << c.folds << '\n'
      << "fold=" << c.fold << '\n';
  write_model_config(out, c.model);
  const auto& t = c.train;
  out << "loss=" << loss_name(t.loss) << '\n'
      << "n-neg=" << t.n_neg << '\n'
      << "c=" << detail::format_double(t.c) << '\n'
      << "lambda-reg=" << detail::format_double(t.lambda_reg) << '\n'
      << "lr=" << detail::format_double(t.learning_rate) << '\n'
      << "batch-size=" << t.batch_size << '\n'
      << "epochs=" << t.epochs << '\n'
      << "positive-only=" << (t.positive_only ? "true" : "false") << '\n'
      << "noise-degree=" << (t.noise_degree == NoiseDegree::kSigned ? "signed" : "positive") << '\n'
      << "k=" << join_ks(c.ks) << '\n'
      << "groups=" << (c.groups ? "true" : "false") << '\n'
      << "all-users=" << (c.all_users ? "true" : "false") << '\n'
      << "checkpoint-every=" << c.checkpoint_every << '\n'
      << "seed=" << c.seed << '\n'
      << "threads=" << c.threads << '\n'
      << "out=" << c.out << '\n';
}

namespace detail {

template <class T>
T number_or_throw(const std::string& key, const std::string& value) {
  auto v = parse_number<T>(value);
  if (!v) throw std::invalid_argument("bad value for " + key + ": '" + value + "'");
  return *v;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("bad boolean for " + key + ": '" + v + "'");
}

}  // namespace detail

/// Applies model keys; returns false for keys it does not own.
inline bool apply_model_key(ModelConfig& m, const std::string& k, const std::string& v) {
  using detail::number_or_throw;
  if (k == "backbone") m.backbone = parse_backbone(v);
  else if (k == "variant") m.variant = parse_variant(v);
  else if (k == "dim") m.dim = number_or_throw<std::size_t>(k, v);
  else if (k == "layers") m.gnn_layers = number_or_throw<std::size_t>(k, v);
  else if (k == "mlp-layers") m.mlp_layers = number_or_throw<std::size_t>(k, v);
  else if (k == "attn-dim") m.attention_dim = number_or_throw<std::size_t>(k, v);
  else if (k == "leaky-alpha") m.leaky_relu_alpha = number_or_throw<double>(k, v);
  else if (k == "dropout") m.dropout = number_or_throw<double>(k, v);
  else return false;
  return true;
}

inline void apply_key(ExperimentConfig& c, const std::string& k, const std::string& v) {
  using detail::number_or_throw;
  if (apply_model_key(c.model, k, v)) return;
  auto& t = c.train;
  if (k == "dataset") c.dataset = v;
  else if (k == "splits") c.splits = v;
  else if (k == "format") c.format = parse_format(v);
  else if (k == "rating-min") c.scale.min = number_or_throw<double>(k, v);
  else if (k == "rating-max") c.scale.max = number_or_throw<double>(k, v);
  else if (k == "w-o") c.w_o = number_or_throw<double>(k, v);
  else if (k == "min-interactions") c.min_interactions = number_or_throw<std::size_t>(k, v);
  else if (k == "folds") c.folds = number_or_throw<std::size_t>(k, v);
  else if (k == "fold") c.fold = number_or_throw<std::size_t>(k, v);
  else if (k == "loss") t.loss = parse_loss(v);
  else if (k == "n-neg") t.n_neg = number_or_throw<std::size_t>(k, v);
  else if (k == "c") t.c = number_or_throw<double>(k, v);
  else if (k == "lambda-reg") t.lambda_reg = number_or_throw<double>(k, v);
  else if (k == "lr") t.learning_rate = number_or_throw<double>(k, v);
  else if (k == "batch-size") t.batch_size = number_or_throw<std::size_t>(k, v);
  else if (k == "epochs") t.epochs = number_or_throw<std::size_t>(k, v);
  else if (k == "positive-only") t.positive_only = detail::parse_bool(k, v);
  else if (k == "noise-degree") {
    if (v != "signed" && v != "positive") throw std::invalid_argument("noise-degree must be signed|positive");
    t.noise_degree = v == "signed" ? NoiseDegree::kSigned : NoiseDegree::kPositive;
  }
  else if (k == "k") c.ks = parse_ks(v);
  else if (k == "groups") c.groups = detail::parse_bool(k, v);
  else if (k == "all-users") c.all_users = detail::parse_bool(k, v);
  else if (k == "checkpoint-every") c.checkpoint_every = number_or_throw<std::size_t>(k, v);
  else if (k == "seed") c.seed = number_or_throw<std::uint64_t>(k, v);
  else if (k == "threads") c.threads = number_or_throw<std::size_t>(k, v);
  else if (k == "out") c.out = v;
  else throw std::invalid_argument("unknown configuration key '" + k + "'");
}

inline ExperimentConfig read_config(std::istream& in) {
  ExperimentConfig c;
  for (const auto& [k, v] : parse_key_values(in)) apply_key(c, k, v);
  c.train.seed = c.seed;
  return c;
}

}  // namespace siren
