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

// Binary checkpoint layout (all integers little-endian):
//
//   "SIRENCKP"              8-byte magic
//   u32 version             currently 1
//   u32 n, n bytes          model configuration as key=value text, plus
//                           num-users / num-items lines
//   u32 tensor count
//   per tensor: u32 name length, name bytes, u32 rows, u32 cols,
//               rows*cols IEEE-754 binary32 values, row-major

#include "siren/common.hpp"
#include "siren/config.hpp"
#include "siren/model.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace siren {

inline constexpr std::array<char, 8> kCheckpointMagic{'S', 'I', 'R', 'E', 'N', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ValidationError("truncated checkpoint");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const auto n = get_u32(in);
  if (n > (1u << 24)) throw ValidationError("implausible string length in checkpoint");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw ValidationError("truncated checkpoint");
  return s;
}

inline void put_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
  put_string(out, name);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m.data()[i])));
  }
}

inline Matrix get_tensor_data(std::istream& in, std::uint32_t rows, std::uint32_t cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<float>(get_u32(in));
  return m;
}

inline void write_header(std::ostream& out, const std::string& config_text) {
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  put_u32(out, kCheckpointVersion);
  put_string(out, config_text);
}

inline std::string read_header(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic) {
    throw ValidationError("not a checkpoint file (bad magic)");
  }
  const auto version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  }
  return get_string(in);
}

}  // namespace detail

struct Checkpoint {
  ModelConfig config;
  ModelState state;
};

inline void save_checkpoint(std::ostream& out, const ModelConfig& cfg, const ModelState& state) {
  std::ostringstream text;
  write_model_config(text, cfg);
  text << "num-users=" << state.num_users << '\n' << "num-items=" << state.num_items << '\n';
  detail::write_header(out, text.str());
  const auto params = parameter_list(state);
  detail::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, m] : params) detail::put_tensor(out, name, *m);
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

inline Checkpoint load_checkpoint(std::istream& in) {
  std::istringstream text(detail::read_header(in));
  Checkpoint ck;
  std::size_t users = 0, items = 0;
  for (const auto& [k, v] : parse_key_values(text)) {
    if (k == "num-users") users = detail::number_or_throw<std::size_t>(k, v);
    else if (k == "num-items") items = detail::number_or_throw<std::size_t>(k, v);
    else if (!apply_model_key(ck.config, k, v)) throw ValidationError("unknown checkpoint key " + k);
  }
  ck.state = initialize_model(ck.config, users, items, 0);
  auto params = parameter_list(ck.state);
  const auto count = detail::get_u32(in);
  if (count != params.size()) throw ValidationError("checkpoint tensor count does not match its config");
  for (auto& [name, m] : params) {
    const auto stored = detail::get_string(in);
    const auto rows = detail::get_u32(in);
    const auto cols = detail::get_u32(in);
    if (stored != name || rows != m->rows() || cols != m->cols()) {
      throw ValidationError("checkpoint tensor " + stored + " does not match expected " + name);
    }
    *m = detail::get_tensor_data(in, rows, cols);
  }
  return ck;
}

/// Single-matrix file with the same framing; used for final embeddings.
inline void save_matrix(std::ostream& out, const std::string& name, const Matrix& m,
                        const std::string& note = {}) {
  detail::write_header(out, note);
  detail::put_u32(out, 1);
  detail::put_tensor(out, name, m);
}

inline Matrix load_matrix(std::istream& in) {
  detail::read_header(in);
  if (detail::get_u32(in) != 1) throw ValidationError("expected a single-tensor file");
  detail::get_string(in);
  const auto rows = detail::get_u32(in);
  const auto cols = detail::get_u32(in);
  return detail::get_tensor_data(in, rows, cols);
}

}  // namespace siren
