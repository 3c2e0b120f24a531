// Copyright 2026 The qtraj authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <qtraj/core.hpp>

namespace qtraj {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Deterministic number formatting
// ---------------------------------------------------------------------------

/// Round-trippable, locale-independent double formatting for CSV output.
inline std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

inline std::string hex64(std::uint64_t value) {
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(value));
  return buffer;
}

// ---------------------------------------------------------------------------
// Atomic file writes
// ---------------------------------------------------------------------------

/// Write-temp-then-rename so partially written artifacts never appear under
/// the final name.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw ConfigError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Matrix and channel (de)serialization
// ---------------------------------------------------------------------------

/// Matrices are row-major arrays of [re, im] pairs.
inline json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c)
      row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_json(const json& rows, Index dim) {
  if (!rows.is_array() || static_cast<Index>(rows.size()) != dim)
    throw ConfigError("matrix must have exactly dim rows");
  CMatrix m(dim, dim);
  for (Index r = 0; r < dim; ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != dim)
      throw ConfigError("matrix row has the wrong length");
    for (Index c = 0; c < dim; ++c) {
      const json& entry = row[static_cast<std::size_t>(c)];
      if (!entry.is_array() || entry.size() != 2)
        throw ConfigError("matrix entries must be [re, im] pairs");
      m(r, c) = Complex(entry[0].get<double>(), entry[1].get<double>());
    }
  }
  return m;
}

/// Channel document: {"dim": d, "outcomes": [...], "kraus": [matrix, ...]}.
inline json channel_to_json(const KrausChannel& ch) {
  json doc;
  doc["dim"] = ch.dim();
  doc["outcomes"] = ch.labels();
  json kraus = json::array();
  for (std::size_t i = 0; i < ch.outcome_count(); ++i)
    kraus.push_back(matrix_to_json(ch.op(i)));
  doc["kraus"] = std::move(kraus);
  return doc;
}

inline KrausChannel channel_from_json(const json& doc) {
  if (!doc.contains("dim") || !doc.contains("kraus"))
    throw ConfigError("channel document needs 'dim' and 'kraus'");
  const Index dim = doc.at("dim").get<Index>();
  if (dim < 1) throw ConfigError("channel dim must be >= 1");
  std::vector<std::string> labels;
  if (doc.contains("outcomes"))
    labels = doc.at("outcomes").get<std::vector<std::string>>();
  const json& kraus = doc.at("kraus");
  if (!kraus.is_array() || kraus.empty())
    throw ConfigError("channel needs at least one Kraus operator");
  std::vector<CMatrix> ops;
  ops.reserve(kraus.size());
  for (const json& entry : kraus) ops.push_back(matrix_from_json(entry, dim));
  return KrausChannel(std::move(ops), std::move(labels));
}

inline KrausChannel load_channel(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return channel_from_json(doc);
}

inline void save_channel(const KrausChannel& ch,
                         const std::filesystem::path& path) {
  write_file_atomic(path, channel_to_json(ch).dump(2) + "\n");
}

/// State document: {"dim": d, "matrix": [[...]]}.
inline json density_to_json(const DensityMatrix& rho) {
  json doc;
  doc["dim"] = rho.dim();
  doc["matrix"] = matrix_to_json(rho.matrix());
  return doc;
}

inline DensityMatrix density_from_json(const json& doc) {
  if (!doc.contains("dim") || !doc.contains("matrix"))
    throw ConfigError("state document needs 'dim' and 'matrix'");
  const Index dim = doc.at("dim").get<Index>();
  return DensityMatrix(matrix_from_json(doc.at("matrix"), dim));
}

inline DensityMatrix load_density(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return density_from_json(doc);
}

inline void save_density(const DensityMatrix& rho,
                         const std::filesystem::path& path) {
  write_file_atomic(path, density_to_json(rho).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// CSV assembly
// ---------------------------------------------------------------------------

/// CSV text with a leading provenance comment; headers are emitted verbatim.
class CsvBuilder {
 public:
  CsvBuilder(std::uint64_t config_hash, std::uint64_t seed,
             const std::string& header) {
    text_ = "# config_hash=" + hex64(config_hash) +
            " seed=" + std::to_string(seed) + "\n" + header + "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

}  // namespace qtraj
