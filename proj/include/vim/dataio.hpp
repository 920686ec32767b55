// include/vim/dataio.hpp

// Copyright 2026  The vimeval authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VIM_DATAIO_HPP
#define VIM_DATAIO_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vim/core.hpp"
#include "vim/error.hpp"
#include "vim/io_util.hpp"
#include "vim/rng.hpp"

namespace vim {

inline constexpr std::string_view kManifestHeader = "#vim-manifest v1";

enum class Sex { F, M, Unknown };
enum class Split { Unassigned, Train, Morph, Test };

inline const char *to_string(Sex s) {
  switch (s) {
    case Sex::F: return "F";
    case Sex::M: return "M";
    default: return "-";
  }
}

inline const char *to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Morph: return "morph";
    case Split::Test: return "test";
    default: return "-";
  }
}

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  double duration_sec = 0.0;
  Sex sex = Sex::Unknown;
  Split split = Split::Unassigned;
  std::map<std::string, Embedding> embeddings;  // keyed by space name

  const Embedding *embedding(const std::string &space_name) const {
    auto it = embeddings.find(space_name);
    return it == embeddings.end() ? nullptr : &it->second;
  }
};

struct SpeakerProfile {
  std::string speaker_id;
  std::vector<std::string> utterance_ids;      // manifest order
  std::vector<std::size_t> utterance_rows;     // indices into Dataset::utterances
  double total_duration_sec = 0.0;
  Sex sex = Sex::Unknown;  // first declared sex among the utterances
};

struct Dataset {
  std::vector<EmbeddingSpace> spaces;
  std::vector<UtteranceRecord> utterances;

  const EmbeddingSpace *find_space(const std::string &name) const {
    for (const auto &s : spaces)
      if (s.name == name) return &s;
    return nullptr;
  }

  const EmbeddingSpace &space(const std::string &name) const {
    const EmbeddingSpace *s = find_space(name);
    if (!s) fail(ErrorCode::UnknownSpace, "no space named '" + name + "'");
    return *s;
  }

  // Declares a space; re-declaring with a different dim is an error.
  void add_space(const EmbeddingSpace &s) {
    if (s.dim == 0) fail(ErrorCode::InvalidConfig, "space dim must be >= 1");
    if (const EmbeddingSpace *old = find_space(s.name)) {
      if (old->dim != s.dim) {
        fail(ErrorCode::DimensionMismatch,
             "space '" + s.name + "' re-declared with dim " +
                 std::to_string(s.dim) + " (was " + std::to_string(old->dim) + ")");
      }
      return;
    }
    spaces.push_back(s);
  }
};

// Derived speaker index, keyed (and therefore iterated) by speaker id.
inline std::map<std::string, SpeakerProfile> speaker_index(const Dataset &ds) {
  std::map<std::string, SpeakerProfile> idx;
  for (std::size_t row = 0; row < ds.utterances.size(); ++row) {
    const UtteranceRecord &u = ds.utterances[row];
    SpeakerProfile &p = idx[u.speaker_id];
    if (p.utterance_ids.empty()) p.speaker_id = u.speaker_id;
    p.utterance_ids.push_back(u.utterance_id);
    p.utterance_rows.push_back(row);
    p.total_duration_sec += u.duration_sec;
    if (p.sex == Sex::Unknown) p.sex = u.sex;
  }
  return idx;
}

inline std::unordered_map<std::string, std::size_t> utterance_rows_by_id(
    const Dataset &ds) {
  std::unordered_map<std::string, std::size_t> idx;
  idx.reserve(ds.utterances.size());
  for (std::size_t row = 0; row < ds.utterances.size(); ++row) {
    idx.emplace(ds.utterances[row].utterance_id, row);
  }
  return idx;
}

// ---------------------------------------------------------------------------
// Manifest: UTF-8, one record per line,
//   utterance_id<TAB>speaker_id<TAB>duration_sec<TAB>sex<TAB>split
// first line `#vim-manifest v1`.  '-' stands for unassigned/unknown.
// ---------------------------------------------------------------------------

namespace detail {

inline Sex parse_sex(std::string_view s, std::size_t line_no) {
  if (s == "F") return Sex::F;
  if (s == "M") return Sex::M;
  if (s == "-") return Sex::Unknown;
  fail(ErrorCode::ParseError,
       "line " + std::to_string(line_no) + ": bad sex '" + std::string(s) + "'");
}

inline Split parse_split(std::string_view s, std::size_t line_no) {
  if (s == "train") return Split::Train;
  if (s == "morph") return Split::Morph;
  if (s == "test") return Split::Test;
  if (s == "-") return Split::Unassigned;
  fail(ErrorCode::ParseError,
       "line " + std::to_string(line_no) + ": bad split '" + std::string(s) + "'");
}

}  // namespace detail

inline Dataset load_manifest(const std::filesystem::path &path) {
  const std::string text = io::read_file(path);
  const auto lines = io::split_lines(text);
  if (lines.empty() || lines[0] != kManifestHeader) {
    fail(ErrorCode::ParseError,
         path.string() + ": line 1: missing '" + std::string(kManifestHeader) +
             "' header");
  }
  Dataset ds;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    std::string_view line = lines[i];
    if (line.empty() || line.front() == '#') continue;
    const auto f = io::split_tabs(line);
    if (f.size() != 5) {
      fail(ErrorCode::ParseError, path.string() + ": line " +
                                      std::to_string(line_no) + ": expected 5 fields, got " +
                                      std::to_string(f.size()));
    }
    UtteranceRecord rec;
    rec.utterance_id = std::string(f[0]);
    rec.speaker_id = std::string(f[1]);
    if (rec.utterance_id.empty() || rec.speaker_id.empty()) {
      fail(ErrorCode::ParseError,
           path.string() + ": line " + std::to_string(line_no) + ": empty id");
    }
    rec.duration_sec = io::parse_double(
        f[2], path.string() + ": line " + std::to_string(line_no));
    if (!(rec.duration_sec >= 0.0) || !std::isfinite(rec.duration_sec)) {
      fail(ErrorCode::ParseError, path.string() + ": line " +
                                      std::to_string(line_no) +
                                      ": negative or non-finite duration");
    }
    rec.sex = detail::parse_sex(f[3], line_no);
    rec.split = detail::parse_split(f[4], line_no);
    ds.utterances.push_back(std::move(rec));
  }
  std::unordered_set<std::string> ids;
  ids.reserve(ds.utterances.size());
  for (const auto &u : ds.utterances) {
    if (!ids.insert(u.utterance_id).second) {
      fail(ErrorCode::DuplicateUtteranceId,
           path.string() + ": duplicate utterance id '" + u.utterance_id + "'");
    }
  }
  return ds;
}

inline void save_manifest(const Dataset &ds, const std::filesystem::path &path) {
  std::string out(kManifestHeader);
  out.push_back('\n');
  for (const UtteranceRecord &u : ds.utterances) {
    out += u.utterance_id;
    out.push_back('\t');
    out += u.speaker_id;
    out.push_back('\t');
    out += io::format_double(u.duration_sec);
    out.push_back('\t');
    out += to_string(u.sex);
    out.push_back('\t');
    out += to_string(u.split);
    out.push_back('\n');
  }
  io::write_file(path, out);
}

// ---------------------------------------------------------------------------
// EVB (embedding vector blob), little-endian.  Normative layout:
//   magic "EVB1" | u32 dim | u64 count | per record:
//   u16 id-length | UTF-8 utterance id | dim x float32
// ---------------------------------------------------------------------------

enum class EmbeddingFormat { EVB, NPY };

struct EvbRecord {
  std::string id;
  std::vector<double> values;  // widened from the stored float32
};

struct EvbFile {
  std::uint32_t dim = 0;
  std::vector<EvbRecord> records;
};

inline EvbFile read_evb(const std::filesystem::path &path) {
  const std::string blob = io::read_file(path);
  io::ByteReader r(blob, path.string());
  if (r.take(4, "magic") != "EVB1") {
    fail(ErrorCode::MagicMismatch, path.string() + ": not an EVB1 file");
  }
  EvbFile f;
  f.dim = r.u32_le("dim");
  const std::uint64_t count = r.u64_le("count");
  f.records.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    EvbRecord rec;
    const std::uint16_t id_len = r.u16_le("id length");
    rec.id = std::string(r.take(id_len, "utterance id"));
    rec.values.resize(f.dim);
    for (std::uint32_t d = 0; d < f.dim; ++d) {
      rec.values[d] = static_cast<double>(r.f32_le("embedding value"));
    }
    f.records.push_back(std::move(rec));
  }
  if (r.remaining() != 0) {
    fail(ErrorCode::ParseError,
         path.string() + ": " + std::to_string(r.remaining()) +
             " trailing bytes after last record");
  }
  return f;
}

inline void write_evb(const std::filesystem::path &path, std::uint32_t dim,
                      const std::vector<EvbRecord> &records) {
  std::string out;
  out += "EVB1";
  io::put_u32_le(out, dim);
  io::put_u64_le(out, records.size());
  for (const EvbRecord &rec : records) {
    if (rec.values.size() != dim) {
      fail(ErrorCode::DimensionMismatch,
           "EVB record '" + rec.id + "' has " + std::to_string(rec.values.size()) +
               " values, dim is " + std::to_string(dim));
    }
    if (rec.id.size() > 0xffff) {
      fail(ErrorCode::ParseError, "EVB id too long: '" + rec.id + "'");
    }
    io::put_u16_le(out, static_cast<std::uint16_t>(rec.id.size()));
    out += rec.id;
    for (double v : rec.values) io::put_f32_le(out, static_cast<float>(v));
  }
  io::write_file(path, out);
}

// ---------------------------------------------------------------------------
// NPY: version 1.0 header, little-endian float32/float64, C order, 2-D only.
// Row i corresponds to manifest line i.
// ---------------------------------------------------------------------------

struct NpyArray {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
};

namespace detail {

inline std::string npy_header_field(const std::string &header,
                                    const std::string &key,
                                    const std::string &path) {
  const std::size_t kpos = header.find("'" + key + "'");
  if (kpos == std::string::npos) {
    fail(ErrorCode::ParseError, path + ": npy header missing '" + key + "'");
  }
  std::size_t colon = header.find(':', kpos);
  if (colon == std::string::npos) {
    fail(ErrorCode::ParseError, path + ": malformed npy header");
  }
  std::size_t start = header.find_first_not_of(" \t", colon + 1);
  if (start == std::string::npos) {
    fail(ErrorCode::ParseError, path + ": malformed npy header");
  }
  std::size_t end;
  if (header[start] == '\'') {
    end = header.find('\'', start + 1);
    if (end == std::string::npos) {
      fail(ErrorCode::ParseError, path + ": malformed npy header");
    }
    return header.substr(start + 1, end - start - 1);
  }
  if (header[start] == '(') {
    end = header.find(')', start);
    if (end == std::string::npos) {
      fail(ErrorCode::ParseError, path + ": malformed npy header");
    }
    return header.substr(start, end - start + 1);
  }
  end = header.find_first_of(",}", start);
  if (end == std::string::npos) {
    fail(ErrorCode::ParseError, path + ": malformed npy header");
  }
  std::string v = header.substr(start, end - start);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.pop_back();
  return v;
}

}  // namespace detail

inline NpyArray read_npy(const std::filesystem::path &path) {
  const std::string blob = io::read_file(path);
  io::ByteReader r(blob, path.string());
  const std::string_view magic = r.take(6, "magic");
  if (magic != "\x93NUMPY") {
    fail(ErrorCode::MagicMismatch, path.string() + ": not an NPY file");
  }
  const auto ver = r.take(2, "version");
  if (ver[0] != 1 || ver[1] != 0) {
    fail(ErrorCode::ParseError,
         path.string() + ": unsupported npy version " + std::to_string(ver[0]) +
             "." + std::to_string(ver[1]) + " (only 1.0)");
  }
  const std::uint16_t header_len = r.u16_le("header length");
  const std::string header(r.take(header_len, "header"));

  const std::string descr = detail::npy_header_field(header, "descr", path.string());
  std::size_t elem_size;
  if (descr == "<f4") {
    elem_size = 4;
  } else if (descr == "<f8") {
    elem_size = 8;
  } else {
    fail(ErrorCode::UnsupportedDtype,
         path.string() + ": dtype '" + descr + "' (only <f4 and <f8)");
  }
  const std::string order =
      detail::npy_header_field(header, "fortran_order", path.string());
  if (order != "False") {
    fail(ErrorCode::UnsupportedDtype,
         path.string() + ": fortran_order must be False (C order only)");
  }
  std::string shape = detail::npy_header_field(header, "shape", path.string());
  // shape is "(r, c)"; a trailing comma as in "(3,)" marks 1-D, which is out.
  if (shape.size() < 2 || shape.front() != '(' || shape.back() != ')') {
    fail(ErrorCode::ParseError, path.string() + ": malformed shape " + shape);
  }
  shape = shape.substr(1, shape.size() - 2);
  std::vector<std::string> dims;
  std::size_t start = 0;
  while (start < shape.size()) {
    std::size_t comma = shape.find(',', start);
    std::string part = shape.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    std::erase(part, ' ');
    if (!part.empty()) dims.push_back(part);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (dims.size() != 2) {
    fail(ErrorCode::DimensionMismatch,
         path.string() + ": expected a 2-D array, shape is (" + shape + ")");
  }
  NpyArray arr;
  arr.rows = static_cast<std::size_t>(io::parse_u64(dims[0], path.string() + ": shape"));
  arr.cols = static_cast<std::size_t>(io::parse_u64(dims[1], path.string() + ": shape"));

  const std::size_t n = arr.rows * arr.cols;
  const std::string_view payload = r.take(n * elem_size, "array payload");
  if (r.remaining() != 0) {
    fail(ErrorCode::ParseError, path.string() + ": trailing bytes after array");
  }
  arr.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (elem_size == 4) {
      std::uint32_t bits = 0;
      for (int b = 3; b >= 0; --b)
        bits = (bits << 8) |
               static_cast<unsigned char>(payload[i * 4 + static_cast<std::size_t>(b)]);
      float v;
      std::memcpy(&v, &bits, 4);
      arr.values[i] = static_cast<double>(v);
    } else {
      std::uint64_t bits = 0;
      for (int b = 7; b >= 0; --b)
        bits = (bits << 8) |
               static_cast<unsigned char>(payload[i * 8 + static_cast<std::size_t>(b)]);
      double v;
      std::memcpy(&v, &bits, 8);
      arr.values[i] = v;
    }
  }
  return arr;
}

inline void write_npy(const std::filesystem::path &path, std::size_t rows,
                      std::size_t cols, const std::vector<double> &values) {
  if (values.size() != rows * cols) {
    fail(ErrorCode::DimensionMismatch, "npy payload size mismatch");
  }
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                     std::to_string(rows) + ", " + std::to_string(cols) + "), }";
  // pad with spaces so that 10 + len(header) is a multiple of 64, '\n' last
  std::size_t total = 10 + dict.size() + 1;
  const std::size_t padded = (total + 63) / 64 * 64;
  dict.append(padded - total, ' ');
  dict.push_back('\n');

  std::string out;
  out += "\x93NUMPY";
  out.push_back('\x01');
  out.push_back('\x00');
  io::put_u16_le(out, static_cast<std::uint16_t>(dict.size()));
  out += dict;
  for (double v : values) io::put_f32_le(out, static_cast<float>(v));
  io::write_file(path, out);
}

// ---------------------------------------------------------------------------
// Attaching / saving embeddings
// ---------------------------------------------------------------------------

inline Dataset load_embeddings(Dataset dataset, const EmbeddingSpace &space,
                               const std::filesystem::path &path,
                               EmbeddingFormat format) {
  dataset.add_space(space);
  if (format == EmbeddingFormat::EVB) {
    EvbFile f = read_evb(path);
    if (f.dim != space.dim) {
      fail(ErrorCode::DimensionMismatch,
           path.string() + ": dim " + std::to_string(f.dim) + " but space '" +
               space.name + "' has dim " + std::to_string(space.dim));
    }
    if (f.records.size() != dataset.utterances.size()) {
      fail(ErrorCode::CountMismatch,
           path.string() + ": " + std::to_string(f.records.size()) +
               " records for " + std::to_string(dataset.utterances.size()) +
               " utterances");
    }
    const auto rows = utterance_rows_by_id(dataset);
    std::unordered_set<std::string> seen;
    for (EvbRecord &rec : f.records) {
      auto it = rows.find(rec.id);
      if (it == rows.end()) {
        fail(ErrorCode::UnknownUtterance,
             path.string() + ": utterance '" + rec.id + "' not in manifest");
      }
      if (!seen.insert(rec.id).second) {
        fail(ErrorCode::DuplicateUtteranceId,
             path.string() + ": duplicate record for '" + rec.id + "'");
      }
      dataset.utterances[it->second].embeddings[space.name] =
          Embedding{space, std::move(rec.values)};
    }
  } else {
    NpyArray arr = read_npy(path);
    if (arr.cols != space.dim) {
      fail(ErrorCode::DimensionMismatch,
           path.string() + ": " + std::to_string(arr.cols) + " columns but space '" +
               space.name + "' has dim " + std::to_string(space.dim));
    }
    if (arr.rows != dataset.utterances.size()) {
      fail(ErrorCode::CountMismatch,
           path.string() + ": " + std::to_string(arr.rows) + " rows for " +
               std::to_string(dataset.utterances.size()) + " utterances");
    }
    for (std::size_t i = 0; i < arr.rows; ++i) {
      std::vector<double> v(arr.values.begin() + static_cast<std::ptrdiff_t>(i * arr.cols),
                            arr.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * arr.cols));
      dataset.utterances[i].embeddings[space.name] = Embedding{space, std::move(v)};
    }
  }
  return dataset;
}

inline void save_embeddings(const Dataset &dataset, const std::string &space_name,
                            const std::filesystem::path &path,
                            EmbeddingFormat format) {
  const EmbeddingSpace &space = dataset.space(space_name);
  if (format == EmbeddingFormat::EVB) {
    std::vector<EvbRecord> records;
    records.reserve(dataset.utterances.size());
    for (const UtteranceRecord &u : dataset.utterances) {
      const Embedding *e = u.embedding(space_name);
      if (!e) {
        fail(ErrorCode::MissingEmbedding,
             "utterance '" + u.utterance_id + "' has no '" + space_name +
                 "' embedding");
      }
      records.push_back(EvbRecord{u.utterance_id, e->values});
    }
    write_evb(path, static_cast<std::uint32_t>(space.dim), records);
  } else {
    std::vector<double> values;
    values.reserve(dataset.utterances.size() * space.dim);
    for (const UtteranceRecord &u : dataset.utterances) {
      const Embedding *e = u.embedding(space_name);
      if (!e) {
        fail(ErrorCode::MissingEmbedding,
             "utterance '" + u.utterance_id + "' has no '" + space_name +
                 "' embedding");
      }
      values.insert(values.end(), e->values.begin(), e->values.end());
    }
    write_npy(path, dataset.utterances.size(), space.dim, values);
  }
}

// ---------------------------------------------------------------------------
// Speaker filtering and split assignment
// ---------------------------------------------------------------------------

// Keeps exactly the speakers whose total duration strictly exceeds the
// threshold, with all their utterances in the original order.
inline Dataset filter_speakers(const Dataset &dataset,
                               double min_total_duration_sec) {
  std::map<std::string, double> totals;
  for (const UtteranceRecord &u : dataset.utterances) {
    totals[u.speaker_id] += u.duration_sec;
  }
  Dataset out;
  out.spaces = dataset.spaces;
  for (const UtteranceRecord &u : dataset.utterances) {
    if (totals[u.speaker_id] > min_total_duration_sec) out.utterances.push_back(u);
  }
  return out;
}

// Largest-remainder apportionment of n into the given ratios; remainders
// compared descending, ties broken by earlier split.  The 1e-9 nudge undoes
// binary-representation dust in ratio*n before flooring.
inline std::array<std::size_t, 3> apportion_splits(
    std::size_t n, const std::array<double, 3> &ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rema{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rema[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rema[a] > rema[b]; });
  for (std::size_t i = 0; assigned < n; ++i) {
    counts[order[i % 3]] += 1;
    ++assigned;
  }
  return counts;
}

// Per-speaker split assignment: each speaker's utterances are shuffled by a
// stream derived from (seed, speaker id) and partitioned by largest-remainder
// apportionment, so every speaker contributes to all three splits whenever it
// has enough material.
inline Dataset assign_splits(const Dataset &dataset,
                             const std::array<double, 3> &ratios,
                             std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      fail(ErrorCode::InvalidRatios, "split ratios must be positive");
    }
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorCode::InvalidRatios,
         "split ratios sum to " + io::format_double(sum) + ", expected 1");
  }
  Dataset out = dataset;
  for (const auto &[speaker_id, profile] : speaker_index(dataset)) {
    std::vector<std::size_t> rows = profile.utterance_rows;
    Rng rng(derive_seed(seed, "split-speaker", fnv1a64(speaker_id)));
    rng.shuffle(rows);
    const auto counts = apportion_splits(rows.size(), ratios);
    std::size_t at = 0;
    for (std::size_t k = 0; k < counts[0]; ++k) out.utterances[rows[at++]].split = Split::Train;
    for (std::size_t k = 0; k < counts[1]; ++k) out.utterances[rows[at++]].split = Split::Morph;
    for (std::size_t k = 0; k < counts[2]; ++k) out.utterances[rows[at++]].split = Split::Test;
  }
  return out;
}

}  // namespace vim

#endif  // VIM_DATAIO_HPP
