// include/vim/core.hpp

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

#ifndef VIM_CORE_HPP
#define VIM_CORE_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vim/error.hpp"

namespace vim {

// Norms below this are treated as degenerate (zero-like) vectors.
inline constexpr double kDegenerateNorm = 1e-12;

struct EmbeddingSpace {
  std::string name;
  std::size_t dim = 0;

  friend bool operator==(const EmbeddingSpace &a, const EmbeddingSpace &b) {
    return a.name == b.name && a.dim == b.dim;
  }
};

// A fixed-dimension vector in a named space.  Values are stored as doubles
// regardless of the on-disk precision so that downstream metrics are
// bit-stable.
struct Embedding {
  EmbeddingSpace space;
  std::vector<double> values;

  double squared_norm() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += values[i] * values[i];
    return acc;
  }

  double norm() const { return std::sqrt(squared_norm()); }

  bool degenerate() const { return norm() < kDegenerateNorm; }
};

namespace detail {

inline void require_same_space(const Embedding &a, const Embedding &b,
                               const char *op) {
  if (!(a.space == b.space) || a.values.size() != b.values.size()) {
    fail(ErrorCode::SpaceMismatch,
         std::string(op) + ": '" + a.space.name + "' vs '" + b.space.name + "'");
  }
}

}  // namespace detail

// Cosine similarity in [-1, 1].  Dot product and both squared norms are
// accumulated in ascending index order in a single pass, which makes
// cosine(a, b) == cosine(b, a) bit-exact and cosine(x, x) == 1.0 exact
// (IEEE sqrt(d*d) == d).
inline double cosine(const Embedding &a, const Embedding &b) {
  detail::require_same_space(a, b, "cosine");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (std::sqrt(na) < kDegenerateNorm || std::sqrt(nb) < kDegenerateNorm) {
    fail(ErrorCode::DegenerateVector, "cosine: zero-norm input");
  }
  return dot / std::sqrt(na * nb);
}

// The identity-fusion rule: element-wise mean of the two parent embeddings.
// Commutative bit-exactly.  The result may be degenerate (antipodal parents);
// callers check Embedding::degenerate().
inline Embedding morph_average(const Embedding &a, const Embedding &b) {
  detail::require_same_space(a, b, "morph_average");
  Embedding out{a.space, std::vector<double>(a.values.size())};
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    out.values[i] = (a.values[i] + b.values[i]) / 2.0;
  }
  return out;
}

inline Embedding normalize(const Embedding &a) {
  const double n = a.norm();
  if (n < kDegenerateNorm) {
    fail(ErrorCode::DegenerateVector, "normalize: zero-norm input");
  }
  Embedding out{a.space, std::vector<double>(a.values.size())};
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = a.values[i] / n;
  return out;
}

// Element-wise mean over a nonempty list; the speaker-level representative
// used for pair ranking.
inline Embedding centroid(const std::vector<Embedding> &embs) {
  if (embs.empty()) fail(ErrorCode::EmptyInput, "centroid: empty input");
  Embedding out{embs.front().space,
                std::vector<double>(embs.front().values.size(), 0.0)};
  for (const Embedding &e : embs) {
    detail::require_same_space(out, e, "centroid");
    for (std::size_t i = 0; i < e.values.size(); ++i) out.values[i] += e.values[i];
  }
  const double n = static_cast<double>(embs.size());
  for (double &v : out.values) v /= n;
  return out;
}

}  // namespace vim

#endif  // VIM_CORE_HPP
