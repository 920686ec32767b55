// include/vim/simulate.hpp

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

#ifndef VIM_SIMULATE_HPP
#define VIM_SIMULATE_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vim/core.hpp"
#include "vim/dataio.hpp"
#include "vim/error.hpp"
#include "vim/rng.hpp"
#include "vim/trials.hpp"

namespace vim {

// Synthetic speaker population: one unit identity direction per speaker in a
// shared latent space, one fixed orthonormal projection per embedding space.
// Utterance latent = identity + within_speaker_sigma * gaussian (this is the
// pre-projection latent reused for morph fusion); each emitted embedding is
// normalize(projection(latent) + channel_sigma * gaussian).
struct SimConfig {
  std::size_t n_speakers = 50;
  std::size_t utterances_per_speaker = 20;
  std::size_t latent_dim = 64;
  std::vector<EmbeddingSpace> spaces = {
      {"sim-fusion", 256}, {"sim-ecapa", 192}, {"sim-xvector", 512}};
  double within_speaker_sigma = 0.2;
  double channel_sigma = 0.05;
  double morph_sigma = 0.1;
  std::pair<double, double> duration_range_sec = {60.0, 240.0};
  double sex_ratio = 0.5;  // fraction female
  std::uint64_t seed = 42;
};

inline void validate(const SimConfig &c) {
  auto bad = [](const std::string &msg) { fail(ErrorCode::InvalidConfig, msg); };
  if (c.n_speakers == 0) bad("n_speakers must be >= 1");
  if (c.utterances_per_speaker == 0) bad("utterances_per_speaker must be >= 1");
  if (c.latent_dim < 2) bad("latent_dim must be >= 2");
  if (c.spaces.empty()) bad("at least one embedding space is required");
  for (const auto &s : c.spaces) {
    if (s.dim < 2) bad("space '" + s.name + "' dim must be >= 2");
    if (s.dim < c.latent_dim) {
      bad("space '" + s.name + "' dim " + std::to_string(s.dim) +
          " is below latent_dim " + std::to_string(c.latent_dim) +
          " (orthonormal projection needs dim >= latent_dim)");
    }
  }
  for (std::size_t i = 0; i < c.spaces.size(); ++i) {
    for (std::size_t j = i + 1; j < c.spaces.size(); ++j) {
      if (c.spaces[i].name == c.spaces[j].name) {
        bad("duplicate space name '" + c.spaces[i].name + "'");
      }
    }
  }
  if (!(c.within_speaker_sigma >= 0.0)) bad("within_speaker_sigma must be >= 0");
  if (!(c.channel_sigma >= 0.0)) bad("channel_sigma must be >= 0");
  if (!(c.morph_sigma >= 0.0)) bad("morph_sigma must be >= 0");
  if (!(c.duration_range_sec.first <= c.duration_range_sec.second) ||
      !(c.duration_range_sec.first >= 0.0)) {
    bad("duration_range_sec must satisfy 0 <= lo <= hi");
  }
  if (!(c.sex_ratio >= 0.0 && c.sex_ratio <= 1.0)) bad("sex_ratio must be in [0, 1]");
}

// Everything the simulator knows beyond the emitted Dataset; required by the
// `simulated` morph variant.  A pure function of the config, so it can always
// be regenerated from a recorded seed.
struct SimWorld {
  SimConfig config;
  std::map<std::string, std::vector<double>> speaker_latents;    // unit norm
  std::map<std::string, std::vector<double>> utterance_latents;  // pre-projection
  // row-major dim x latent_dim, orthonormal columns, keyed by space name
  std::map<std::string, std::vector<double>> projections;
};

struct Simulation {
  Dataset dataset;
  SimWorld world;
};

namespace detail {

inline std::vector<double> gaussian_vector(Rng &rng, std::size_t n) {
  std::vector<double> v(n);
  for (double &x : v) x = rng.normal();
  return v;
}

inline double column_dot(const std::vector<double> &m, std::size_t rows,
                         std::size_t cols, std::size_t a, std::size_t b) {
  double acc = 0.0;
  for (std::size_t r = 0; r < rows; ++r) acc += m[r * cols + a] * m[r * cols + b];
  return acc;
}

// Random matrix with orthonormal columns via Gram-Schmidt in column order.
// dim >= latent_dim is validated upstream, so rank deficiency has measure
// zero; a degenerate column is refilled from the same stream.
inline std::vector<double> orthonormal_projection(Rng &rng, std::size_t dim,
                                                  std::size_t latent_dim) {
  std::vector<double> m(dim * latent_dim);
  for (std::size_t c = 0; c < latent_dim; ++c) {
    while (true) {
      for (std::size_t r = 0; r < dim; ++r) m[r * latent_dim + c] = rng.normal();
      for (std::size_t prev = 0; prev < c; ++prev) {
        const double d = column_dot(m, dim, latent_dim, c, prev);
        for (std::size_t r = 0; r < dim; ++r) {
          m[r * latent_dim + c] -= d * m[r * latent_dim + prev];
        }
      }
      const double norm = std::sqrt(column_dot(m, dim, latent_dim, c, c));
      if (norm > 1e-8) {
        for (std::size_t r = 0; r < dim; ++r) m[r * latent_dim + c] /= norm;
        break;
      }
    }
  }
  return m;
}

inline std::vector<double> project(const std::vector<double> &m, std::size_t dim,
                                   const std::vector<double> &latent) {
  const std::size_t latent_dim = latent.size();
  std::vector<double> out(dim, 0.0);
  for (std::size_t r = 0; r < dim; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < latent_dim; ++c) acc += m[r * latent_dim + c] * latent[c];
    out[r] = acc;
  }
  return out;
}

inline std::string index_id(const char *prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04zu", prefix, i);
  return buf;
}

}  // namespace detail

inline Simulation gen_population(const SimConfig &config) {
  validate(config);
  Simulation sim;
  sim.world.config = config;
  Dataset &ds = sim.dataset;
  for (const auto &s : config.spaces) ds.add_space(s);

  // fixed per-space projections
  for (const auto &s : config.spaces) {
    Rng rng(derive_seed(config.seed, "projection", fnv1a64(s.name)));
    sim.world.projections[s.name] =
        detail::orthonormal_projection(rng, s.dim, config.latent_dim);
  }

  // sex labels: round(ratio * n) females, order shuffled by its own stream
  const std::size_t n_female = static_cast<std::size_t>(
      std::floor(config.sex_ratio * static_cast<double>(config.n_speakers) + 0.5));
  std::vector<Sex> sexes(config.n_speakers, Sex::M);
  for (std::size_t i = 0; i < n_female && i < sexes.size(); ++i) sexes[i] = Sex::F;
  {
    Rng rng(derive_seed(config.seed, "sex"));
    rng.shuffle(sexes);
  }

  ds.utterances.reserve(config.n_speakers * config.utterances_per_speaker);
  for (std::size_t si = 0; si < config.n_speakers; ++si) {
    const std::string speaker_id = detail::index_id("s", si);
    Rng rng(derive_seed(config.seed, "speaker", si));

    std::vector<double> identity = detail::gaussian_vector(rng, config.latent_dim);
    {
      double norm = 0.0;
      for (double v : identity) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < kDegenerateNorm) norm = 1.0;
      for (double &v : identity) v /= norm;
    }
    sim.world.speaker_latents[speaker_id] = identity;

    for (std::size_t ui = 0; ui < config.utterances_per_speaker; ++ui) {
      UtteranceRecord rec;
      rec.speaker_id = speaker_id;
      rec.utterance_id = speaker_id + "_" + detail::index_id("u", ui);
      rec.sex = sexes[si];
      rec.duration_sec =
          rng.uniform(config.duration_range_sec.first, config.duration_range_sec.second);

      std::vector<double> latent = identity;
      for (double &v : latent) v += config.within_speaker_sigma * rng.normal();
      sim.world.utterance_latents[rec.utterance_id] = latent;

      for (const auto &s : config.spaces) {
        std::vector<double> values =
            detail::project(sim.world.projections[s.name], s.dim, latent);
        for (double &v : values) v += config.channel_sigma * rng.normal();
        rec.embeddings[s.name] = normalize(Embedding{s, std::move(values)});
      }
      ds.utterances.push_back(std::move(rec));
    }
  }
  return sim;
}

// Fills each morph's missing per-space embeddings from the latent-fusion
// model: fusion = mean of the two source utterances' pre-projection latents,
// then per space normalize(projection(fusion) + morph_sigma * gaussian).
// Spaces already present on the record (the exact fusion-rule embedding set
// by make_morphs) are left untouched.
inline void gen_morph_embeddings(std::vector<MorphRecord> &morphs,
                                 const SimWorld &world) {
  const SimConfig &config = world.config;
  for (MorphRecord &m : morphs) {
    auto la = world.utterance_latents.find(m.source_utterances.first);
    auto lb = world.utterance_latents.find(m.source_utterances.second);
    if (la == world.utterance_latents.end() || lb == world.utterance_latents.end()) {
      fail(ErrorCode::MissingLatent,
           "morph '" + m.morph_id + "' sources are unknown to this simulation");
    }
    std::vector<double> fusion(config.latent_dim);
    for (std::size_t i = 0; i < config.latent_dim; ++i) {
      fusion[i] = (la->second[i] + lb->second[i]) / 2.0;
    }
    Rng rng(derive_seed(config.seed, "morph-noise", fnv1a64(m.morph_id)));
    for (const auto &s : config.spaces) {
      // one noise block per space is always drawn, so the stream layout does
      // not depend on which spaces were pre-filled
      std::vector<double> values =
          detail::project(world.projections.at(s.name), s.dim, fusion);
      for (double &v : values) v += config.morph_sigma * rng.normal();
      if (m.embeddings.count(s.name)) continue;
      m.embeddings[s.name] = normalize(Embedding{s, std::move(values)});
    }
  }
}

}  // namespace vim

#endif  // VIM_SIMULATE_HPP
