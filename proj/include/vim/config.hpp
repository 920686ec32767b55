// include/vim/config.hpp

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

#ifndef VIM_CONFIG_HPP
#define VIM_CONFIG_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vim/dataio.hpp"
#include "vim/error.hpp"
#include "vim/rng.hpp"
#include "vim/simulate.hpp"
#include "vim/trials.hpp"
#include "vim/tsne.hpp"

namespace vim {

struct ExternalEmbeddingSource {
  std::filesystem::path path;
  EmbeddingFormat format = EmbeddingFormat::EVB;
  std::size_t dim = 0;
};

struct DataPaths {
  std::filesystem::path manifest;
  std::map<std::string, ExternalEmbeddingSource> embeddings;  // by space name
};

struct ExternalMorphSource {
  std::filesystem::path records;
  std::map<std::string, std::filesystem::path> embeddings;  // space -> EVB path
};

// The end-to-end run configuration.  Exactly one of `simulate` / `data` is
// active; an empty config falls back to the default simulated population.
struct RunConfig {
  std::uint64_t seed = 42;
  std::filesystem::path out_dir = "out";
  int threads = 1;

  std::optional<SimConfig> simulate;
  std::optional<DataPaths> data;

  double min_total_duration_sec = 1800.0;
  std::array<double, 3> split_ratios{0.6, 0.1, 0.3};

  std::string ranking_space;  // defaults to the first matcher's space
  std::size_t top_k = 100;

  std::size_t per_pair = 10;
  MorphVariant morph_variant = MorphVariant::Transparent;
  std::string fusion_space;
  bool normalize_fusion_inputs = false;
  std::optional<ExternalMorphSource> external_morphs;

  std::vector<Matcher> matchers;
  std::vector<double> fmr_targets{0.01, 0.001, 0.0001};
  std::uint64_t impostor_cap = 1000000;
  std::size_t histogram_bins = 100;
  std::size_t map_attempts = 5;

  TsneConfig tsne;
  std::string tsne_space;

  // derived stage seeds, all recorded in outputs
  std::uint64_t split_seed() const { return derive_seed(seed, "split"); }
  std::uint64_t impostor_seed() const { return derive_seed(seed, "impostor"); }
  std::uint64_t morph_seed() const { return derive_seed(seed, "morph"); }
};

namespace config_detail {

using nlohmann::json;

inline void expect(bool ok, const std::string &msg) {
  if (!ok) fail(ErrorCode::InvalidConfig, msg);
}

template <class T>
T get_or(const json &j, const char *key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &e) {
    fail(ErrorCode::InvalidConfig, std::string("config field '") + key + "': " + e.what());
  }
}

inline SimConfig parse_sim(const json &j, std::uint64_t master_seed) {
  SimConfig c;
  c.n_speakers = get_or<std::size_t>(j, "n_speakers", c.n_speakers);
  c.utterances_per_speaker =
      get_or<std::size_t>(j, "utterances_per_speaker", c.utterances_per_speaker);
  c.latent_dim = get_or<std::size_t>(j, "latent_dim", c.latent_dim);
  if (j.contains("spaces")) {
    c.spaces.clear();
    for (const auto &s : j.at("spaces")) {
      expect(s.contains("name") && s.contains("dim"),
             "simulate.spaces entries need name and dim");
      c.spaces.push_back({s.at("name").get<std::string>(), s.at("dim").get<std::size_t>()});
    }
  }
  c.within_speaker_sigma =
      get_or<double>(j, "within_speaker_sigma", c.within_speaker_sigma);
  c.channel_sigma = get_or<double>(j, "channel_sigma", c.channel_sigma);
  c.morph_sigma = get_or<double>(j, "morph_sigma", c.morph_sigma);
  if (j.contains("duration_range_sec")) {
    const auto &r = j.at("duration_range_sec");
    expect(r.is_array() && r.size() == 2, "duration_range_sec must be [lo, hi]");
    c.duration_range_sec = {r[0].get<double>(), r[1].get<double>()};
  }
  c.sex_ratio = get_or<double>(j, "sex_ratio", c.sex_ratio);
  c.seed = get_or<std::uint64_t>(j, "seed", derive_seed(master_seed, "sim"));
  return c;
}

inline DataPaths parse_data(const json &j) {
  DataPaths d;
  expect(j.contains("manifest"), "data.manifest is required");
  d.manifest = j.at("manifest").get<std::string>();
  if (j.contains("embeddings")) {
    for (const auto &[space, spec] : j.at("embeddings").items()) {
      ExternalEmbeddingSource src;
      expect(spec.contains("path") && spec.contains("dim"),
             "data.embeddings entries need path and dim");
      src.path = spec.at("path").get<std::string>();
      src.dim = spec.at("dim").get<std::size_t>();
      const std::string format = get_or<std::string>(spec, "format", "evb");
      if (format == "evb") {
        src.format = EmbeddingFormat::EVB;
      } else if (format == "npy") {
        src.format = EmbeddingFormat::NPY;
      } else {
        fail(ErrorCode::InvalidConfig, "embedding format must be evb or npy");
      }
      d.embeddings[space] = std::move(src);
    }
  }
  return d;
}

inline MorphVariant parse_variant(const std::string &s) {
  if (s == "transparent") return MorphVariant::Transparent;
  if (s == "simulated") return MorphVariant::Simulated;
  if (s == "external") return MorphVariant::External;
  fail(ErrorCode::InvalidConfig, "morph.variant must be transparent|simulated|external");
}

inline TsneConfig parse_tsne(const json &j, std::uint64_t master_seed) {
  TsneConfig t;
  t.perplexity = get_or<double>(j, "perplexity", t.perplexity);
  t.iterations = get_or<int>(j, "iterations", t.iterations);
  t.learning_rate = get_or<double>(j, "learning_rate", t.learning_rate);
  if (j.contains("early_exaggeration")) {
    const auto &e = j.at("early_exaggeration");
    expect(e.is_array() && e.size() == 2, "tsne.early_exaggeration must be [factor, iters]");
    t.early_exaggeration_factor = e[0].get<double>();
    t.early_exaggeration_iters = e[1].get<int>();
  }
  if (j.contains("momentum")) {
    const auto &m = j.at("momentum");
    expect(m.is_array() && m.size() == 3,
           "tsne.momentum must be [initial, final, switch_iter]");
    t.momentum_initial = m[0].get<double>();
    t.momentum_final = m[1].get<double>();
    t.momentum_switch_iter = m[2].get<int>();
  }
  t.seed = get_or<std::uint64_t>(j, "seed", derive_seed(master_seed, "tsne"));
  return t;
}

}  // namespace config_detail

inline RunConfig parse_run_config(const nlohmann::json &j) {
  using config_detail::expect;
  using config_detail::get_or;
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, "config root must be an object");
  static const std::set<std::string> known = {
      "seed",       "out_dir",  "threads",        "simulate",       "data",
      "filter",     "split",    "ranking",        "morph",          "matchers",
      "fmr_targets", "impostor_cap", "histogram_bins", "map_attempts", "tsne"};
  for (const auto &[key, value] : j.items()) {
    if (!known.count(key)) {
      fail(ErrorCode::InvalidConfig, "unknown config field '" + key + "'");
    }
  }

  RunConfig c;
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.out_dir = get_or<std::string>(j, "out_dir", c.out_dir.string());
  c.threads = get_or<int>(j, "threads", c.threads);
  expect(c.threads >= 1, "threads must be >= 1");

  expect(!(j.contains("simulate") && j.contains("data")),
         "config must name exactly one of simulate/data, not both");
  if (j.contains("data")) {
    c.data = config_detail::parse_data(j.at("data"));
  } else {
    // default run is simulated
    c.simulate = config_detail::parse_sim(
        j.contains("simulate") ? j.at("simulate") : nlohmann::json::object(), c.seed);
  }

  if (j.contains("filter")) {
    c.min_total_duration_sec = get_or<double>(j.at("filter"), "min_total_duration_sec",
                                              c.min_total_duration_sec);
  }
  if (j.contains("split")) {
    const auto &s = j.at("split");
    if (s.contains("ratios")) {
      const auto &r = s.at("ratios");
      expect(r.is_array() && r.size() == 3, "split.ratios must be [train, morph, test]");
      c.split_ratios = {r[0].get<double>(), r[1].get<double>(), r[2].get<double>()};
    }
  }
  if (j.contains("ranking")) {
    const auto &r = j.at("ranking");
    c.ranking_space = get_or<std::string>(r, "space", c.ranking_space);
    c.top_k = get_or<std::size_t>(r, "top_k", c.top_k);
  }
  if (j.contains("morph")) {
    const auto &m = j.at("morph");
    c.per_pair = get_or<std::size_t>(m, "per_pair", c.per_pair);
    c.morph_variant =
        config_detail::parse_variant(get_or<std::string>(m, "variant", "transparent"));
    c.fusion_space = get_or<std::string>(m, "fusion_space", c.fusion_space);
    c.normalize_fusion_inputs =
        get_or<bool>(m, "normalize_fusion_inputs", c.normalize_fusion_inputs);
    if (m.contains("external")) {
      const auto &e = m.at("external");
      ExternalMorphSource src;
      expect(e.contains("records"), "morph.external.records is required");
      src.records = e.at("records").get<std::string>();
      if (e.contains("embeddings")) {
        for (const auto &[space, path] : e.at("embeddings").items()) {
          src.embeddings[space] = std::filesystem::path(path.get<std::string>());
        }
      }
      c.external_morphs = std::move(src);
    }
  }
  if (j.contains("matchers")) {
    for (const auto &m : j.at("matchers")) {
      expect(m.contains("name"), "matchers entries need a name");
      Matcher matcher;
      matcher.name = m.at("name").get<std::string>();
      matcher.space.name = get_or<std::string>(m, "space", matcher.name);
      c.matchers.push_back(std::move(matcher));
    }
  }
  if (j.contains("fmr_targets")) {
    c.fmr_targets.clear();
    for (const auto &t : j.at("fmr_targets")) c.fmr_targets.push_back(t.get<double>());
  }
  expect(!c.fmr_targets.empty(), "fmr_targets must not be empty");
  for (std::size_t i = 0; i < c.fmr_targets.size(); ++i) {
    expect(c.fmr_targets[i] > 0.0 && c.fmr_targets[i] <= 1.0,
           "fmr targets must be in (0, 1]");
    for (std::size_t k = i + 1; k < c.fmr_targets.size(); ++k) {
      expect(c.fmr_targets[i] != c.fmr_targets[k], "fmr targets must be distinct");
    }
  }
  c.impostor_cap = get_or<std::uint64_t>(j, "impostor_cap", c.impostor_cap);
  c.histogram_bins = get_or<std::size_t>(j, "histogram_bins", c.histogram_bins);
  c.map_attempts = get_or<std::size_t>(j, "map_attempts", c.map_attempts);
  expect(c.map_attempts >= 1, "map_attempts must be >= 1");
  if (j.contains("tsne")) {
    c.tsne = config_detail::parse_tsne(j.at("tsne"), c.seed);
    c.tsne_space = get_or<std::string>(j.at("tsne"), "space", c.tsne_space);
  } else {
    c.tsne.seed = derive_seed(c.seed, "tsne");
  }

  // defaults tied to the simulated population
  if (c.simulate && c.matchers.empty()) {
    c.matchers = {{"sim-ecapa", {"sim-ecapa", 192}}, {"sim-xvector", {"sim-xvector", 512}}};
  }
  expect(!c.matchers.empty(), "at least one matcher is required");
  if (c.ranking_space.empty()) c.ranking_space = c.matchers.front().space.name;
  if (c.fusion_space.empty() && c.simulate) c.fusion_space = "sim-fusion";
  expect(!c.fusion_space.empty(),
         "morph.fusion_space is required for externally supplied datasets");
  for (std::size_t i = 0; i < c.matchers.size(); ++i) {
    for (std::size_t k = i + 1; k < c.matchers.size(); ++k) {
      expect(c.matchers[i].name != c.matchers[k].name,
             "matcher names must be unique, got '" + c.matchers[i].name + "' twice");
    }
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path &path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

// Canonical serialized form of the effective config; the digest of this
// string is stamped into every artifact.  Execution knobs (threads, output
// directory) are not part of a run's identity and stay out.
inline nlohmann::json effective_config_json(const RunConfig &c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  if (c.simulate) {
    const SimConfig &s = *c.simulate;
    nlohmann::json sj;
    sj["n_speakers"] = s.n_speakers;
    sj["utterances_per_speaker"] = s.utterances_per_speaker;
    sj["latent_dim"] = s.latent_dim;
    for (const auto &sp : s.spaces) {
      sj["spaces"].push_back({{"name", sp.name}, {"dim", sp.dim}});
    }
    sj["within_speaker_sigma"] = s.within_speaker_sigma;
    sj["channel_sigma"] = s.channel_sigma;
    sj["morph_sigma"] = s.morph_sigma;
    sj["duration_range_sec"] = {s.duration_range_sec.first, s.duration_range_sec.second};
    sj["sex_ratio"] = s.sex_ratio;
    sj["seed"] = s.seed;
    j["simulate"] = std::move(sj);
  }
  if (c.data) {
    nlohmann::json dj;
    dj["manifest"] = c.data->manifest.string();
    for (const auto &[space, src] : c.data->embeddings) {
      dj["embeddings"][space] = {
          {"path", src.path.string()},
          {"format", src.format == EmbeddingFormat::EVB ? "evb" : "npy"},
          {"dim", src.dim}};
    }
    j["data"] = std::move(dj);
  }
  j["filter"]["min_total_duration_sec"] = c.min_total_duration_sec;
  j["split"]["ratios"] = c.split_ratios;
  j["ranking"] = {{"space", c.ranking_space}, {"top_k", c.top_k}};
  j["morph"] = {{"per_pair", c.per_pair},
                {"variant", to_string(c.morph_variant)},
                {"fusion_space", c.fusion_space},
                {"normalize_fusion_inputs", c.normalize_fusion_inputs}};
  for (const auto &m : c.matchers) {
    j["matchers"].push_back({{"name", m.name}, {"space", m.space.name}});
  }
  j["fmr_targets"] = c.fmr_targets;
  j["impostor_cap"] = c.impostor_cap;
  j["histogram_bins"] = c.histogram_bins;
  j["map_attempts"] = c.map_attempts;
  j["tsne"] = {{"perplexity", c.tsne.perplexity},
               {"iterations", c.tsne.iterations},
               {"learning_rate", c.tsne.learning_rate},
               {"early_exaggeration",
                {c.tsne.early_exaggeration_factor, c.tsne.early_exaggeration_iters}},
               {"momentum",
                {c.tsne.momentum_initial, c.tsne.momentum_final, c.tsne.momentum_switch_iter}},
               {"seed", c.tsne.seed}};
  return j;
}

inline std::string config_digest(const RunConfig &c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(effective_config_json(c).dump())));
  return buf;
}

}  // namespace vim

#endif  // VIM_CONFIG_HPP
