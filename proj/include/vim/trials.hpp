// include/vim/trials.hpp

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

#ifndef VIM_TRIALS_HPP
#define VIM_TRIALS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vim/core.hpp"
#include "vim/dataio.hpp"
#include "vim/error.hpp"
#include "vim/io_util.hpp"
#include "vim/parallel.hpp"
#include "vim/rng.hpp"
#include "vim/selection.hpp"

namespace vim {

inline constexpr std::string_view kTrialsHeader = "#vim-trials v1";
inline constexpr std::string_view kMorphsHeader = "#vim-morphs v1";

// Cosine scoring is the only built-in backend; a matcher is a named space.
struct Matcher {
  std::string name;
  EmbeddingSpace space;
};

enum class TrialKind { Genuine, Impostor, Morph };

inline const char *to_string(TrialKind k) {
  switch (k) {
    case TrialKind::Genuine: return "genuine";
    case TrialKind::Impostor: return "impostor";
    case TrialKind::Morph: return "morph";
  }
  return "?";
}

struct TrialScore {
  std::string matcher;
  TrialKind kind = TrialKind::Genuine;
  std::string probe;          // utterance id
  std::string reference;      // utterance id, or morph id for kind == Morph
  std::string probe_speaker;  // for morph trials: the constituent the probe belongs to
  std::optional<std::pair<std::string, std::string>> morph_pair;
  double score = 0.0;
};

struct MorphRecord {
  std::string morph_id;
  std::pair<std::string, std::string> pair;                // canonical
  std::pair<std::string, std::string> source_utterances;   // (from a, from b)
  std::map<std::string, Embedding> embeddings;

  const Embedding *embedding(const std::string &space_name) const {
    auto it = embeddings.find(space_name);
    return it == embeddings.end() ? nullptr : &it->second;
  }
};

enum class MorphVariant { Transparent, Simulated, External };

inline const char *to_string(MorphVariant v) {
  switch (v) {
    case MorphVariant::Transparent: return "transparent";
    case MorphVariant::Simulated: return "simulated";
    case MorphVariant::External: return "external";
  }
  return "?";
}

namespace detail {

inline const Embedding &embedding_or_fail(const UtteranceRecord &u,
                                          const std::string &space_name) {
  const Embedding *e = u.embedding(space_name);
  if (!e) {
    fail(ErrorCode::MissingEmbedding, "utterance '" + u.utterance_id +
                                          "' has no '" + space_name + "' embedding");
  }
  return *e;
}

// Test-split rows per speaker, speakers in id order, rows in manifest order.
inline std::vector<std::pair<std::string, std::vector<std::size_t>>> test_rows_by_speaker(
    const Dataset &ds) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  for (const auto &[id, profile] : speaker_index(ds)) {
    std::vector<std::size_t> rows;
    for (std::size_t row : profile.utterance_rows) {
      if (ds.utterances[row].split == Split::Test) rows.push_back(row);
    }
    if (!rows.empty()) out.emplace_back(id, std::move(rows));
  }
  return out;
}

}  // namespace detail

// One trial per unordered pair of distinct test utterances of the same
// speaker.  Speakers with fewer than two test utterances contribute nothing.
inline std::vector<TrialScore> genuine_trials(const Dataset &ds, const Matcher &matcher,
                                              int threads = 1) {
  std::vector<TrialScore> trials;
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  for (const auto &[speaker, test_rows] : detail::test_rows_by_speaker(ds)) {
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      for (std::size_t j = i + 1; j < test_rows.size(); ++j) {
        TrialScore t;
        t.matcher = matcher.name;
        t.kind = TrialKind::Genuine;
        t.probe = ds.utterances[test_rows[i]].utterance_id;
        t.reference = ds.utterances[test_rows[j]].utterance_id;
        t.probe_speaker = speaker;
        trials.push_back(std::move(t));
        rows.emplace_back(test_rows[i], test_rows[j]);
      }
    }
  }
  parallel_for(trials.size(), threads, [&](std::size_t i) {
    trials[i].score =
        cosine(detail::embedding_or_fail(ds.utterances[rows[i].first], matcher.space.name),
               detail::embedding_or_fail(ds.utterances[rows[i].second], matcher.space.name));
  });
  return trials;
}

// Cross-speaker test-utterance pairs.  When the full enumeration exceeds
// max_trials, a seeded uniform subsample without replacement is taken
// (Floyd's algorithm over enumeration indices), emitted in enumeration order.
inline std::vector<TrialScore> impostor_trials(const Dataset &ds, const Matcher &matcher,
                                               std::uint64_t max_trials, std::uint64_t seed,
                                               int threads = 1) {
  const auto by_speaker = detail::test_rows_by_speaker(ds);
  if (by_speaker.size() < 2) {
    fail(ErrorCode::InsufficientSpeakers,
         "impostor trials need test utterances from at least 2 speakers, have " +
             std::to_string(by_speaker.size()));
  }
  std::uint64_t total = 0;
  for (std::size_t s = 0; s < by_speaker.size(); ++s) {
    for (std::size_t t = s + 1; t < by_speaker.size(); ++t) {
      total += static_cast<std::uint64_t>(by_speaker[s].second.size()) *
               static_cast<std::uint64_t>(by_speaker[t].second.size());
    }
  }

  std::set<std::uint64_t> selected;
  const bool subsample = max_trials > 0 && total > max_trials;
  if (subsample) {
    Rng rng(derive_seed(seed, "impostor"));
    for (std::uint64_t i = total - max_trials; i < total; ++i) {
      const std::uint64_t j = rng.below(i + 1);
      if (!selected.insert(j).second) selected.insert(i);
    }
  }

  std::vector<TrialScore> trials;
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  auto next = selected.begin();
  std::uint64_t index = 0;
  for (std::size_t s = 0; s < by_speaker.size(); ++s) {
    for (std::size_t t = s + 1; t < by_speaker.size(); ++t) {
      for (std::size_t a : by_speaker[s].second) {
        for (std::size_t b : by_speaker[t].second) {
          bool take = true;
          if (subsample) {
            take = next != selected.end() && *next == index;
            if (take) ++next;
          }
          if (take) {
            TrialScore trial;
            trial.matcher = matcher.name;
            trial.kind = TrialKind::Impostor;
            trial.probe = ds.utterances[a].utterance_id;
            trial.reference = ds.utterances[b].utterance_id;
            trial.probe_speaker = by_speaker[s].first;
            trials.push_back(std::move(trial));
            rows.emplace_back(a, b);
          }
          ++index;
        }
      }
    }
  }
  parallel_for(trials.size(), threads, [&](std::size_t i) {
    trials[i].score =
        cosine(detail::embedding_or_fail(ds.utterances[rows[i].first], matcher.space.name),
               detail::embedding_or_fail(ds.utterances[rows[i].second], matcher.space.name));
  });
  return trials;
}

// Builds `per_pair` morphs per speaker pair.  Source utterances are seeded
// draws (with replacement) from each speaker's morph split; the fusion-space
// embedding is always the element-wise average of the two drawn embeddings.
// With the Transparent variant every other space shared by the two source
// utterances is fused the same way; Simulated leaves matcher spaces to
// simulate::gen_morph_embeddings.
inline std::vector<MorphRecord> make_morphs(const Dataset &ds,
                                            const std::vector<SpeakerPair> &pairs,
                                            std::size_t per_pair, std::uint64_t seed,
                                            const std::string &fusion_space,
                                            MorphVariant variant,
                                            bool normalize_fusion_inputs = false) {
  ds.space(fusion_space);
  const auto speakers = speaker_index(ds);

  auto morph_rows_of = [&](const std::string &id) {
    auto it = speakers.find(id);
    std::vector<std::size_t> rows;
    if (it != speakers.end()) {
      for (std::size_t row : it->second.utterance_rows) {
        if (ds.utterances[row].split == Split::Morph &&
            ds.utterances[row].embedding(fusion_space)) {
          rows.push_back(row);
        }
      }
    }
    if (rows.empty()) {
      fail(ErrorCode::MissingEmbedding,
           "speaker '" + id + "' has no morph-split utterance with a '" +
               fusion_space + "' embedding");
    }
    return rows;
  };

  std::vector<MorphRecord> morphs;
  morphs.reserve(pairs.size() * per_pair);
  for (const SpeakerPair &p : pairs) {
    const auto rows_a = morph_rows_of(p.speaker_a);
    const auto rows_b = morph_rows_of(p.speaker_b);
    Rng rng(derive_seed(seed, "morph-pair",
                        fnv1a64(p.speaker_a + "\x1f" + p.speaker_b)));
    for (std::size_t k = 0; k < per_pair; ++k) {
      const UtteranceRecord &ua =
          ds.utterances[rows_a[static_cast<std::size_t>(rng.below(rows_a.size()))]];
      const UtteranceRecord &ub =
          ds.utterances[rows_b[static_cast<std::size_t>(rng.below(rows_b.size()))]];
      MorphRecord m;
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "#%04zu", k);
      m.morph_id = p.speaker_a + "+" + p.speaker_b + suffix;
      m.pair = {p.speaker_a, p.speaker_b};
      m.source_utterances = {ua.utterance_id, ub.utterance_id};

      auto fuse = [&](const Embedding &ea, const Embedding &eb) {
        if (normalize_fusion_inputs) return morph_average(normalize(ea), normalize(eb));
        return morph_average(ea, eb);
      };
      m.embeddings[fusion_space] = fuse(detail::embedding_or_fail(ua, fusion_space),
                                        detail::embedding_or_fail(ub, fusion_space));
      if (variant == MorphVariant::Transparent) {
        for (const auto &[space_name, ea] : ua.embeddings) {
          if (space_name == fusion_space) continue;
          const Embedding *eb = ub.embedding(space_name);
          if (eb) m.embeddings[space_name] = fuse(ea, *eb);
        }
      }
      morphs.push_back(std::move(m));
    }
  }
  return morphs;
}

// One trial per (morph, test utterance of either constituent speaker).
inline std::vector<TrialScore> morph_trials(const std::vector<MorphRecord> &morphs,
                                            const Dataset &ds, const Matcher &matcher,
                                            int threads = 1) {
  const auto speakers = speaker_index(ds);
  std::vector<TrialScore> trials;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (morph idx, utterance row)
  for (std::size_t mi = 0; mi < morphs.size(); ++mi) {
    const MorphRecord &m = morphs[mi];
    if (!m.embedding(matcher.space.name)) {
      fail(ErrorCode::MissingEmbedding, "morph '" + m.morph_id + "' has no '" +
                                            matcher.space.name + "' embedding");
    }
    for (const std::string *speaker : {&m.pair.first, &m.pair.second}) {
      auto it = speakers.find(*speaker);
      if (it == speakers.end()) continue;
      for (std::size_t row : it->second.utterance_rows) {
        const UtteranceRecord &u = ds.utterances[row];
        if (u.split != Split::Test) continue;
        TrialScore t;
        t.matcher = matcher.name;
        t.kind = TrialKind::Morph;
        t.probe = u.utterance_id;
        t.reference = m.morph_id;
        t.probe_speaker = *speaker;
        t.morph_pair = m.pair;
        trials.push_back(std::move(t));
        pairs.emplace_back(mi, row);
      }
    }
  }
  parallel_for(trials.size(), threads, [&](std::size_t i) {
    trials[i].score = cosine(
        detail::embedding_or_fail(ds.utterances[pairs[i].second], matcher.space.name),
        *morphs[pairs[i].first].embedding(matcher.space.name));
  });
  return trials;
}

// ---------------------------------------------------------------------------
// Exports: trial scores and morph records
// ---------------------------------------------------------------------------

// matcher<TAB>kind<TAB>probe<TAB>reference<TAB>probe_speaker<TAB>score,
// scores with 9 significant digits.  This file is the metrics input contract.
inline void save_trials(const std::vector<TrialScore> &trials,
                        const std::filesystem::path &path) {
  std::string out(kTrialsHeader);
  out.push_back('\n');
  for (const TrialScore &t : trials) {
    out += t.matcher;
    out.push_back('\t');
    out += to_string(t.kind);
    out.push_back('\t');
    out += t.probe;
    out.push_back('\t');
    out += t.reference;
    out.push_back('\t');
    out += t.probe_speaker;
    out.push_back('\t');
    out += io::format_score(t.score);
    out.push_back('\n');
  }
  io::write_file(path, out);
}

// Loads a trial file, reconstructing each morph reference's constituent pair
// from the probe speakers observed for it (the line format is fixed at six
// columns and does not carry the pair).
inline std::vector<TrialScore> load_trials(const std::filesystem::path &path) {
  const std::string text = io::read_file(path);
  const auto lines = io::split_lines(text);
  if (lines.empty() || lines[0] != kTrialsHeader) {
    fail(ErrorCode::ParseError,
         path.string() + ": line 1: missing '" + std::string(kTrialsHeader) + "' header");
  }
  std::vector<TrialScore> trials;
  std::map<std::string, std::vector<std::string>> morph_speakers;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (line.empty() || line.front() == '#') continue;
    const auto f = io::split_tabs(line);
    if (f.size() != 6) {
      fail(ErrorCode::ParseError, path.string() + ": line " + std::to_string(i + 1) +
                                      ": expected 6 fields");
    }
    TrialScore t;
    t.matcher = std::string(f[0]);
    if (f[1] == "genuine") {
      t.kind = TrialKind::Genuine;
    } else if (f[1] == "impostor") {
      t.kind = TrialKind::Impostor;
    } else if (f[1] == "morph") {
      t.kind = TrialKind::Morph;
    } else {
      fail(ErrorCode::ParseError, path.string() + ": line " + std::to_string(i + 1) +
                                      ": bad kind '" + std::string(f[1]) + "'");
    }
    t.probe = std::string(f[2]);
    t.reference = std::string(f[3]);
    t.probe_speaker = std::string(f[4]);
    t.score = io::parse_double(f[5], path.string() + ": line " + std::to_string(i + 1));
    if (t.kind == TrialKind::Morph) {
      auto &sp = morph_speakers[t.reference];
      if (std::find(sp.begin(), sp.end(), t.probe_speaker) == sp.end()) {
        sp.push_back(t.probe_speaker);
      }
    }
    trials.push_back(std::move(t));
  }
  for (TrialScore &t : trials) {
    if (t.kind != TrialKind::Morph) continue;
    const auto &sp = morph_speakers.at(t.reference);
    if (sp.size() != 2) {
      fail(ErrorCode::ParseError,
           path.string() + ": morph '" + t.reference + "' has trials against " +
               std::to_string(sp.size()) + " speakers, expected 2");
    }
    t.morph_pair = sp[0] < sp[1] ? std::make_pair(sp[0], sp[1])
                                 : std::make_pair(sp[1], sp[0]);
  }
  return trials;
}

// morph_id<TAB>speaker_a<TAB>speaker_b<TAB>utterance_a<TAB>utterance_b;
// embeddings travel separately as per-space EVB files keyed by morph id.
inline void save_morph_records(const std::vector<MorphRecord> &morphs,
                               const std::filesystem::path &path) {
  std::string out(kMorphsHeader);
  out.push_back('\n');
  for (const MorphRecord &m : morphs) {
    out += m.morph_id;
    out.push_back('\t');
    out += m.pair.first;
    out.push_back('\t');
    out += m.pair.second;
    out.push_back('\t');
    out += m.source_utterances.first;
    out.push_back('\t');
    out += m.source_utterances.second;
    out.push_back('\n');
  }
  io::write_file(path, out);
}

inline std::vector<MorphRecord> load_morph_records(const std::filesystem::path &path) {
  const std::string text = io::read_file(path);
  const auto lines = io::split_lines(text);
  if (lines.empty() || lines[0] != kMorphsHeader) {
    fail(ErrorCode::ParseError,
         path.string() + ": line 1: missing '" + std::string(kMorphsHeader) + "' header");
  }
  std::vector<MorphRecord> morphs;
  std::unordered_set<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (line.empty() || line.front() == '#') continue;
    const auto f = io::split_tabs(line);
    if (f.size() != 5) {
      fail(ErrorCode::ParseError, path.string() + ": line " + std::to_string(i + 1) +
                                      ": expected 5 fields");
    }
    MorphRecord m;
    m.morph_id = std::string(f[0]);
    m.pair = {std::string(f[1]), std::string(f[2])};
    m.source_utterances = {std::string(f[3]), std::string(f[4])};
    if (!(m.pair.first < m.pair.second)) {
      fail(ErrorCode::ParseError, path.string() + ": line " + std::to_string(i + 1) +
                                      ": pair not in canonical order");
    }
    if (!ids.insert(m.morph_id).second) {
      fail(ErrorCode::ParseError,
           path.string() + ": duplicate morph id '" + m.morph_id + "'");
    }
    morphs.push_back(std::move(m));
  }
  return morphs;
}

// Attaches one space's embeddings to morph records from an EVB file.
inline void load_morph_embeddings(std::vector<MorphRecord> &morphs,
                                  const EmbeddingSpace &space,
                                  const std::filesystem::path &path) {
  EvbFile f = read_evb(path);
  if (f.dim != space.dim) {
    fail(ErrorCode::DimensionMismatch,
         path.string() + ": dim " + std::to_string(f.dim) + " but space '" +
             space.name + "' has dim " + std::to_string(space.dim));
  }
  if (f.records.size() != morphs.size()) {
    fail(ErrorCode::CountMismatch, path.string() + ": " +
                                       std::to_string(f.records.size()) +
                                       " records for " + std::to_string(morphs.size()) +
                                       " morphs");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < morphs.size(); ++i) index[morphs[i].morph_id] = i;
  for (EvbRecord &rec : f.records) {
    auto it = index.find(rec.id);
    if (it == index.end()) {
      fail(ErrorCode::UnknownUtterance,
           path.string() + ": morph '" + rec.id + "' not in record list");
    }
    morphs[it->second].embeddings[space.name] = Embedding{space, std::move(rec.values)};
  }
}

inline void save_morph_embeddings(const std::vector<MorphRecord> &morphs,
                                  const std::string &space_name,
                                  const std::filesystem::path &path) {
  std::uint32_t dim = 0;
  std::vector<EvbRecord> records;
  records.reserve(morphs.size());
  for (const MorphRecord &m : morphs) {
    const Embedding *e = m.embedding(space_name);
    if (!e) {
      fail(ErrorCode::MissingEmbedding,
           "morph '" + m.morph_id + "' has no '" + space_name + "' embedding");
    }
    dim = static_cast<std::uint32_t>(e->space.dim);
    records.push_back(EvbRecord{m.morph_id, e->values});
  }
  write_evb(path, dim, records);
}

}  // namespace vim

#endif  // VIM_TRIALS_HPP
