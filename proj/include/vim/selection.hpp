// include/vim/selection.hpp

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

#ifndef VIM_SELECTION_HPP
#define VIM_SELECTION_HPP

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "vim/core.hpp"
#include "vim/dataio.hpp"
#include "vim/error.hpp"
#include "vim/io_util.hpp"

namespace vim {

inline constexpr std::string_view kPairsHeader = "#vim-pairs v1";

// Canonical pair: speaker_a < speaker_b lexicographically.
struct SpeakerPair {
  std::string speaker_a;
  std::string speaker_b;
  double similarity = std::numeric_limits<double>::quiet_NaN();
  bool cross_sex = false;
};

inline SpeakerPair make_pair_canonical(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return SpeakerPair{std::move(a), std::move(b)};
}

// All n(n-1)/2 canonical pairs, sorted lexicographically.
inline std::vector<SpeakerPair> enumerate_pairs(std::vector<std::string> speaker_ids) {
  std::sort(speaker_ids.begin(), speaker_ids.end());
  for (std::size_t i = 1; i < speaker_ids.size(); ++i) {
    if (speaker_ids[i] == speaker_ids[i - 1]) {
      fail(ErrorCode::DuplicateSpeaker,
           "duplicate speaker id '" + speaker_ids[i] + "'");
    }
  }
  std::vector<SpeakerPair> pairs;
  if (speaker_ids.size() >= 2) {
    pairs.reserve(speaker_ids.size() * (speaker_ids.size() - 1) / 2);
  }
  for (std::size_t i = 0; i < speaker_ids.size(); ++i) {
    for (std::size_t j = i + 1; j < speaker_ids.size(); ++j) {
      pairs.push_back(SpeakerPair{speaker_ids[i], speaker_ids[j]});
    }
  }
  return pairs;
}

// Speaker representative for ranking: centroid of the speaker's embeddings in
// `space_name` restricted to `source_split` utterances.
inline Embedding speaker_centroid(const Dataset &ds, const SpeakerProfile &profile,
                                  const std::string &space_name, Split source_split) {
  std::vector<Embedding> embs;
  for (std::size_t row : profile.utterance_rows) {
    const UtteranceRecord &u = ds.utterances[row];
    if (u.split != source_split) continue;
    if (const Embedding *e = u.embedding(space_name)) embs.push_back(*e);
  }
  if (embs.empty()) {
    fail(ErrorCode::MissingEmbedding,
         "speaker '" + profile.speaker_id + "' has no '" + space_name +
             "' embedding in the " + to_string(source_split) + " split");
  }
  return centroid(embs);
}

// Fills each pair's similarity with the cosine of the two speakers' centroid
// embeddings and sorts by descending similarity, ties by canonical pair
// order.  The explicit tie-break makes the result independent of the input
// permutation.
inline std::vector<SpeakerPair> rank_pairs(const Dataset &ds,
                                           std::vector<SpeakerPair> pairs,
                                           const std::string &space_name,
                                           Split source_split = Split::Train) {
  ds.space(space_name);  // UnknownSpace early
  const auto speakers = speaker_index(ds);
  std::map<std::string, Embedding> centroids;
  for (SpeakerPair &p : pairs) {
    for (const std::string *id : {&p.speaker_a, &p.speaker_b}) {
      if (centroids.count(*id)) continue;
      auto it = speakers.find(*id);
      if (it == speakers.end()) {
        fail(ErrorCode::MissingEmbedding, "unknown speaker '" + *id + "' in pair list");
      }
      centroids.emplace(*id, speaker_centroid(ds, it->second, space_name, source_split));
    }
    p.similarity = cosine(centroids.at(p.speaker_a), centroids.at(p.speaker_b));
  }
  std::sort(pairs.begin(), pairs.end(), [](const SpeakerPair &x, const SpeakerPair &y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    if (x.speaker_a != y.speaker_a) return x.speaker_a < y.speaker_a;
    return x.speaker_b < y.speaker_b;
  });
  return pairs;
}

// Greedy unique-speaker filter over the top_k prefix of a ranked list: a pair
// is kept iff neither of its speakers appears in an already-kept pair.
inline std::vector<SpeakerPair> select_unique(const std::vector<SpeakerPair> &ranked,
                                              std::size_t top_k) {
  std::vector<SpeakerPair> kept;
  std::unordered_set<std::string> used;
  const std::size_t limit = std::min(top_k, ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    const SpeakerPair &p = ranked[i];
    if (used.count(p.speaker_a) || used.count(p.speaker_b)) continue;
    used.insert(p.speaker_a);
    used.insert(p.speaker_b);
    kept.push_back(p);
  }
  return kept;
}

struct PairStats {
  std::size_t count = 0;
  std::size_t cross_sex_count = 0;
  std::optional<double> similarity_min;
  std::optional<double> similarity_mean;
  std::optional<double> similarity_max;
};

// Sets each pair's cross_sex flag from the dataset (unknown sex counts as
// non-cross) and aggregates.
inline PairStats pair_stats(std::vector<SpeakerPair> &pairs, const Dataset &ds) {
  const auto speakers = speaker_index(ds);
  auto sex_of = [&](const std::string &id) {
    auto it = speakers.find(id);
    return it == speakers.end() ? Sex::Unknown : it->second.sex;
  };
  PairStats stats;
  stats.count = pairs.size();
  double sum = 0.0;
  for (SpeakerPair &p : pairs) {
    const Sex sa = sex_of(p.speaker_a), sb = sex_of(p.speaker_b);
    p.cross_sex = sa != Sex::Unknown && sb != Sex::Unknown && sa != sb;
    if (p.cross_sex) ++stats.cross_sex_count;
    sum += p.similarity;
    if (!stats.similarity_min || p.similarity < *stats.similarity_min)
      stats.similarity_min = p.similarity;
    if (!stats.similarity_max || p.similarity > *stats.similarity_max)
      stats.similarity_max = p.similarity;
  }
  if (!pairs.empty()) sum /= static_cast<double>(pairs.size());
  if (!pairs.empty()) stats.similarity_mean = sum;
  return stats;
}

// Pair list export: speaker_a<TAB>speaker_b<TAB>similarity<TAB>cross_sex.
inline void save_pairs(const std::vector<SpeakerPair> &pairs,
                       const std::filesystem::path &path) {
  std::string out(kPairsHeader);
  out.push_back('\n');
  for (const SpeakerPair &p : pairs) {
    out += p.speaker_a;
    out.push_back('\t');
    out += p.speaker_b;
    out.push_back('\t');
    out += io::format_score(p.similarity);
    out.push_back('\t');
    out += p.cross_sex ? "1" : "0";
    out.push_back('\n');
  }
  io::write_file(path, out);
}

inline std::vector<SpeakerPair> load_pairs(const std::filesystem::path &path) {
  const std::string text = io::read_file(path);
  const auto lines = io::split_lines(text);
  if (lines.empty() || lines[0] != kPairsHeader) {
    fail(ErrorCode::ParseError,
         path.string() + ": line 1: missing '" + std::string(kPairsHeader) + "' header");
  }
  std::vector<SpeakerPair> pairs;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (line.empty() || line.front() == '#') continue;
    const auto f = io::split_tabs(line);
    if (f.size() != 4) {
      fail(ErrorCode::ParseError, path.string() + ": line " + std::to_string(i + 1) +
                                      ": expected 4 fields");
    }
    SpeakerPair p;
    p.speaker_a = std::string(f[0]);
    p.speaker_b = std::string(f[1]);
    if (!(p.speaker_a < p.speaker_b)) {
      fail(ErrorCode::ParseError, path.string() + ": line " + std::to_string(i + 1) +
                                      ": pair not in canonical order");
    }
    p.similarity = io::parse_double(f[2], path.string() + ": line " + std::to_string(i + 1));
    if (f[3] == "1") {
      p.cross_sex = true;
    } else if (f[3] == "0") {
      p.cross_sex = false;
    } else {
      fail(ErrorCode::ParseError, path.string() + ": line " + std::to_string(i + 1) +
                                      ": bad cross_sex flag");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace vim

#endif  // VIM_SELECTION_HPP
