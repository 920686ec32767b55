// include/vim/metrics.hpp

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

#ifndef VIM_METRICS_HPP
#define VIM_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "vim/error.hpp"
#include "vim/trials.hpp"

namespace vim {

// Match decision convention throughout: a comparison matches iff
// score >= threshold.

// Exact fraction; every reported rate keeps its integer counts.
struct Rate {
  std::uint64_t num = 0;
  std::uint64_t den = 0;

  double value() const {
    return den == 0 ? std::numeric_limits<double>::quiet_NaN()
                    : static_cast<double>(num) / static_cast<double>(den);
  }
  double percent() const { return 100.0 * value(); }

  friend bool operator==(const Rate &a, const Rate &b) {
    return a.num == b.num && a.den == b.den;
  }
};

struct ThresholdEntry {
  double threshold = 0.0;
  // True when the threshold had to be placed above every observed score
  // (empirical FMR 0).
  bool saturated = false;
};

struct ThresholdTable {
  std::string matcher;
  std::map<double, ThresholdEntry> entries;  // keyed by FMR target
};

// Smallest observed-score-or-supremum t with (#scores >= t)/N <= target.
// Sort descending, k = floor(target*N): with k = 0 the threshold steps just
// above the maximum; with ties at position k it steps up to the smallest
// score strictly greater, keeping the empirical FMR at or below target.
inline ThresholdEntry threshold_at_fmr(std::vector<double> scores, double fmr_target) {
  if (scores.empty()) fail(ErrorCode::EmptyScores, "threshold_at_fmr: no scores");
  if (!(fmr_target > 0.0) || fmr_target > 1.0 || !std::isfinite(fmr_target)) {
    fail(ErrorCode::InvalidTarget,
         "fmr target must be in (0, 1], got " + std::to_string(fmr_target));
  }
  std::sort(scores.begin(), scores.end(), std::greater<>());
  const std::size_t n = scores.size();
  // 1e-9 nudge undoes binary dust in target*n (e.g. 0.1*10 -> 1.0000000000000002)
  std::size_t k = static_cast<std::size_t>(
      std::floor(fmr_target * static_cast<double>(n) + 1e-9));
  if (k > n) k = n;
  auto step_above = [](double x) {
    return std::nextafter(x, std::numeric_limits<double>::infinity());
  };
  if (k == 0) return {step_above(scores.front()), true};
  if (k == n || scores[k - 1] > scores[k]) return {scores[k - 1], false};
  // tie block spans position k; find the smallest score strictly above it
  const double tied = scores[k - 1];
  for (std::size_t i = k - 1; i > 0; --i) {
    if (scores[i - 1] > tied) return {scores[i - 1], false};
  }
  return {step_above(scores.front()), true};
}

inline Rate rate_at_threshold(const std::vector<double> &scores, double threshold) {
  std::uint64_t matched = 0;
  for (double s : scores) {
    if (s >= threshold) ++matched;
  }
  return Rate{matched, scores.size()};
}

// Proportion of genuine scores at or above the threshold.
inline Rate tmr_at(const std::vector<double> &genuine_scores, double threshold) {
  if (genuine_scores.empty()) fail(ErrorCode::EmptyScores, "tmr_at: no scores");
  return rate_at_threshold(genuine_scores, threshold);
}

// Per-morph matched-probe bookkeeping.
struct MorphOutcome {
  std::string morph_id;
  std::pair<std::string, std::string> pair;
  // total test probes per matcher: (n_a, n_b)
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> probes;
  // matched counts per matcher, per FMR target: (count_a, count_b)
  std::map<std::string, std::map<double, std::pair<std::uint64_t, std::uint64_t>>> matched;
};

// Per-speaker success rule inside a morph: the default follows the protocol
// ("at least one probe matches"); AllProbes is the stricter non-default.
enum class PerSpeakerRule { AnyProbe, AllProbes };

// Folds morph trials into per-morph outcomes under every (matcher, FMR
// target) in `thresholds`.  Outcomes keep the first-appearance order of
// morphs in the trial list.
inline std::vector<MorphOutcome> morph_outcomes(
    const std::vector<TrialScore> &trials,
    const std::map<std::string, ThresholdTable> &thresholds) {
  std::vector<MorphOutcome> outcomes;
  std::map<std::string, std::size_t> index;
  for (const TrialScore &t : trials) {
    if (t.kind != TrialKind::Morph) continue;
    if (!t.morph_pair) {
      fail(ErrorCode::ParseError,
           "morph trial for '" + t.reference + "' lacks its speaker pair");
    }
    auto [it, fresh] = index.emplace(t.reference, outcomes.size());
    if (fresh) {
      MorphOutcome o;
      o.morph_id = t.reference;
      o.pair = *t.morph_pair;
      outcomes.push_back(std::move(o));
    }
    MorphOutcome &o = outcomes[it->second];
    const bool is_a = t.probe_speaker == o.pair.first;
    auto table = thresholds.find(t.matcher);
    if (table == thresholds.end()) continue;  // trial for an uncalibrated matcher
    auto &probe_counts = o.probes[t.matcher];
    (is_a ? probe_counts.first : probe_counts.second) += 1;
    for (const auto &[target, entry] : table->second.entries) {
      auto &counts = o.matched[t.matcher][target];
      if (t.score >= entry.threshold) (is_a ? counts.first : counts.second) += 1;
    }
  }
  // ensure every matcher/target key exists even when nothing matched
  for (MorphOutcome &o : outcomes) {
    for (const auto &[matcher, table] : thresholds) {
      if (!o.probes.count(matcher)) continue;
      for (const auto &[target, entry] : table.entries) o.matched[matcher][target];
    }
  }
  return outcomes;
}

namespace detail {

inline const std::pair<std::uint64_t, std::uint64_t> &matched_counts(
    const MorphOutcome &o, const std::string &matcher, double fmr_target) {
  auto mt = o.matched.find(matcher);
  if (mt == o.matched.end()) {
    fail(ErrorCode::MatcherSetMismatch,
         "morph '" + o.morph_id + "' has no trials under matcher '" + matcher + "'");
  }
  auto ft = mt->second.find(fmr_target);
  if (ft == mt->second.end()) {
    fail(ErrorCode::MatcherSetMismatch,
         "morph '" + o.morph_id + "' has no counts at the requested FMR target");
  }
  return ft->second;
}

// Success of one morph under one matcher: both constituent speakers reach
// at least `k` matched probes (AnyProbe: k = 1).
inline bool morph_success(const MorphOutcome &o, const std::string &matcher,
                          double fmr_target, std::uint64_t k, PerSpeakerRule rule) {
  const auto &counts = matched_counts(o, matcher, fmr_target);
  if (rule == PerSpeakerRule::AllProbes) {
    const auto pt = o.probes.find(matcher);
    if (pt == o.probes.end()) return false;
    return pt->second.first > 0 && pt->second.second > 0 &&
           counts.first == pt->second.first && counts.second == pt->second.second;
  }
  return counts.first >= k && counts.second >= k;
}

}  // namespace detail

// Fraction of morph samples that match at least one test probe of each
// constituent speaker.
inline Rate mmpmr_sample(const std::vector<MorphOutcome> &outcomes,
                         const std::string &matcher, double fmr_target,
                         PerSpeakerRule rule = PerSpeakerRule::AnyProbe) {
  if (outcomes.empty()) fail(ErrorCode::EmptyOutcomes, "mmpmr_sample: no outcomes");
  std::uint64_t ok = 0;
  for (const MorphOutcome &o : outcomes) {
    if (detail::morph_success(o, matcher, fmr_target, 1, rule)) ++ok;
  }
  return Rate{ok, outcomes.size()};
}

// Fraction of speaker pairs with at least one successful morph sample.
inline Rate mmpmr_pair(const std::vector<MorphOutcome> &outcomes,
                       const std::string &matcher, double fmr_target,
                       PerSpeakerRule rule = PerSpeakerRule::AnyProbe) {
  if (outcomes.empty()) fail(ErrorCode::EmptyOutcomes, "mmpmr_pair: no outcomes");
  std::map<std::pair<std::string, std::string>, bool> pair_ok;
  for (const MorphOutcome &o : outcomes) {
    bool &ok = pair_ok[o.pair];
    ok = ok || detail::morph_success(o, matcher, fmr_target, 1, rule);
  }
  std::uint64_t ok_pairs = 0;
  for (const auto &[pair, ok] : pair_ok) {
    if (ok) ++ok_pairs;
  }
  return Rate{ok_pairs, pair_ok.size()};
}

// Morphing attack potential: entry (k, m) is the fraction of morphs for
// which at least m matchers give both constituent speakers at least k
// matched probes.
struct MapMatrix {
  double fmr_target = 0.0;
  std::vector<std::string> matchers;
  std::size_t max_attempts = 0;
  std::vector<std::vector<Rate>> entries;  // [k-1][m-1]

  const Rate &at(std::size_t attempts, std::size_t matcher_count) const {
    return entries.at(attempts - 1).at(matcher_count - 1);
  }
};

inline MapMatrix map_matrix(const std::vector<MorphOutcome> &outcomes,
                            const std::vector<std::string> &matchers,
                            double fmr_target, std::size_t max_attempts,
                            PerSpeakerRule rule = PerSpeakerRule::AnyProbe) {
  if (outcomes.empty()) fail(ErrorCode::EmptyOutcomes, "map_matrix: no outcomes");
  if (matchers.empty() || max_attempts == 0) {
    fail(ErrorCode::InvalidConfig, "map_matrix: need >= 1 matcher and >= 1 attempt");
  }
  MapMatrix out;
  out.fmr_target = fmr_target;
  out.matchers = matchers;
  out.max_attempts = max_attempts;
  out.entries.assign(max_attempts, std::vector<Rate>(matchers.size()));
  for (std::size_t k = 1; k <= max_attempts; ++k) {
    std::vector<std::uint64_t> ok(matchers.size(), 0);
    for (const MorphOutcome &o : outcomes) {
      std::size_t succeeding = 0;
      for (const std::string &matcher : matchers) {
        if (detail::morph_success(o, matcher, fmr_target, k, rule)) ++succeeding;
      }
      for (std::size_t m = 1; m <= matchers.size(); ++m) {
        if (succeeding >= m) ++ok[m - 1];
      }
    }
    for (std::size_t m = 1; m <= matchers.size(); ++m) {
      out.entries[k - 1][m - 1] = Rate{ok[m - 1], outcomes.size()};
    }
  }
  return out;
}

// Convenience: pull all scores of one (matcher, kind) out of a trial list.
inline std::vector<double> scores_of(const std::vector<TrialScore> &trials,
                                     const std::string &matcher, TrialKind kind) {
  std::vector<double> out;
  for (const TrialScore &t : trials) {
    if (t.matcher == matcher && t.kind == kind) out.push_back(t.score);
  }
  return out;
}

}  // namespace vim

#endif  // VIM_METRICS_HPP
