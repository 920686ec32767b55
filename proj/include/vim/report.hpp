// include/vim/report.hpp

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

#ifndef VIM_REPORT_HPP
#define VIM_REPORT_HPP

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vim/metrics.hpp"
#include "vim/selection.hpp"

namespace vim {

// Everything the report renders, already computed.
struct ReportInput {
  // metadata
  std::string config_digest;
  std::uint64_t master_seed = 0;
  std::map<std::string, std::uint64_t> stage_seeds;
  // dataset shape
  std::size_t speakers_before_filter = 0;
  std::size_t speakers_after_filter = 0;
  std::size_t utterances = 0;
  std::vector<EmbeddingSpace> spaces;
  // selection
  std::size_t pairs_enumerated = 0;
  std::size_t top_k = 0;
  PairStats selected_stats;
  // morphs
  std::size_t morph_count = 0;
  std::size_t per_pair = 0;
  std::string morph_variant;
  // trials + metrics, per matcher
  std::vector<std::string> matchers;
  std::map<std::string, std::size_t> genuine_counts;
  std::map<std::string, std::size_t> impostor_counts;
  std::map<std::string, std::size_t> morph_trial_counts;
  std::map<std::string, ThresholdTable> thresholds;
  std::vector<double> fmr_targets;  // descending display order
  std::map<std::string, std::map<double, Rate>> tmr;
  std::map<std::string, std::map<double, Rate>> mmpmr_sample_rates;
  std::map<std::string, std::map<double, Rate>> mmpmr_pair_rates;
  std::vector<MapMatrix> map_matrices;  // one per FMR target
};

namespace report_detail {

inline nlohmann::json rate_json(const Rate &r) {
  return {{"num", r.num}, {"den", r.den}, {"value", r.value()}};
}

inline std::string percent(const Rate &r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", r.percent());
  return buf;
}

inline std::string fmr_label(double target) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g%%", target * 100.0);
  return buf;
}

}  // namespace report_detail

inline nlohmann::json build_report_json(const ReportInput &in) {
  using report_detail::rate_json;
  nlohmann::json j;
  j["artifact"] = "vimeval";
  j["rng"] = kRngAlgorithm;
  j["config_digest"] = in.config_digest;
  j["seeds"]["master"] = in.master_seed;
  for (const auto &[stage, seed] : in.stage_seeds) j["seeds"][stage] = seed;

  j["dataset"]["speakers_before_filter"] = in.speakers_before_filter;
  j["dataset"]["speakers_after_filter"] = in.speakers_after_filter;
  j["dataset"]["utterances"] = in.utterances;
  for (const auto &s : in.spaces) {
    j["dataset"]["spaces"].push_back({{"name", s.name}, {"dim", s.dim}});
  }

  j["pairs"]["enumerated"] = in.pairs_enumerated;
  j["pairs"]["top_k"] = in.top_k;
  j["pairs"]["selected"] = in.selected_stats.count;
  j["pairs"]["cross_sex"] = in.selected_stats.cross_sex_count;
  if (in.selected_stats.similarity_mean) {
    j["pairs"]["similarity"] = {{"min", *in.selected_stats.similarity_min},
                                {"mean", *in.selected_stats.similarity_mean},
                                {"max", *in.selected_stats.similarity_max}};
  }

  j["morphs"]["count"] = in.morph_count;
  j["morphs"]["per_pair"] = in.per_pair;
  j["morphs"]["variant"] = in.morph_variant;

  for (const std::string &m : in.matchers) {
    nlohmann::json mj;
    mj["trials"] = {{"genuine", in.genuine_counts.at(m)},
                    {"impostor", in.impostor_counts.at(m)},
                    {"morph", in.morph_trial_counts.at(m)}};
    for (double target : in.fmr_targets) {
      const auto &entry = in.thresholds.at(m).entries.at(target);
      nlohmann::json row;
      row["fmr_target"] = target;
      row["threshold"] = entry.threshold;
      row["saturated"] = entry.saturated;
      row["tmr"] = rate_json(in.tmr.at(m).at(target));
      row["mmpmr_sample"] = rate_json(in.mmpmr_sample_rates.at(m).at(target));
      row["mmpmr_pair"] = rate_json(in.mmpmr_pair_rates.at(m).at(target));
      mj["operating_points"].push_back(std::move(row));
    }
    j["matchers"][m] = std::move(mj);
  }

  for (const MapMatrix &matrix : in.map_matrices) {
    nlohmann::json mj;
    mj["fmr_target"] = matrix.fmr_target;
    mj["matchers"] = matrix.matchers;
    mj["max_attempts"] = matrix.max_attempts;
    for (std::size_t k = 1; k <= matrix.max_attempts; ++k) {
      nlohmann::json row;
      for (std::size_t m = 1; m <= matrix.matchers.size(); ++m) {
        row.push_back(rate_json(matrix.at(k, m)));
      }
      mj["entries"].push_back(std::move(row));
    }
    j["map"].push_back(std::move(mj));
  }
  return j;
}

// Human-readable tables: TMR at FMR targets, speaker-pair and morph-sample
// MMPMR, and the MAP matrix per FMR target.
inline std::string build_report_text(const ReportInput &in) {
  using report_detail::fmr_label;
  using report_detail::percent;
  std::string out;
  char line[256];

  out += "vimeval vulnerability report\n";
  out += "config digest: " + in.config_digest + "\n";
  std::snprintf(line, sizeof(line), "master seed: %llu\n",
                static_cast<unsigned long long>(in.master_seed));
  out += line;
  std::snprintf(line, sizeof(line),
                "speakers: %zu (of %zu after duration filter), utterances: %zu\n",
                in.speakers_after_filter, in.speakers_before_filter, in.utterances);
  out += line;
  std::snprintf(line, sizeof(line),
                "pairs: %zu enumerated, top %zu ranked, %zu unique selected (%zu cross-sex)\n",
                in.pairs_enumerated, in.top_k, in.selected_stats.count,
                in.selected_stats.cross_sex_count);
  out += line;
  std::snprintf(line, sizeof(line), "morphs: %zu (%zu per pair, variant %s)\n\n",
                in.morph_count, in.per_pair, in.morph_variant.c_str());
  out += line;

  out += "== True match rate (%) at FMR targets ==\n";
  out += "matcher";
  for (double t : in.fmr_targets) out += "\tFMR " + fmr_label(t);
  out += "\n";
  for (const std::string &m : in.matchers) {
    out += m;
    for (double t : in.fmr_targets) out += "\t" + percent(in.tmr.at(m).at(t));
    out += "\n";
  }

  out += "\n== Decision thresholds ==\n";
  out += "matcher";
  for (double t : in.fmr_targets) out += "\tFMR " + fmr_label(t);
  out += "\n";
  for (const std::string &m : in.matchers) {
    out += m;
    for (double t : in.fmr_targets) {
      const auto &e = in.thresholds.at(m).entries.at(t);
      std::snprintf(line, sizeof(line), "\t%.4f%s", e.threshold,
                    e.saturated ? "*" : "");
      out += line;
    }
    out += "\n";
  }
  out += "(* threshold above every impostor score)\n";

  out += "\n== MMPMR (%) ==\n";
  out += "matcher";
  for (double t : in.fmr_targets) out += "\tpair@" + fmr_label(t);
  for (double t : in.fmr_targets) out += "\tsample@" + fmr_label(t);
  out += "\n";
  for (const std::string &m : in.matchers) {
    out += m;
    for (double t : in.fmr_targets) out += "\t" + percent(in.mmpmr_pair_rates.at(m).at(t));
    for (double t : in.fmr_targets) out += "\t" + percent(in.mmpmr_sample_rates.at(m).at(t));
    out += "\n";
  }

  out += "\n== Morphing attack potential (%) ==\n";
  out += "rows: minimum matched probes per speaker (attempts); columns: at least m matchers\n";
  for (const MapMatrix &matrix : in.map_matrices) {
    out += "FMR " + fmr_label(matrix.fmr_target) + ":\n";
    out += "attempts";
    for (std::size_t m = 1; m <= matrix.matchers.size(); ++m) {
      std::snprintf(line, sizeof(line), "\t>=%zu SRS", m);
      out += line;
    }
    out += "\n";
    for (std::size_t k = 1; k <= matrix.max_attempts; ++k) {
      std::snprintf(line, sizeof(line), "%zu", k);
      out += line;
      for (std::size_t m = 1; m <= matrix.matchers.size(); ++m) {
        out += "\t" + percent(matrix.at(k, m));
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace vim

#endif  // VIM_REPORT_HPP
