// include/vim/pipeline.hpp

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

#ifndef VIM_PIPELINE_HPP
#define VIM_PIPELINE_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "vim/config.hpp"
#include "vim/dataio.hpp"
#include "vim/metrics.hpp"
#include "vim/project.hpp"
#include "vim/report.hpp"
#include "vim/selection.hpp"
#include "vim/simulate.hpp"
#include "vim/trials.hpp"

namespace vim {

namespace pipeline_detail {

// Spaces named in the config must exist in the loaded dataset; a bad name is
// a configuration error, not a data error.
inline void check_space_reference(const Dataset &ds, const std::string &name,
                                  const std::string &what) {
  if (!ds.find_space(name)) {
    fail(ErrorCode::InvalidConfig, what + " references unknown space '" + name + "'");
  }
}

}  // namespace pipeline_detail

// Produces the raw dataset (simulated or loaded), without filter/split.
inline std::pair<Dataset, std::optional<SimWorld>> load_input_dataset(
    const RunConfig &config) {
  if (config.simulate) {
    Simulation sim = gen_population(*config.simulate);
    return {std::move(sim.dataset), std::move(sim.world)};
  }
  Dataset ds = load_manifest(config.data->manifest);
  for (const auto &[space_name, src] : config.data->embeddings) {
    ds = load_embeddings(ds, EmbeddingSpace{space_name, src.dim}, src.path, src.format);
  }
  return {std::move(ds), std::nullopt};
}

// Resolves matcher space dims against the dataset and validates every
// config-referenced space name up front.
inline std::vector<Matcher> resolve_matchers(const RunConfig &config, const Dataset &ds) {
  std::vector<Matcher> matchers = config.matchers;
  for (Matcher &m : matchers) {
    pipeline_detail::check_space_reference(ds, m.space.name, "matcher '" + m.name + "'");
    m.space = ds.space(m.space.name);
  }
  pipeline_detail::check_space_reference(ds, config.ranking_space, "ranking");
  pipeline_detail::check_space_reference(ds, config.fusion_space, "morph fusion");
  return matchers;
}

// Dataset after duration filter and split assignment; every stage command
// rebuilds this deterministically from the config seeds.
struct PreparedDataset {
  Dataset dataset;
  std::optional<SimWorld> world;
  std::size_t speakers_before_filter = 0;
  std::vector<Matcher> matchers;
};

inline PreparedDataset prepare_dataset(const RunConfig &config) {
  PreparedDataset prep;
  auto [raw, world] = load_input_dataset(config);
  prep.world = std::move(world);
  prep.speakers_before_filter = speaker_index(raw).size();
  prep.dataset = assign_splits(filter_speakers(raw, config.min_total_duration_sec),
                               config.split_ratios, config.split_seed());
  prep.matchers = resolve_matchers(config, prep.dataset);
  return prep;
}

struct PairSelection {
  std::vector<SpeakerPair> ranked;
  std::vector<SpeakerPair> selected;
  PairStats stats;
  std::size_t enumerated = 0;
};

inline PairSelection select_pairs(const RunConfig &config, const Dataset &ds) {
  std::vector<std::string> speaker_ids;
  for (const auto &[id, profile] : speaker_index(ds)) speaker_ids.push_back(id);
  if (speaker_ids.size() < 2) {
    fail(ErrorCode::InsufficientSpeakers,
         "pair selection needs at least 2 speakers after filtering, have " +
             std::to_string(speaker_ids.size()));
  }
  PairSelection sel;
  auto pairs = enumerate_pairs(speaker_ids);
  sel.enumerated = pairs.size();
  sel.ranked = rank_pairs(ds, std::move(pairs), config.ranking_space, Split::Train);
  sel.selected = select_unique(sel.ranked, config.top_k);
  sel.stats = pair_stats(sel.selected, ds);
  return sel;
}

inline std::vector<MorphRecord> build_morphs(const RunConfig &config, const Dataset &ds,
                                             const std::vector<SpeakerPair> &selected,
                                             const std::optional<SimWorld> &world) {
  if (config.morph_variant == MorphVariant::External) {
    if (!config.external_morphs) {
      fail(ErrorCode::InvalidConfig,
           "morph.variant external needs morph.external.{records,embeddings}");
    }
    auto morphs = load_morph_records(config.external_morphs->records);
    for (const auto &[space_name, path] : config.external_morphs->embeddings) {
      pipeline_detail::check_space_reference(ds, space_name, "morph.external");
      load_morph_embeddings(morphs, ds.space(space_name), path);
    }
    return morphs;
  }
  auto morphs = make_morphs(ds, selected, config.per_pair, config.morph_seed(),
                            config.fusion_space, config.morph_variant,
                            config.normalize_fusion_inputs);
  if (config.morph_variant == MorphVariant::Simulated) {
    if (!world) {
      fail(ErrorCode::InvalidConfig,
           "morph.variant simulated requires a simulated dataset");
    }
    gen_morph_embeddings(morphs, *world);
  }
  return morphs;
}

// All trials for all matchers, genuine/impostor/morph per matcher in order.
inline std::vector<TrialScore> score_all(const RunConfig &config, const Dataset &ds,
                                         const std::vector<Matcher> &matchers,
                                         const std::vector<MorphRecord> &morphs) {
  std::vector<TrialScore> trials;
  for (const Matcher &matcher : matchers) {
    auto genuine = genuine_trials(ds, matcher, config.threads);
    auto impostor = impostor_trials(ds, matcher, config.impostor_cap,
                                    config.impostor_seed(), config.threads);
    auto morph = morph_trials(morphs, ds, matcher, config.threads);
    trials.insert(trials.end(), genuine.begin(), genuine.end());
    trials.insert(trials.end(), impostor.begin(), impostor.end());
    trials.insert(trials.end(), morph.begin(), morph.end());
  }
  return trials;
}

inline std::map<std::string, ThresholdTable> calibrate_all(
    const RunConfig &config, const std::vector<TrialScore> &trials,
    const std::vector<std::string> &matcher_names) {
  std::map<std::string, ThresholdTable> thresholds;
  for (const std::string &name : matcher_names) {
    ThresholdTable table;
    table.matcher = name;
    auto impostor_scores = scores_of(trials, name, TrialKind::Impostor);
    for (double target : config.fmr_targets) {
      table.entries[target] = threshold_at_fmr(impostor_scores, target);
    }
    thresholds[name] = std::move(table);
  }
  return thresholds;
}

struct DatasetShape {
  std::size_t speakers_before_filter = 0;
  std::size_t speakers_after_filter = 0;
  std::size_t utterances = 0;
  std::vector<EmbeddingSpace> spaces;
};

// Computes thresholds and every metric from a trial list and renders the
// report.  This is the common tail of `eval` and `report`.
inline ReportInput assemble_report(const RunConfig &config,
                                   const std::vector<TrialScore> &trials,
                                   const std::vector<std::string> &matcher_names,
                                   const DatasetShape &shape,
                                   const PairSelection &selection,
                                   std::size_t morph_count) {
  ReportInput rep;
  rep.config_digest = config_digest(config);
  rep.master_seed = config.seed;
  rep.stage_seeds = {{"split", config.split_seed()},
                     {"impostor", config.impostor_seed()},
                     {"morph", config.morph_seed()},
                     {"tsne", config.tsne.seed}};
  if (config.simulate) rep.stage_seeds["sim"] = config.simulate->seed;
  rep.speakers_before_filter = shape.speakers_before_filter;
  rep.speakers_after_filter = shape.speakers_after_filter;
  rep.utterances = shape.utterances;
  rep.spaces = shape.spaces;
  rep.pairs_enumerated = selection.enumerated;
  rep.top_k = config.top_k;
  rep.selected_stats = selection.stats;
  rep.morph_count = morph_count;
  rep.per_pair = config.per_pair;
  rep.morph_variant = to_string(config.morph_variant);
  rep.fmr_targets = config.fmr_targets;
  std::sort(rep.fmr_targets.begin(), rep.fmr_targets.end(), std::greater<>());

  auto thresholds = calibrate_all(config, trials, matcher_names);
  auto outcomes = morph_outcomes(trials, thresholds);
  rep.matchers = matcher_names;
  for (const std::string &name : matcher_names) {
    auto genuine_scores = scores_of(trials, name, TrialKind::Genuine);
    if (genuine_scores.empty()) {
      fail(ErrorCode::EmptyScores, "no genuine trials for matcher '" + name + "'");
    }
    rep.genuine_counts[name] = genuine_scores.size();
    rep.impostor_counts[name] = scores_of(trials, name, TrialKind::Impostor).size();
    rep.morph_trial_counts[name] = scores_of(trials, name, TrialKind::Morph).size();
    rep.thresholds[name] = thresholds.at(name);
    for (double target : rep.fmr_targets) {
      const double threshold = thresholds.at(name).entries.at(target).threshold;
      rep.tmr[name][target] = tmr_at(genuine_scores, threshold);
      rep.mmpmr_sample_rates[name][target] = mmpmr_sample(outcomes, name, target);
      rep.mmpmr_pair_rates[name][target] = mmpmr_pair(outcomes, name, target);
    }
  }
  for (double target : rep.fmr_targets) {
    rep.map_matrices.push_back(
        map_matrix(outcomes, matcher_names, target, config.map_attempts));
  }
  return rep;
}

// Everything an end-to-end evaluation produces, kept in memory so the CLI
// and the tests drive the exact same code path.
struct EvalArtifacts {
  Dataset dataset;
  std::optional<SimWorld> world;
  std::size_t speakers_before_filter = 0;
  PairSelection selection;
  std::vector<MorphRecord> morphs;
  std::vector<TrialScore> trials;
  std::map<std::string, ThresholdTable> thresholds;
  std::vector<Matcher> matchers;
  ReportInput report_input;
  nlohmann::json report_json;
  std::string report_text;
};

// The full protocol: filter -> split -> rank -> select -> morph -> trials ->
// calibrate -> metrics -> report.
inline EvalArtifacts run_eval(const RunConfig &config) {
  EvalArtifacts art;
  PreparedDataset prep = prepare_dataset(config);
  art.world = std::move(prep.world);
  art.speakers_before_filter = prep.speakers_before_filter;
  art.matchers = prep.matchers;
  Dataset &ds = prep.dataset;

  art.selection = select_pairs(config, ds);
  art.morphs = build_morphs(config, ds, art.selection.selected, art.world);
  art.trials = score_all(config, ds, art.matchers, art.morphs);

  std::vector<std::string> matcher_names;
  for (const Matcher &m : art.matchers) matcher_names.push_back(m.name);
  art.thresholds = calibrate_all(config, art.trials, matcher_names);

  DatasetShape shape;
  shape.speakers_before_filter = art.speakers_before_filter;
  shape.speakers_after_filter = speaker_index(ds).size();
  shape.utterances = ds.utterances.size();
  shape.spaces = ds.spaces;
  art.report_input = assemble_report(config, art.trials, matcher_names, shape,
                                     art.selection, art.morphs.size());
  art.report_json = build_report_json(art.report_input);
  art.report_text = build_report_text(art.report_input);
  art.dataset = std::move(ds);
  return art;
}

// Writes the eval outputs under config.out_dir.
inline void write_eval_outputs(const EvalArtifacts &art, const RunConfig &config) {
  const std::filesystem::path out = config.out_dir;
  io::write_file(out / "report.json", art.report_json.dump(2) + "\n");
  io::write_file(out / "report.txt", art.report_text);
  io::write_file(out / "config.json", effective_config_json(config).dump(2) + "\n");
  save_trials(art.trials, out / "trials.tsv");
  save_pairs(art.selection.selected, out / "pairs.tsv");
  save_morph_records(art.morphs, out / "morphs.tsv");
  for (const Matcher &matcher : art.matchers) {
    std::vector<TrialScore> subset;
    for (const TrialScore &t : art.trials) {
      if (t.matcher == matcher.name) subset.push_back(t);
    }
    Histogram h = histogram(subset, config.histogram_bins);
    save_histogram(h, out / ("histogram_" + matcher.name + ".tsv"));
  }
}

// t-SNE over the selected pairs' morph embeddings plus their constituents'
// test utterances, in one matcher space.
inline std::vector<ProjectionRow> project_pairs(const RunConfig &config,
                                                const Dataset &ds,
                                                const std::vector<MorphRecord> &morphs,
                                                const std::vector<SpeakerPair> &scope) {
  const std::string space_name =
      config.tsne_space.empty() ? config.matchers.front().space.name : config.tsne_space;
  pipeline_detail::check_space_reference(ds, space_name, "tsne");
  const EmbeddingSpace &space = ds.space(space_name);

  std::vector<std::string> ids, labels;
  std::vector<double> matrix;
  auto push_row = [&](const std::string &id, const std::string &label,
                      const std::vector<double> &values) {
    ids.push_back(id);
    labels.push_back(label);
    matrix.insert(matrix.end(), values.begin(), values.end());
  };

  const auto speakers = speaker_index(ds);
  for (const SpeakerPair &p : scope) {
    for (const std::string *spk : {&p.speaker_a, &p.speaker_b}) {
      auto it = speakers.find(*spk);
      if (it == speakers.end()) {
        fail(ErrorCode::UnknownPair, "pair references unknown speaker '" + *spk + "'");
      }
      for (std::size_t row : it->second.utterance_rows) {
        const UtteranceRecord &u = ds.utterances[row];
        if (u.split != Split::Test) continue;
        const Embedding *e = u.embedding(space_name);
        if (!e) {
          fail(ErrorCode::MissingEmbedding, "utterance '" + u.utterance_id +
                                                "' has no '" + space_name + "' embedding");
        }
        push_row(u.utterance_id, *spk, e->values);
      }
    }
    const std::string morph_label = p.speaker_a + "+" + p.speaker_b + "-morph";
    for (const MorphRecord &m : morphs) {
      if (m.pair != std::make_pair(p.speaker_a, p.speaker_b)) continue;
      const Embedding *e = m.embedding(space_name);
      if (!e) {
        fail(ErrorCode::MissingEmbedding,
             "morph '" + m.morph_id + "' has no '" + space_name + "' embedding");
      }
      push_row(m.morph_id, morph_label, e->values);
    }
  }
  if (ids.empty()) fail(ErrorCode::UnknownPair, "t-SNE scope selected no rows");

  auto points = tsne(matrix, ids.size(), space.dim, config.tsne, {}, config.threads);
  std::vector<ProjectionRow> rows(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    rows[i] = ProjectionRow{ids[i], labels[i], points[i * 2], points[i * 2 + 1]};
  }
  return rows;
}

}  // namespace vim

#endif  // VIM_PIPELINE_HPP
