// tools/vimeval.cpp

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

// vimeval: embedding-level voice identity morphing and the full
// vulnerability-assessment protocol over synthetic or externally supplied
// speaker embeddings.
//
// Subcommands: simulate, split, pairs, morph, score, calibrate, eval, tsne,
// report.  Exit codes: 0 success, 2 config error, 3 data error, 4 numeric or
// degenerate error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vim/pipeline.hpp"

namespace {

using namespace vim;

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common_flags(CLI::App *cmd, CommonFlags &flags) {
  cmd->add_option("--config", flags.config_path, "run configuration file (JSON)");
  cmd->add_option("--out", flags.out_dir, "output directory (default: out)");
  cmd->add_option("--seed", flags.seed, "master seed, overrides the config");
  cmd->add_option("--threads", flags.threads, "worker cap; results do not depend on it");
}

// flags > config file > defaults
RunConfig make_config(const CommonFlags &flags) {
  nlohmann::json j = nlohmann::json::object();
  if (!flags.config_path.empty()) {
    try {
      j = nlohmann::json::parse(io::read_file(flags.config_path));
    } catch (const nlohmann::json::exception &e) {
      fail(ErrorCode::InvalidConfig, flags.config_path + ": " + e.what());
    }
  }
  if (flags.seed) j["seed"] = *flags.seed;
  if (flags.out_dir) j["out_dir"] = *flags.out_dir;
  if (flags.threads) j["threads"] = *flags.threads;
  return parse_run_config(j);
}

nlohmann::json run_stamp(const RunConfig &config) {
  nlohmann::json j;
  j["artifact"] = "vimeval";
  j["rng"] = kRngAlgorithm;
  j["config_digest"] = config_digest(config);
  j["seeds"]["master"] = config.seed;
  j["seeds"]["split"] = config.split_seed();
  j["seeds"]["impostor"] = config.impostor_seed();
  j["seeds"]["morph"] = config.morph_seed();
  j["seeds"]["tsne"] = config.tsne.seed;
  if (config.simulate) j["seeds"]["sim"] = config.simulate->seed;
  return j;
}

int cmd_simulate(const CommonFlags &flags) {
  RunConfig config = make_config(flags);
  if (!config.simulate) {
    fail(ErrorCode::InvalidConfig, "simulate needs a `simulate` config block");
  }
  Simulation sim = gen_population(*config.simulate);
  const std::filesystem::path out = config.out_dir;
  save_manifest(sim.dataset, out / "manifest.tsv");
  for (const auto &space : sim.dataset.spaces) {
    save_embeddings(sim.dataset, space.name, out / ("embeddings_" + space.name + ".evb"),
                    EmbeddingFormat::EVB);
  }
  io::write_file(out / "sim.json", run_stamp(config).dump(2) + "\n");
  std::cout << "simulated " << sim.dataset.utterances.size() << " utterances from "
            << config.simulate->n_speakers << " speakers into " << out.string() << "\n";
  return 0;
}

int cmd_split(const CommonFlags &flags) {
  RunConfig config = make_config(flags);
  PreparedDataset prep = prepare_dataset(config);
  const std::filesystem::path out = config.out_dir;
  save_manifest(prep.dataset, out / "manifest.tsv");
  io::write_file(out / "split.json", run_stamp(config).dump(2) + "\n");
  std::cout << "assigned splits for " << prep.dataset.utterances.size()
            << " utterances (" << speaker_index(prep.dataset).size() << " of "
            << prep.speakers_before_filter << " speakers kept)\n";
  return 0;
}

int cmd_pairs(const CommonFlags &flags) {
  RunConfig config = make_config(flags);
  PreparedDataset prep = prepare_dataset(config);
  PairSelection sel = select_pairs(config, prep.dataset);
  const std::filesystem::path out = config.out_dir;
  save_pairs(sel.selected, out / "pairs.tsv");
  std::cout << "enumerated " << sel.enumerated << " pairs, ranked top " << config.top_k
            << ", kept " << sel.selected.size() << " with unique speakers ("
            << sel.stats.cross_sex_count << " cross-sex)\n";
  return 0;
}

int cmd_morph(const CommonFlags &flags, const std::string &pairs_path) {
  RunConfig config = make_config(flags);
  PreparedDataset prep = prepare_dataset(config);
  const std::filesystem::path out = config.out_dir;
  const std::filesystem::path pairs_file =
      pairs_path.empty() ? out / "pairs.tsv" : std::filesystem::path(pairs_path);
  auto pairs = load_pairs(pairs_file);
  auto morphs = build_morphs(config, prep.dataset, pairs, prep.world);
  save_morph_records(morphs, out / "morphs.tsv");
  // one blob per space carried by all morphs
  if (!morphs.empty()) {
    for (const auto &[space_name, emb] : morphs.front().embeddings) {
      save_morph_embeddings(morphs, space_name, out / ("morphs_" + space_name + ".evb"));
    }
  }
  std::cout << "generated " << morphs.size() << " morphs (" << config.per_pair
            << " per pair, variant " << to_string(config.morph_variant) << ")\n";
  return 0;
}

std::vector<MorphRecord> load_morphs_with_embeddings(const RunConfig &config,
                                                     const Dataset &ds,
                                                     const std::vector<Matcher> &matchers,
                                                     const std::filesystem::path &records) {
  auto morphs = load_morph_records(records);
  const std::filesystem::path dir = records.parent_path();
  for (const Matcher &m : matchers) {
    load_morph_embeddings(morphs, ds.space(m.space.name),
                          dir / ("morphs_" + m.space.name + ".evb"));
  }
  return morphs;
}

int cmd_score(const CommonFlags &flags, const std::string &morphs_path) {
  RunConfig config = make_config(flags);
  PreparedDataset prep = prepare_dataset(config);
  const std::filesystem::path out = config.out_dir;
  const std::filesystem::path records =
      morphs_path.empty() ? out / "morphs.tsv" : std::filesystem::path(morphs_path);
  auto morphs =
      load_morphs_with_embeddings(config, prep.dataset, prep.matchers, records);
  auto trials = score_all(config, prep.dataset, prep.matchers, morphs);
  save_trials(trials, out / "trials.tsv");
  std::cout << "scored " << trials.size() << " trials over " << prep.matchers.size()
            << " matchers\n";
  return 0;
}

int cmd_calibrate(const CommonFlags &flags, const std::string &trials_path) {
  RunConfig config = make_config(flags);
  const std::filesystem::path out = config.out_dir;
  const std::filesystem::path file =
      trials_path.empty() ? out / "trials.tsv" : std::filesystem::path(trials_path);
  auto trials = load_trials(file);
  std::vector<std::string> names;
  for (const Matcher &m : config.matchers) names.push_back(m.name);
  auto thresholds = calibrate_all(config, trials, names);
  nlohmann::json j = run_stamp(config);
  for (const auto &[name, table] : thresholds) {
    for (const auto &[target, entry] : table.entries) {
      j["thresholds"][name].push_back({{"fmr_target", target},
                                       {"threshold", entry.threshold},
                                       {"saturated", entry.saturated}});
    }
  }
  io::write_file(out / "thresholds.json", j.dump(2) + "\n");
  std::cout << "calibrated " << names.size() << " matchers at "
            << config.fmr_targets.size() << " FMR targets\n";
  return 0;
}

int cmd_eval(const CommonFlags &flags) {
  RunConfig config = make_config(flags);
  EvalArtifacts art = run_eval(config);
  write_eval_outputs(art, config);
  std::cout << art.report_text;
  std::cout << "wrote report to " << (config.out_dir / "report.json").string() << "\n";
  return 0;
}

int cmd_tsne(const CommonFlags &flags, const std::string &scope,
             std::optional<double> perplexity) {
  RunConfig config = make_config(flags);
  if (perplexity) config.tsne.perplexity = *perplexity;
  if (scope.empty()) {
    fail(ErrorCode::UsageError, "tsne needs --scope A+B[,C+D...] pair ids");
  }
  std::vector<SpeakerPair> pairs;
  std::size_t start = 0;
  const std::string sep = ",";
  while (start <= scope.size()) {
    const std::size_t comma = scope.find(',', start);
    const std::string token =
        scope.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!token.empty()) {
      const std::size_t plus = token.find('+');
      if (plus == std::string::npos || plus == 0 || plus + 1 == token.size()) {
        fail(ErrorCode::UsageError, "bad pair id '" + token + "', expected A+B");
      }
      pairs.push_back(make_pair_canonical(token.substr(0, plus), token.substr(plus + 1)));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (pairs.empty()) fail(ErrorCode::UsageError, "tsne scope selected no pairs");

  PreparedDataset prep = prepare_dataset(config);
  PairSelection sel = select_pairs(config, prep.dataset);
  // scope must name selected pairs (the ones that have morphs)
  std::vector<SpeakerPair> scoped;
  for (const SpeakerPair &want : pairs) {
    bool found = false;
    for (const SpeakerPair &have : sel.selected) {
      if (have.speaker_a == want.speaker_a && have.speaker_b == want.speaker_b) {
        scoped.push_back(have);
        found = true;
        break;
      }
    }
    if (!found) {
      fail(ErrorCode::UnknownPair,
           "pair '" + want.speaker_a + "+" + want.speaker_b + "' is not a selected pair");
    }
  }
  auto morphs = build_morphs(config, prep.dataset, scoped, prep.world);
  auto rows = project_pairs(config, prep.dataset, morphs, scoped);
  const std::filesystem::path out = config.out_dir;
  save_projection(rows, out / "projection.tsv");
  std::cout << "projected " << rows.size() << " embeddings for " << scoped.size()
            << " pairs into " << (out / "projection.tsv").string() << "\n";
  return 0;
}

int cmd_report(const CommonFlags &flags, const std::string &trials_path) {
  RunConfig config = make_config(flags);
  const std::filesystem::path out = config.out_dir;
  const std::filesystem::path file =
      trials_path.empty() ? out / "trials.tsv" : std::filesystem::path(trials_path);
  auto trials = load_trials(file);

  PreparedDataset prep = prepare_dataset(config);
  DatasetShape shape;
  shape.speakers_before_filter = prep.speakers_before_filter;
  shape.speakers_after_filter = speaker_index(prep.dataset).size();
  shape.utterances = prep.dataset.utterances.size();
  shape.spaces = prep.dataset.spaces;

  // pair stats come from the pair list when present next to the trials
  PairSelection sel;
  const std::filesystem::path pairs_file = file.parent_path() / "pairs.tsv";
  if (std::filesystem::exists(pairs_file)) {
    sel.selected = load_pairs(pairs_file);
    sel.stats = pair_stats(sel.selected, prep.dataset);
  }

  std::vector<std::string> names;
  std::size_t morph_count = 0;
  {
    std::set<std::string> morph_ids;
    for (const TrialScore &t : trials) {
      if (t.kind == TrialKind::Morph) morph_ids.insert(t.reference);
    }
    morph_count = morph_ids.size();
  }
  for (const Matcher &m : config.matchers) names.push_back(m.name);
  ReportInput rep = assemble_report(config, trials, names, shape, sel, morph_count);
  io::write_file(out / "report.json", build_report_json(rep).dump(2) + "\n");
  io::write_file(out / "report.txt", build_report_text(rep));
  for (const std::string &name : names) {
    std::vector<TrialScore> subset;
    for (const TrialScore &t : trials) {
      if (t.matcher == name) subset.push_back(t);
    }
    save_histogram(histogram(subset, config.histogram_bins),
                   out / ("histogram_" + name + ".tsv"));
  }
  std::cout << build_report_text(rep);
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{
      "vimeval: voice identity morphing at the embedding level and the full "
      "vulnerability-assessment protocol (pair selection, FMR calibration, "
      "TMR/MMPMR/MAP, histogram and t-SNE exports)"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string pairs_path, morphs_path, trials_path, scope;
  std::optional<double> perplexity;

  CLI::App *simulate = app.add_subcommand("simulate", "generate a synthetic population");
  add_common_flags(simulate, flags);
  CLI::App *split = app.add_subcommand("split", "filter speakers and assign splits");
  add_common_flags(split, flags);
  CLI::App *pairs = app.add_subcommand("pairs", "rank and select morph pairs");
  add_common_flags(pairs, flags);
  CLI::App *morph = app.add_subcommand("morph", "fuse embeddings for selected pairs");
  add_common_flags(morph, flags);
  morph->add_option("--pairs", pairs_path, "pair list (default: <out>/pairs.tsv)");
  CLI::App *score = app.add_subcommand("score", "generate and score all trials");
  add_common_flags(score, flags);
  score->add_option("--morphs", morphs_path, "morph records (default: <out>/morphs.tsv)");
  CLI::App *calibrate =
      app.add_subcommand("calibrate", "derive thresholds at the FMR targets");
  add_common_flags(calibrate, flags);
  calibrate->add_option("--trials", trials_path, "trial scores (default: <out>/trials.tsv)");
  CLI::App *eval = app.add_subcommand("eval", "run the whole protocol end to end");
  add_common_flags(eval, flags);
  CLI::App *tsne_cmd = app.add_subcommand("tsne", "2-D projection of selected pairs");
  add_common_flags(tsne_cmd, flags);
  tsne_cmd->add_option("--scope", scope, "pair ids, e.g. s0001+s0007,s0010+s0023");
  tsne_cmd->add_option("--perplexity", perplexity, "override tsne perplexity");
  CLI::App *report = app.add_subcommand("report", "rebuild the report from trial scores");
  add_common_flags(report, flags);
  report->add_option("--trials", trials_path, "trial scores (default: <out>/trials.tsv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(flags);
    if (split->parsed()) return cmd_split(flags);
    if (pairs->parsed()) return cmd_pairs(flags);
    if (morph->parsed()) return cmd_morph(flags, pairs_path);
    if (score->parsed()) return cmd_score(flags, morphs_path);
    if (calibrate->parsed()) return cmd_calibrate(flags, trials_path);
    if (eval->parsed()) return cmd_eval(flags);
    if (tsne_cmd->parsed()) return cmd_tsne(flags, scope, perplexity);
    if (report->parsed()) return cmd_report(flags, trials_path);
  } catch (const vim::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
