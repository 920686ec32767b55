// tests/test_pipeline.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"
#include "vim/pipeline.hpp"

using namespace vim;

namespace {

// Small but complete simulated run: 10 speakers x 10 utterances, one fusion
// space and two matcher spaces.
nlohmann::json small_run_json() {
  nlohmann::json j;
  j["seed"] = 2026;
  j["simulate"] = {{"n_speakers", 10},
                   {"utterances_per_speaker", 10},
                   {"latent_dim", 8},
                   {"spaces",
                    {{{"name", "fuse"}, {"dim", 16}},
                     {{"name", "m1"}, {"dim", 12}},
                     {{"name", "m2"}, {"dim", 20}}}},
                   {"within_speaker_sigma", 0.15},
                   {"channel_sigma", 0.05},
                   {"morph_sigma", 0.05}};
  j["filter"] = {{"min_total_duration_sec", 0.0}};
  j["ranking"] = {{"space", "m1"}, {"top_k", 10}};
  j["morph"] = {{"per_pair", 4}, {"variant", "simulated"}, {"fusion_space", "fuse"}};
  j["matchers"] = {{{"name", "m1"}}, {{"name", "m2"}}};
  j["fmr_targets"] = {0.05, 0.01};
  j["histogram_bins"] = 20;
  return j;
}

}  // namespace

TEST_CASE("config defaults: empty config is the default simulated run") {
  RunConfig c = parse_run_config(nlohmann::json::object());
  REQUIRE(c.simulate.has_value());
  CHECK(c.simulate->n_speakers == 50);
  CHECK(c.simulate->utterances_per_speaker == 20);
  REQUIRE(c.matchers.size() == 2);
  CHECK(c.matchers[0].name == "sim-ecapa");
  CHECK(c.matchers[1].name == "sim-xvector");
  CHECK(c.ranking_space == "sim-ecapa");
  CHECK(c.fusion_space == "sim-fusion");
  CHECK(c.fmr_targets == std::vector<double>{0.01, 0.001, 0.0001});
  CHECK(c.top_k == 100);
  CHECK(c.per_pair == 10);
  CHECK(c.tsne.perplexity == 30.0);
  CHECK(c.tsne.iterations == 1000);
  CHECK(c.tsne.learning_rate == 200.0);
  CHECK(c.tsne.early_exaggeration_factor == 12.0);
  CHECK(c.tsne.early_exaggeration_iters == 250);
  CHECK(c.tsne.momentum_switch_iter == 250);
}

TEST_CASE("config validation errors") {
  CHECK(error_code_of([] {
          parse_run_config({{"simulate", nlohmann::json::object()},
                            {"data", {{"manifest", "x.tsv"}}}});
        }) == ErrorCode::InvalidConfig);
  CHECK(error_code_of([] { parse_run_config({{"unknown_field", 1}}); }) ==
        ErrorCode::InvalidConfig);
  CHECK(error_code_of([] { parse_run_config({{"fmr_targets", {0.5, 0.5}}}); }) ==
        ErrorCode::InvalidConfig);
  CHECK(error_code_of([] { parse_run_config({{"fmr_targets", {1.5}}}); }) ==
        ErrorCode::InvalidConfig);
  CHECK(error_code_of([] { parse_run_config({{"threads", 0}}); }) ==
        ErrorCode::InvalidConfig);
  CHECK(error_code_of([] {
          parse_run_config({{"matchers", {{{"name", "a"}}, {{"name", "a"}}}}});
        }) == ErrorCode::InvalidConfig);
  // external data without embeddings must still name a fusion space
  CHECK(error_code_of([] {
          parse_run_config({{"data", {{"manifest", "m.tsv"}}},
                            {"matchers", {{{"name", "m"}, {"space", "s"}}}}});
        }) == ErrorCode::InvalidConfig);
}

TEST_CASE("config digest covers semantics, not execution knobs") {
  nlohmann::json j = small_run_json();
  RunConfig a = parse_run_config(j);
  RunConfig b = parse_run_config(j);
  CHECK(config_digest(a) == config_digest(b));

  j["threads"] = 8;
  j["out_dir"] = "elsewhere";
  RunConfig c = parse_run_config(j);
  CHECK(config_digest(a) == config_digest(c));

  j["seed"] = 1;
  RunConfig d = parse_run_config(j);
  CHECK(config_digest(a) != config_digest(d));
}

TEST_CASE("run_eval: report shape and metric sanity on a small simulated run") {
  RunConfig config = parse_run_config(small_run_json());
  EvalArtifacts art = run_eval(config);

  // 10 speakers, 10 utterances each, split (6,1,3)
  CHECK(art.dataset.utterances.size() == 100);
  CHECK(art.selection.enumerated == 45);  // C(10,2)
  CHECK(art.selection.selected.size() <= 5);
  CHECK(art.morphs.size() == art.selection.selected.size() * 4);

  // one threshold row per FMR target per matcher
  for (const auto &name : {"m1", "m2"}) {
    REQUIRE(art.thresholds.count(name) == 1);
    CHECK(art.thresholds.at(name).entries.size() == 2);
    // thresholds non-increasing as the target grows
    CHECK(art.thresholds.at(name).entries.at(0.01).threshold >=
          art.thresholds.at(name).entries.at(0.05).threshold);
  }

  // report json carries the tables
  const auto &j = art.report_json;
  REQUIRE(j.contains("matchers"));
  for (const auto &name : {"m1", "m2"}) {
    REQUIRE(j.at("matchers").contains(name));
    CHECK(j.at("matchers").at(name).at("operating_points").size() == 2);
  }
  REQUIRE(j.at("map").size() == 2);
  CHECK(j.at("map").at(0).at("entries").size() == config.map_attempts);

  // sample-level success is never above pair-level success
  for (const auto &name : {"m1", "m2"}) {
    for (double target : config.fmr_targets) {
      CHECK(art.report_input.mmpmr_sample_rates.at(name).at(target).value() <=
            art.report_input.mmpmr_pair_rates.at(name).at(target).value() + 1e-12);
    }
  }
}

TEST_CASE("run_eval is deterministic: bytes equal across runs and thread counts") {
  RunConfig config = parse_run_config(small_run_json());
  EvalArtifacts a = run_eval(config);
  EvalArtifacts b = run_eval(config);
  CHECK(a.report_json.dump() == b.report_json.dump());
  CHECK(a.report_text == b.report_text);

  RunConfig threaded = config;
  threaded.threads = 4;
  EvalArtifacts c = run_eval(threaded);
  CHECK(a.report_json.dump() == c.report_json.dump());
  REQUIRE(a.trials.size() == c.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].score == c.trials[i].score);
  }
}

TEST_CASE("run_eval writes the full artifact set") {
  TempDir tmp("eval_out");
  RunConfig config = parse_run_config(small_run_json());
  config.out_dir = tmp.path;
  EvalArtifacts art = run_eval(config);
  write_eval_outputs(art, config);
  for (const char *name : {"report.json", "report.txt", "config.json", "trials.tsv",
                           "pairs.tsv", "morphs.tsv", "histogram_m1.tsv",
                           "histogram_m2.tsv"}) {
    CHECK(std::filesystem::exists(tmp.path / name));
  }
  // the trial file reloads and the report rebuilt from it matches the
  // in-memory metrics on the integer counts
  auto trials = load_trials(tmp.path / "trials.tsv");
  REQUIRE(trials.size() == art.trials.size());
  auto thresholds = calibrate_all(config, trials, {"m1", "m2"});
  auto outcomes = morph_outcomes(trials, thresholds);
  for (const auto &name : {"m1", "m2"}) {
    for (double target : config.fmr_targets) {
      CHECK(mmpmr_sample(outcomes, name, target) ==
            art.report_input.mmpmr_sample_rates.at(name).at(target));
    }
  }
}

TEST_CASE("config errors surface before data errors for bad space names") {
  nlohmann::json j = small_run_json();
  j["matchers"] = {{{"name", "ghost"}, {"space", "nope"}}};
  RunConfig config = parse_run_config(j);
  CHECK(error_code_of([&] { run_eval(config); }) == ErrorCode::InvalidConfig);

  nlohmann::json j2 = small_run_json();
  j2["ranking"] = {{"space", "nope"}};
  CHECK(error_code_of([&] { run_eval(parse_run_config(j2)); }) ==
        ErrorCode::InvalidConfig);
}

TEST_CASE("single-speaker population fails cleanly at pair selection") {
  nlohmann::json j = small_run_json();
  j["simulate"]["n_speakers"] = 1;
  RunConfig config = parse_run_config(j);
  CHECK(error_code_of([&] { run_eval(config); }) == ErrorCode::InsufficientSpeakers);
}

TEST_CASE("external morph variant loads records and embeddings from disk") {
  TempDir tmp("external");
  // build morphs with the simulated variant, save them, then reload as
  // "external" (standing in for re-extracted embeddings)
  RunConfig config = parse_run_config(small_run_json());
  EvalArtifacts art = run_eval(config);
  save_morph_records(art.morphs, tmp.file("morphs.tsv"));
  save_morph_embeddings(art.morphs, "m1", tmp.file("morphs_m1.evb"));
  save_morph_embeddings(art.morphs, "m2", tmp.file("morphs_m2.evb"));

  nlohmann::json j = small_run_json();
  j["morph"]["variant"] = "external";
  j["morph"]["external"] = {
      {"records", tmp.file("morphs.tsv").string()},
      {"embeddings",
       {{"m1", tmp.file("morphs_m1.evb").string()},
        {"m2", tmp.file("morphs_m2.evb").string()}}}};
  RunConfig ext_config = parse_run_config(j);
  EvalArtifacts ext = run_eval(ext_config);
  REQUIRE(ext.morphs.size() == art.morphs.size());
  // identical inputs: identical morph trial scores (float32 EVB round-trip,
  // so compare within float32 precision)
  auto a = scores_of(art.trials, "m1", TrialKind::Morph);
  auto b = scores_of(ext.trials, "m1", TrialKind::Morph);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK_THAT(b[i], Catch::Matchers::WithinAbs(a[i], 1e-6));
  }
}

TEST_CASE("project_pairs produces labelled rows for selected pairs") {
  nlohmann::json j = small_run_json();
  j["tsne"] = {{"perplexity", 4.0}, {"iterations", 60}, {"space", "m1"}};
  RunConfig config = parse_run_config(j);
  EvalArtifacts art = run_eval(config);
  REQUIRE(art.selection.selected.size() >= 2);
  std::vector<SpeakerPair> scope = {art.selection.selected[0],
                                    art.selection.selected[1]};
  auto rows = project_pairs(config, art.dataset, art.morphs, scope);
  // 2 pairs x (2 speakers x 3 test utterances + 4 morphs)
  CHECK(rows.size() == 2 * (2 * 3 + 4));
  std::set<std::string> labels;
  for (const auto &r : rows) labels.insert(r.label);
  // six label groups: A, B, C, D, AB-morph, CD-morph
  CHECK(labels.size() == 6);
  const std::string ab_label = scope[0].speaker_a + "+" + scope[0].speaker_b + "-morph";
  CHECK(labels.count(ab_label) == 1);

  // one pair alone gives three label groups
  auto one = project_pairs(config, art.dataset, art.morphs, {scope[0]});
  std::set<std::string> one_labels;
  for (const auto &r : one) one_labels.insert(r.label);
  CHECK(one_labels.size() == 3);
}
