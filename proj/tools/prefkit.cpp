// prefkit command-line front end: forum ingestion, preference pairs, BT
// training/scoring, style-controlled evaluation, bias analytics, BoN.

#include <cstdio>
#include <iostream>
#include <unordered_map>

#include <CLI11.hpp>

#include "prefkit/prefkit.hpp"

using namespace prefkit;

namespace {

void cmd_ingest(const std::string& format, const std::string& in_path,
                const std::string& out_path, const std::string& stats_path) {
  auto in = open_input(in_path);
  ParseResult res = parse_dump(in, format);
  auto out = open_output(out_path);
  serialize_posts(res.posts, out);
  if (!stats_path.empty()) write_file(stats_path, corpus_stats_csv(res.posts));
  std::cout << "parsed " << res.posts.size() << " posts, skipped " << res.skipped << " of "
            << res.records << " records\n";
}

void cmd_build_pairs(const std::string& in_path, const std::string& out_path,
                     int64_t pairs_per_post, uint64_t seed, double holdout,
                     const std::string& train_out, const std::string& valid_out) {
  auto in = open_input(in_path);
  ParseResult res = parse_jsonl_posts(in);
  if (res.skipped > 0)
    throw DataError("posts file has " + std::to_string(res.skipped) + " malformed records");
  auto pairs = build_pairs(res.posts, pairs_per_post, seed);
  {
    auto out = open_output(out_path);
    serialize_pairs(pairs, out);
  }
  std::cout << "built " << pairs.size() << " pairs from " << res.posts.size() << " posts\n";
  if (holdout > 0.0) {
    if (train_out.empty() || valid_out.empty())
      throw ConfigError("--holdout needs --train-out and --valid-out");
    SplitResult sr = split_pairs(pairs, holdout, seed);
    auto t = open_output(train_out);
    serialize_pairs(sr.train, t);
    auto v = open_output(valid_out);
    serialize_pairs(sr.validation, v);
    std::cout << "split " << sr.train.size() << " train / " << sr.validation.size()
              << " validation\n";
  }
}

void cmd_style(const std::string& pairs_path, const std::string& out_path) {
  auto pairs = load_pairs(pairs_path);
  std::vector<std::array<double, kStyleDim>> raw;
  raw.reserve(pairs.size());
  for (const auto& p : pairs)
    raw.push_back(style_diff(extract_style(p.chosen), extract_style(p.rejected)));
  auto std_diffs = standardize(raw);
  std::vector<StyleRow> rows;
  for (size_t i = 0; i < pairs.size(); ++i)
    rows.push_back({pairs[i].pair_id, {raw[i], std_diffs[i]}});
  auto out = open_output(out_path);
  write_style_csv(rows, out);
  std::cout << "wrote style diffs for " << rows.size() << " pairs\n";
}

void cmd_train(const std::string& pairs_path, const std::string& valid_path,
               const std::string& config_path, const std::string& model_out,
               const std::string& curve_out) {
  TrainConfig cfg;
  if (!config_path.empty()) cfg = parse_train_config(parse_toml(read_file(config_path)));
  auto pairs = load_pairs(pairs_path);
  std::vector<PreferencePair> valid;
  if (!valid_path.empty()) valid = load_pairs(valid_path);
  auto [model, curve] = train(pairs, cfg, valid_path.empty() ? nullptr : &valid);
  save_checkpoint(model, model_out);
  if (!curve_out.empty()) {
    auto out = open_output(curve_out);
    write_curve_csv(curve, out);
  }
  if (!curve.points.empty()) {
    const auto& last = curve.points.back();
    std::cout << "trained " << model.steps_taken << " steps, final train loss "
              << fmt_double(last.train_loss);
    if (!std::isnan(last.valid_loss))
      std::cout << ", valid loss " << fmt_double(last.valid_loss);
    std::cout << "\n";
  }
}

void cmd_score(const std::string& model_path, const std::string& pairs_path,
               const std::string& candidates_path, const std::string& out_path) {
  BTModel model = load_checkpoint(model_path);
  if (!pairs_path.empty()) {
    auto pairs = load_pairs(pairs_path);
    auto scores = score_pairs(model, pairs, default_thread_count());
    auto out = open_output(out_path);
    serialize_scores(scores, out);
    std::cout << "scored " << scores.size() << " pairs\n";
  } else {
    auto in = open_input(candidates_path);
    auto sets = parse_candidates(in);
    std::vector<CandidateScore> scores;
    for (const auto& set : sets)
      for (const auto& c : set.candidates)
        scores.push_back({set.prompt_id, c.candidate_id, model.reward(set.prompt, c.body)});
    auto out = open_output(out_path);
    serialize_candidate_scores(scores, out);
    std::cout << "scored " << scores.size() << " candidates in " << sets.size() << " sets\n";
  }
}

std::vector<ScoredPair> join_scored_pairs(const std::string& pairs_path,
                                          const std::string& scores_path,
                                          const std::string& style_path) {
  auto pairs = load_pairs(pairs_path);
  auto scores = load_scores(scores_path);
  std::unordered_map<std::string, StyleDiff> style;
  if (!style_path.empty()) {
    auto in = open_input(style_path);
    for (auto& row : parse_style_csv(in)) style[row.pair_id] = row.diff;
  }
  std::vector<ScoredPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto it = scores.find(p.pair_id);
    if (it == scores.end()) throw DataError("no score for pair " + p.pair_id);
    ScoredPair sp;
    sp.pair_id = p.pair_id;
    sp.diff = it->second.score_chosen - it->second.score_rejected;
    sp.label = 1;
    if (!style_path.empty()) {
      auto st = style.find(p.pair_id);
      if (st == style.end()) throw DataError("no style row for pair " + p.pair_id);
      sp.style = st->second.standardized;
    }
    out.push_back(std::move(sp));
  }
  return out;
}

void cmd_eval(const std::string& pairs_path, const std::string& scores_path,
              const std::string& style_path, const std::string& mode,
              const std::string& out_path, const std::string& csv_path,
              const std::string& model_name, const std::string& dataset_name,
              int64_t samples_seen) {
  bool want_alpha = mode == "alpha" || mode == "all";
  bool want_full = mode == "full" || mode == "all";
  if ((want_alpha || want_full) && style_path.empty())
    throw ConfigError("--style is required for alpha/full/all modes");
  auto scored = join_scored_pairs(pairs_path, scores_path, style_path);

  json report;
  std::vector<CurveRow> rows;
  report["n_pairs"] = scored.size();
  EvalResult raw = raw_eval(scored);
  report["raw_loss"] = raw.loss;
  report["raw_accuracy"] = raw.accuracy;
  rows.push_back({model_name, dataset_name, samples_seen, "raw", raw.loss, raw.accuracy});
  if (want_alpha) {
    StyleControlFit fit = fit_style_control(scored, ControlMode::alpha_only);
    EvalResult res = controlled_eval(scored, fit);
    report["alpha_only_loss"] = res.loss;
    report["alpha_only_accuracy"] = res.accuracy;
    report["alpha_fit"] = fit_to_json(fit);
    rows.push_back({model_name, dataset_name, samples_seen, "alpha_only", res.loss, res.accuracy});
  }
  if (want_full) {
    StyleControlFit fit = fit_style_control(scored, ControlMode::full);
    EvalResult res = controlled_eval(scored, fit);
    report["controlled_loss"] = res.loss;
    report["controlled_accuracy"] = res.accuracy;
    report["fit"] = fit_to_json(fit);
    rows.push_back({model_name, dataset_name, samples_seen, "full", res.loss, res.accuracy});
  }
  report["protocol"] = "style-control coefficients fit on the reported evaluation set";
  write_file(out_path, report.dump(2) + "\n");
  if (!csv_path.empty()) append_curve_rows(csv_path, rows);
  std::cout << "evaluated " << scored.size() << " pairs (" << mode << ")\n";
}

void cmd_filter(const std::string& pairs_path, const std::string& scores_path,
                const std::string& kept_path, const std::string& dropped_path) {
  auto pairs = load_pairs(pairs_path);
  auto scores = load_scores(scores_path);
  FilterResult res = filter_by_scorer(pairs, scores);
  auto k = open_output(kept_path);
  serialize_pairs(res.kept, k);
  auto d = open_output(dropped_path);
  serialize_pairs(res.dropped, d);
  std::cout << "kept " << res.kept.size() << ", dropped " << res.dropped.size() << "\n";
}

void cmd_bon(const std::string& candidates_path, const std::string& scores_path,
             const std::string& out_path, const std::string& advantages_path) {
  auto in = open_input(candidates_path);
  auto sets = parse_candidates(in);
  auto sin = open_input(scores_path);
  apply_candidate_scores(sets, parse_candidate_scores(sin));
  {
    auto out = open_output(out_path);
    for (const auto& set : sets) {
      const Candidate& win = best_of_n(set);
      json obj;
      obj["prompt_id"] = set.prompt_id;
      obj["candidate_id"] = win.candidate_id;
      obj["score"] = win.score;
      obj["token_length"] = token_count(win.body);
      out << obj.dump() << "\n";
    }
  }
  if (!advantages_path.empty()) {
    auto out = open_output(advantages_path);
    for (const auto& set : sets) {
      json obj;
      obj["prompt_id"] = set.prompt_id;
      json arr = json::array();
      if (set.candidates.size() >= 2) {
        std::vector<double> scores;
        for (const auto& c : set.candidates) scores.push_back(c.score);
        auto adv = group_advantage(scores);
        for (size_t i = 0; i < adv.size(); ++i)
          arr.push_back(json{{"candidate_id", set.candidates[i].candidate_id},
                             {"advantage", adv[i]}});
      }
      obj["advantages"] = std::move(arr);
      out << obj.dump() << "\n";
    }
  }
  std::cout << "selected " << sets.size() << " winners, mean selected length "
            << fmt_double(mean_selected_length(sets)) << "\n";
}

void cmd_analyze_phi(const std::string& pairs_path, const std::string& scores_path,
                     const std::string& orient, uint64_t seed, const std::string& out_path) {
  if (orient != "hash" && orient != "file")
    throw ConfigError("--orient must be 'hash' or 'file'");
  auto pairs = load_pairs(pairs_path);
  auto scores = load_scores(scores_path);
  auto aps = make_analysis_pairs(pairs, scores, orient == "hash", seed);
  json out;
  out["phi"] = {
      {"length", style_correlation_to_json(style_correlation(aps, StyleFeature::length))},
      {"markdown", style_correlation_to_json(style_correlation(aps, StyleFeature::markdown))}};
  out["orient"] = orient;
  write_file(out_path, out.dump(2) + "\n");
}

void cmd_analyze_split(const std::string& pairs_path, const std::string& scores_path,
                       const std::string& out_path) {
  auto pairs = load_pairs(pairs_path);
  auto scores = load_scores(scores_path);
  auto aps = make_analysis_pairs(pairs, scores, false);
  json out;
  out["length_split"] = length_split_to_json(length_split_eval(aps));
  write_file(out_path, out.dump(2) + "\n");
}

void cmd_analyze_buckets(const std::string& pairs_path, const std::string& scores_path,
                         const std::string& out_path) {
  auto pairs = load_pairs(pairs_path);
  auto scores = load_scores(scores_path);
  auto aps = make_analysis_pairs(pairs, scores, false);
  json out;
  out["buckets"] = bucket_rows_to_json(bucket_eval(aps));
  write_file(out_path, out.dump(2) + "\n");
}

void cmd_analyze_audit(const std::string& in_path, double threshold,
                       const std::string& out_path) {
  std::vector<std::pair<bool, bool>> obs;
  for_each_jsonl_file(in_path, [&](size_t lineno, const json& obj) {
    if (!obj.contains("correct") || !obj.contains("longer"))
      throw DataError("audit record missing field at line " + std::to_string(lineno));
    obs.emplace_back(obj["correct"].get<bool>(), obj["longer"].get<bool>());
  });
  json out;
  out["audit"] = bias_audit_to_json(bias_audit(obs, threshold));
  out["threshold"] = threshold;
  write_file(out_path, out.dump(2) + "\n");
}

void cmd_analyze_scaling(const std::string& losscurve_path, const std::string& series,
                         const std::string& curves_path, const std::string& mode,
                         const std::string& out_path) {
  std::vector<std::pair<double, double>> points;
  if (!losscurve_path.empty()) {
    auto in = open_input(losscurve_path);
    LossCurve curve = parse_losscurve_csv(in);
    for (const auto& pt : curve.points) {
      double loss = series == "valid" ? pt.valid_loss : pt.train_loss;
      if (std::isnan(loss))
        throw DataError("losscurve has no " + series + " series");
      points.emplace_back(static_cast<double>(pt.samples_seen), loss);
    }
  } else if (!curves_path.empty()) {
    auto in = open_input(curves_path);
    for (const auto& row : parse_curves_csv(in))
      if (row.mode == mode)
        points.emplace_back(static_cast<double>(row.samples_seen), row.loss);
  } else {
    throw ConfigError("scaling needs --losscurve or --curves");
  }
  json out;
  out["scaling"] = scaling_to_json(fit_power_law(points));
  out["n_points"] = points.size();
  write_file(out_path, out.dump(2) + "\n");
}

void cmd_run(const std::string& config_path) {
  std::string text = read_file(config_path);
  RunConfig cfg = parse_run_config(parse_toml(text));
  json manifest = run_pipeline(cfg, text);
  std::cout << "pipeline complete, manifest at "
            << (std::filesystem::path(cfg.out_dir) / "manifest.json").string() << "\n";
}

void cmd_emit_plots(const std::string& curves_path, const std::string& out_path) {
  auto in = open_input(curves_path);
  write_file(out_path, emit_plot_data(parse_curves_csv(in)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prefkit: preference pairs, Bradley-Terry reward models, style and bias analytics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::function<void()> action;

  // ingest
  {
    auto* c = app.add_subcommand("ingest", "Parse a forum dump into canonical posts.jsonl");
    auto fmt = std::make_shared<std::string>("jsonl");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto stats = std::make_shared<std::string>();
    c->add_option("--format", *fmt, "Input format: jsonl or se-xml")->default_val("jsonl");
    c->add_option("--in", *in, "Input dump path")->required();
    c->add_option("--out", *out, "Output posts.jsonl path")->required();
    c->add_option("--stats", *stats, "Optional corpus stats CSV path");
    c->callback([=, &action] { action = [=] { cmd_ingest(*fmt, *in, *out, *stats); }; });
  }

  // build-pairs
  {
    auto* c = app.add_subcommand("build-pairs", "Construct preference pairs from posts");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto ppp = std::make_shared<int64_t>(2);
    auto seed = std::make_shared<uint64_t>(1);
    auto holdout = std::make_shared<double>(0.0);
    auto train_out = std::make_shared<std::string>();
    auto valid_out = std::make_shared<std::string>();
    c->add_option("--in", *in, "posts.jsonl")->required();
    c->add_option("--out", *out, "pairs.jsonl")->required();
    c->add_option("--pairs-per-post", *ppp, "Max pairs sampled per post")->default_val(2);
    c->add_option("--seed", *seed, "Sampling seed")->default_val(1);
    c->add_option("--holdout", *holdout, "Optional validation fraction in (0,1)");
    c->add_option("--train-out", *train_out, "Train split output (with --holdout)");
    c->add_option("--valid-out", *valid_out, "Validation split output (with --holdout)");
    c->callback([=, &action] {
      action = [=] { cmd_build_pairs(*in, *out, *ppp, *seed, *holdout, *train_out, *valid_out); };
    });
  }

  // style
  {
    auto* c = app.add_subcommand("style", "Extract style diffs for pairs into CSV");
    auto pairs = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    c->add_option("--pairs", *pairs, "pairs.jsonl")->required();
    c->add_option("--out", *out, "style.csv output")->required();
    c->callback([=, &action] { action = [=] { cmd_style(*pairs, *out); }; });
  }

  // train
  {
    auto* c = app.add_subcommand("train", "Train a hashed-feature BT reward model");
    auto pairs = std::make_shared<std::string>();
    auto valid = std::make_shared<std::string>();
    auto config = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto curve = std::make_shared<std::string>();
    c->add_option("--pairs", *pairs, "Training pairs.jsonl")->required();
    c->add_option("--valid", *valid, "Optional validation pairs.jsonl");
    c->add_option("--config", *config, "train.toml hyperparameters");
    c->add_option("--out", *out, "Model checkpoint output")->required();
    c->add_option("--curve", *curve, "losscurve.csv output");
    c->callback([=, &action] {
      action = [=] { cmd_train(*pairs, *valid, *config, *out, *curve); };
    });
  }

  // score
  {
    auto* c = app.add_subcommand("score", "Score pairs or candidate sets with a checkpoint");
    auto model = std::make_shared<std::string>();
    auto pairs = std::make_shared<std::string>();
    auto cands = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    c->add_option("--model", *model, "Model checkpoint")->required();
    auto* po = c->add_option("--pairs", *pairs, "pairs.jsonl to score");
    auto* co = c->add_option("--candidates", *cands, "candidates.jsonl to score");
    po->excludes(co);
    c->add_option("--out", *out, "Output scores.jsonl")->required();
    c->callback([=, &action] {
      action = [=] {
        if (pairs->empty() && cands->empty())
          throw ConfigError("score needs --pairs or --candidates");
        cmd_score(*model, *pairs, *cands, *out);
      };
    });
  }

  // eval
  {
    auto* c = app.add_subcommand("eval", "Loss/accuracy in raw and style-controlled modes");
    auto pairs = std::make_shared<std::string>();
    auto scores = std::make_shared<std::string>();
    auto style = std::make_shared<std::string>();
    auto mode = std::make_shared<std::string>("all");
    auto out = std::make_shared<std::string>();
    auto csv = std::make_shared<std::string>();
    auto model_name = std::make_shared<std::string>("model");
    auto dataset_name = std::make_shared<std::string>("dataset");
    auto samples = std::make_shared<int64_t>(0);
    c->add_option("--pairs", *pairs, "pairs.jsonl")->required();
    c->add_option("--scores", *scores, "scores.jsonl")->required();
    c->add_option("--style", *style, "style.csv (needed for alpha/full/all)");
    c->add_option("--mode", *mode, "raw | alpha | full | all")
        ->default_val("all")
        ->check(CLI::IsMember({"raw", "alpha", "full", "all"}));
    c->add_option("--out", *out, "report.json output")->required();
    c->add_option("--append-csv", *csv, "Append curve rows to this CSV");
    c->add_option("--model-name", *model_name, "Model label for curve rows");
    c->add_option("--dataset-name", *dataset_name, "Dataset label for curve rows");
    c->add_option("--samples-seen", *samples, "Training samples behind this checkpoint");
    c->callback([=, &action] {
      action = [=] {
        cmd_eval(*pairs, *scores, *style, *mode, *out, *csv, *model_name, *dataset_name,
                 *samples);
      };
    });
  }

  // analyze
  {
    auto* c = app.add_subcommand("analyze", "Bias and dynamics analytics");
    c->require_subcommand(1);
    {
      auto* s = c->add_subcommand("phi", "Phi correlations of predictions/labels vs style");
      auto pairs = std::make_shared<std::string>();
      auto scores = std::make_shared<std::string>();
      auto orient = std::make_shared<std::string>("hash");
      auto seed = std::make_shared<uint64_t>(0);
      auto out = std::make_shared<std::string>();
      s->add_option("--pairs", *pairs)->required();
      s->add_option("--scores", *scores)->required();
      s->add_option("--orient", *orient, "hash: seeded per-pair orientation; file: as stored")
          ->default_val("hash");
      s->add_option("--seed", *seed, "Orientation seed")->default_val(0);
      s->add_option("--out", *out)->required();
      s->callback([=, &action] {
        action = [=] { cmd_analyze_phi(*pairs, *scores, *orient, *seed, *out); };
      });
    }
    {
      auto* s = c->add_subcommand("split", "Chosen-longer / chosen-shorter accuracy split");
      auto pairs = std::make_shared<std::string>();
      auto scores = std::make_shared<std::string>();
      auto out = std::make_shared<std::string>();
      s->add_option("--pairs", *pairs)->required();
      s->add_option("--scores", *scores)->required();
      s->add_option("--out", *out)->required();
      s->callback(
          [=, &action] { action = [=] { cmd_analyze_split(*pairs, *scores, *out); }; });
    }
    {
      auto* s = c->add_subcommand("buckets", "Per-margin-bucket loss/accuracy");
      auto pairs = std::make_shared<std::string>();
      auto scores = std::make_shared<std::string>();
      auto out = std::make_shared<std::string>();
      s->add_option("--pairs", *pairs)->required();
      s->add_option("--scores", *scores)->required();
      s->add_option("--out", *out)->required();
      s->callback(
          [=, &action] { action = [=] { cmd_analyze_buckets(*pairs, *scores, *out); }; });
    }
    {
      auto* s = c->add_subcommand("audit", "Correctness-vs-length bias audit");
      auto in = std::make_shared<std::string>();
      auto threshold = std::make_shared<double>(0.3);
      auto out = std::make_shared<std::string>();
      s->add_option("--in", *in, "JSONL of {\"correct\": bool, \"longer\": bool}")->required();
      s->add_option("--threshold", *threshold, "|phi| flag threshold")->default_val(0.3);
      s->add_option("--out", *out)->required();
      s->callback([=, &action] {
        action = [=] { cmd_analyze_audit(*in, *threshold, *out); };
      });
    }
    {
      auto* s = c->add_subcommand("scaling", "Power-law fit of loss vs samples");
      auto losscurve = std::make_shared<std::string>();
      auto series = std::make_shared<std::string>("valid");
      auto curves = std::make_shared<std::string>();
      auto mode = std::make_shared<std::string>("raw");
      auto out = std::make_shared<std::string>();
      s->add_option("--losscurve", *losscurve, "losscurve.csv from train");
      s->add_option("--series", *series, "valid | train (with --losscurve)")
          ->check(CLI::IsMember({"valid", "train"}));
      s->add_option("--curves", *curves, "curves.csv from eval --append-csv");
      s->add_option("--mode", *mode, "Row mode filter (with --curves)");
      s->add_option("--out", *out)->required();
      s->callback([=, &action] {
        action = [=] { cmd_analyze_scaling(*losscurve, *series, *curves, *mode, *out); };
      });
    }
  }

  // bon
  {
    auto* c = app.add_subcommand("bon", "Best-of-N selection over scored candidate sets");
    auto cands = std::make_shared<std::string>();
    auto scores = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto adv = std::make_shared<std::string>();
    c->add_option("--candidates", *cands, "candidates.jsonl")->required();
    c->add_option("--scores", *scores, "Per-candidate scores from `score --candidates`")
        ->required();
    c->add_option("--out", *out, "winners.jsonl output")->required();
    c->add_option("--advantages", *adv, "Optional per-group advantage JSONL output");
    c->callback([=, &action] { action = [=] { cmd_bon(*cands, *scores, *out, *adv); }; });
  }

  // filter
  {
    auto* c = app.add_subcommand("filter", "Drop pairs the scorer strictly disagrees with");
    auto pairs = std::make_shared<std::string>();
    auto scores = std::make_shared<std::string>();
    auto kept = std::make_shared<std::string>();
    auto dropped = std::make_shared<std::string>();
    c->add_option("--pairs", *pairs)->required();
    c->add_option("--scores", *scores)->required();
    c->add_option("--kept", *kept)->required();
    c->add_option("--dropped", *dropped)->required();
    c->callback([=, &action] {
      action = [=] { cmd_filter(*pairs, *scores, *kept, *dropped); };
    });
  }

  // run
  {
    auto* c = app.add_subcommand("run", "Run the full pipeline from a TOML config");
    auto config = std::make_shared<std::string>();
    c->add_option("--config", *config, "run.toml")->required();
    c->callback([=, &action] { action = [=] { cmd_run(*config); }; });
  }

  // emit-plots
  {
    auto* c = app.add_subcommand("emit-plots", "Tidy plot CSV from curves.csv");
    auto curves = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    c->add_option("--curves", *curves, "curves.csv")->required();
    c->add_option("--out", *out, "Tidy CSV output")->required();
    c->callback([=, &action] { action = [=] { cmd_emit_plots(*curves, *out); }; });
  }

  try {
    app.parse(argc, argv);
    if (action) action();
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // CLI misuse is a configuration error
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
