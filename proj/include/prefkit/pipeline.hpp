#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "prefkit/analysis.hpp"
#include "prefkit/bt.hpp"
#include "prefkit/errors.hpp"
#include "prefkit/eval.hpp"
#include "prefkit/forum.hpp"
#include "prefkit/io.hpp"
#include "prefkit/pairs.hpp"
#include "prefkit/style.hpp"
#include "prefkit/toml.hpp"
#include "prefkit/version.hpp"

namespace prefkit {

// ---------------------------------------------------------------- curves csv

struct CurveRow {
  std::string model;
  std::string dataset;
  int64_t samples_seen = 0;
  std::string mode;  // raw | alpha_only | full
  double loss = 0.0;
  double accuracy = 0.0;
};

inline const char* kCurvesHeader = "model,dataset,samples_seen,mode,loss,accuracy";

inline std::vector<CurveRow> parse_curves_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  std::vector<CurveRow> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = csv_split(line);
    if (cells.size() != 6)
      throw DataError("curves csv: expected 6 columns at line " + std::to_string(lineno));
    CurveRow r;
    r.model = cells[0];
    r.dataset = cells[1];
    r.mode = cells[3];
    try {
      r.samples_seen = std::stoll(cells[2]);
      r.loss = std::stod(cells[4]);
      r.accuracy = std::stod(cells[5]);
    } catch (const std::exception&) {
      throw DataError("curves csv: bad number at line " + std::to_string(lineno));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void append_curve_rows(const std::string& path, const std::vector<CurveRow>& rows) {
  bool need_header =
      !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out.is_open()) throw IoError("cannot open for appending: " + path);
  if (need_header) out << kCurvesHeader << "\n";
  for (const auto& r : rows) {
    out << csv_escape(r.model) << "," << csv_escape(r.dataset) << "," << r.samples_seen << ","
        << r.mode << "," << fmt_double(r.loss) << "," << fmt_double(r.accuracy) << "\n";
  }
  if (!out.good()) throw IoError("append failed: " + path);
}

// Tidy long-format rows for external plotting, one per metric, with a log2
// scale column ready for the log-x axes.
inline std::string emit_plot_data(const std::vector<CurveRow>& rows) {
  std::string out = "model,dataset,samples_seen,log2_samples_seen,mode,metric,value\n";
  for (const auto& r : rows) {
    std::string prefix = csv_escape(r.model) + "," + csv_escape(r.dataset) + "," +
                         std::to_string(r.samples_seen) + ",";
    prefix += r.samples_seen > 0 ? fmt_double(std::log2(static_cast<double>(r.samples_seen)))
                                 : std::string();
    prefix += "," + r.mode + ",";
    out += prefix + "loss," + fmt_double(r.loss) + "\n";
    out += prefix + "accuracy," + fmt_double(r.accuracy) + "\n";
  }
  return out;
}

// Reads losscurve.csv back (samples_seen,train_loss,valid_loss; valid may be
// blank when training ran without a validation set).
inline LossCurve parse_losscurve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("losscurve csv: missing header");
  LossCurve curve;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = csv_split(line);
    if (cells.size() != 3)
      throw DataError("losscurve csv: expected 3 columns at line " + std::to_string(lineno));
    CurvePoint pt;
    try {
      pt.samples_seen = std::stoll(cells[0]);
      pt.train_loss = std::stod(cells[1]);
      if (!cells[2].empty()) pt.valid_loss = std::stod(cells[2]);
    } catch (const std::exception&) {
      throw DataError("losscurve csv: bad number at line " + std::to_string(lineno));
    }
    curve.points.push_back(pt);
  }
  return curve;
}

// ---------------------------------------------------------------- run config

struct RunConfig {
  uint64_t seed = 1;
  std::string out_dir;
  std::string ingest_format = "jsonl";
  std::string ingest_input;
  int64_t pairs_per_post = 2;
  double holdout_fraction = 0.2;
  TrainConfig train;
  std::string analyze_orient = "hash";  // hash | file
};

inline uint64_t stage_seed(uint64_t global_seed, std::string_view stage) {
  return hash_combine(mix64(global_seed), fnv1a64(stage));
}

inline RunConfig parse_run_config(const TomlDoc& doc) {
  static const std::set<std::string> allowed = {
      "seed",
      "out_dir",
      "ingest.format",
      "ingest.input",
      "pairs.pairs_per_post",
      "pairs.holdout_fraction",
      "train.learning_rate",
      "train.batch_size",
      "train.warmup_ratio",
      "train.weight_decay",
      "train.max_samples",
      "train.eval_every",
      "train.hash_dimension",
      "train.hash_seed",
      "train.use_unigrams",
      "train.use_bigrams",
      "analyze.orient",
  };
  for (const auto& [key, _] : doc.values)
    if (!allowed.count(key)) throw ConfigError("unknown config key: " + key);

  RunConfig cfg;
  cfg.seed = static_cast<uint64_t>(doc.get_int_or("seed", 1));
  cfg.out_dir = doc.get_string("out_dir");
  cfg.ingest_format = doc.get_string_or("ingest.format", "jsonl");
  cfg.ingest_input = doc.get_string("ingest.input");
  cfg.pairs_per_post = doc.get_int_or("pairs.pairs_per_post", 2);
  cfg.holdout_fraction = doc.get_double_or("pairs.holdout_fraction", 0.2);
  cfg.train.learning_rate = doc.get_double_or("train.learning_rate", cfg.train.learning_rate);
  cfg.train.batch_size = doc.get_int_or("train.batch_size", cfg.train.batch_size);
  cfg.train.warmup_ratio = doc.get_double_or("train.warmup_ratio", cfg.train.warmup_ratio);
  cfg.train.weight_decay = doc.get_double_or("train.weight_decay", cfg.train.weight_decay);
  cfg.train.max_samples = doc.get_int_or("train.max_samples", cfg.train.max_samples);
  cfg.train.eval_every = doc.get_int_or("train.eval_every", cfg.train.eval_every);
  cfg.train.feat.hash_dimension = static_cast<uint64_t>(
      doc.get_int_or("train.hash_dimension", static_cast<int64_t>(cfg.train.feat.hash_dimension)));
  cfg.train.feat.hash_seed =
      static_cast<uint64_t>(doc.get_int_or("train.hash_seed", 0));
  cfg.train.feat.use_unigrams = doc.get_bool_or("train.use_unigrams", true);
  cfg.train.feat.use_bigrams = doc.get_bool_or("train.use_bigrams", true);
  cfg.analyze_orient = doc.get_string_or("analyze.orient", "hash");
  if (cfg.analyze_orient != "hash" && cfg.analyze_orient != "file")
    throw ConfigError("analyze.orient must be 'hash' or 'file'");
  if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0))
    throw ConfigError("pairs.holdout_fraction must be in (0,1)");
  if (cfg.pairs_per_post < 1) throw ConfigError("pairs.pairs_per_post must be >= 1");
  cfg.train.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  return parse_run_config(parse_toml(read_file(path)));
}

// Flat config for the standalone train subcommand (same knobs as the [train]
// table of a run config, plus the seed).
inline TrainConfig parse_train_config(const TomlDoc& doc) {
  static const std::set<std::string> allowed = {
      "learning_rate", "batch_size",     "warmup_ratio", "weight_decay",
      "max_samples",   "eval_every",     "seed",         "hash_dimension",
      "hash_seed",     "use_unigrams",   "use_bigrams",
  };
  for (const auto& [key, _] : doc.values)
    if (!allowed.count(key)) throw ConfigError("unknown config key: " + key);
  TrainConfig cfg;
  cfg.learning_rate = doc.get_double_or("learning_rate", cfg.learning_rate);
  cfg.batch_size = doc.get_int_or("batch_size", cfg.batch_size);
  cfg.warmup_ratio = doc.get_double_or("warmup_ratio", cfg.warmup_ratio);
  cfg.weight_decay = doc.get_double_or("weight_decay", cfg.weight_decay);
  cfg.max_samples = doc.get_int_or("max_samples", cfg.max_samples);
  cfg.eval_every = doc.get_int_or("eval_every", cfg.eval_every);
  cfg.seed = static_cast<uint64_t>(doc.get_int_or("seed", 1));
  cfg.feat.hash_dimension = static_cast<uint64_t>(
      doc.get_int_or("hash_dimension", static_cast<int64_t>(cfg.feat.hash_dimension)));
  cfg.feat.hash_seed = static_cast<uint64_t>(doc.get_int_or("hash_seed", 0));
  cfg.feat.use_unigrams = doc.get_bool_or("use_unigrams", true);
  cfg.feat.use_bigrams = doc.get_bool_or("use_bigrams", true);
  cfg.validate();
  return cfg;
}

// -------------------------------------------------------------- run pipeline

// Executes ingest -> pairs -> style -> train -> score -> eval -> analyze and
// writes manifest.json recording a checksum per produced artifact.  All
// randomness derives from the global seed via stage-keyed streams, so rerun
// manifests are byte-identical.  A stage failure still writes the manifest,
// marked as partial, before the error propagates.
inline json run_pipeline(const RunConfig& cfg, const std::string& config_text) {
  namespace fs = std::filesystem;
  if (!fs::exists(cfg.ingest_input))
    throw ConfigError("ingest input does not exist: " + cfg.ingest_input);

  char cfg_sum[17];
  std::snprintf(cfg_sum, sizeof cfg_sum, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_text)));

  json manifest;
  manifest["format_version"] = kManifestVersion;
  manifest["tool"] = kToolName;
  manifest["tool_version"] = kToolVersion;
  manifest["config_checksum"] = cfg_sum;
  manifest["completed"] = false;
  manifest["stages"] = json::array();

  auto out_path = [&](const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
  };
  auto record_stage = [&](const std::string& name, const std::vector<std::string>& files) {
    json stage;
    stage["name"] = name;
    json outputs;
    for (const auto& f : files) outputs[f] = file_checksum(out_path(f));
    stage["outputs"] = std::move(outputs);
    manifest["stages"].push_back(std::move(stage));
  };
  auto write_manifest = [&] {
    auto out = open_output(out_path("manifest.json"));
    out << manifest.dump(2) << "\n";
  };

  std::string current_stage = "ingest";
  try {
    // ingest
    auto in = open_input(cfg.ingest_input);
    ParseResult parsed = parse_dump(in, cfg.ingest_format);
    {
      auto out = open_output(out_path("posts.jsonl"));
      serialize_posts(parsed.posts, out);
    }
    write_file(out_path("stats.csv"), corpus_stats_csv(parsed.posts));
    record_stage("ingest", {"posts.jsonl", "stats.csv"});

    // pairs
    current_stage = "pairs";
    auto all_pairs =
        build_pairs(parsed.posts, cfg.pairs_per_post, stage_seed(cfg.seed, "build_pairs"));
    {
      auto out = open_output(out_path("pairs.jsonl"));
      serialize_pairs(all_pairs, out);
    }
    SplitResult split = split_pairs(all_pairs, cfg.holdout_fraction, stage_seed(cfg.seed, "split"));
    {
      auto out = open_output(out_path("train.jsonl"));
      serialize_pairs(split.train, out);
    }
    {
      auto out = open_output(out_path("valid.jsonl"));
      serialize_pairs(split.validation, out);
    }
    record_stage("pairs", {"pairs.jsonl", "train.jsonl", "valid.jsonl"});

    // style (on the evaluation set)
    current_stage = "style";
    std::vector<std::array<double, kStyleDim>> raw_diffs;
    raw_diffs.reserve(split.validation.size());
    for (const auto& p : split.validation)
      raw_diffs.push_back(style_diff(extract_style(p.chosen), extract_style(p.rejected)));
    auto std_diffs = standardize(raw_diffs);
    std::vector<StyleRow> style_rows;
    for (size_t i = 0; i < split.validation.size(); ++i)
      style_rows.push_back({split.validation[i].pair_id, {raw_diffs[i], std_diffs[i]}});
    {
      auto out = open_output(out_path("style.csv"));
      write_style_csv(style_rows, out);
    }
    record_stage("style", {"style.csv"});

    // train
    current_stage = "train";
    TrainConfig tcfg = cfg.train;
    tcfg.seed = stage_seed(cfg.seed, "train");
    auto [model, curve] = train(split.train, tcfg, &split.validation);
    save_checkpoint(model, out_path("model.ckpt"));
    {
      auto out = open_output(out_path("losscurve.csv"));
      write_curve_csv(curve, out);
    }
    record_stage("train", {"model.ckpt", "losscurve.csv"});

    // score
    current_stage = "score";
    auto scores = score_pairs(model, split.validation);
    {
      auto out = open_output(out_path("scores.jsonl"));
      serialize_scores(scores, out);
    }
    record_stage("score", {"scores.jsonl"});

    // eval
    current_stage = "eval";
    std::vector<ScoredPair> scored;
    for (size_t i = 0; i < split.validation.size(); ++i) {
      ScoredPair sp;
      sp.pair_id = split.validation[i].pair_id;
      sp.diff = scores[i].score_chosen - scores[i].score_rejected;
      sp.label = 1;
      sp.style = std_diffs[i];
      scored.push_back(std::move(sp));
    }
    EvalReport rep = eval_report(scored);
    write_file(out_path("report.json"), report_to_json(rep).dump(2) + "\n");
    int64_t samples_seen = curve.points.empty() ? 0 : curve.points.back().samples_seen;
    {
      std::string curves = out_path("curves.csv");
      std::error_code ec;
      fs::remove(curves, ec);  // pipeline output is rebuilt, not appended to
      append_curve_rows(curves,
                        {{"model.ckpt", "validation", samples_seen, "raw", rep.raw_loss,
                          rep.raw_accuracy},
                         {"model.ckpt", "validation", samples_seen, "alpha_only",
                          rep.alpha_only_loss, rep.alpha_only_accuracy},
                         {"model.ckpt", "validation", samples_seen, "full", rep.controlled_loss,
                          rep.controlled_accuracy}});
    }
    record_stage("eval", {"report.json", "curves.csv"});

    // analyze
    current_stage = "analyze";
    ScoreMap score_map;
    for (const auto& s : scores) score_map[s.pair_id] = {s.score_chosen, s.score_rejected};
    auto aps = make_analysis_pairs(split.validation, score_map, cfg.analyze_orient == "hash",
                                   stage_seed(cfg.seed, "analyze"));
    json analysis;
    analysis["phi"] = {{"length", style_correlation_to_json(
                                      style_correlation(aps, StyleFeature::length))},
                       {"markdown", style_correlation_to_json(
                                        style_correlation(aps, StyleFeature::markdown))}};
    analysis["length_split"] = length_split_to_json(length_split_eval(aps));
    analysis["buckets"] = bucket_rows_to_json(bucket_eval(aps));
    std::vector<std::pair<double, double>> fit_points;
    for (const auto& pt : curve.points) {
      double loss = std::isnan(pt.valid_loss) ? pt.train_loss : pt.valid_loss;
      if (loss > 0.0) fit_points.emplace_back(static_cast<double>(pt.samples_seen), loss);
    }
    if (fit_points.size() >= 4)
      analysis["scaling"] = scaling_to_json(fit_power_law(fit_points));
    else
      analysis["scaling"] = nullptr;
    write_file(out_path("analysis.json"), analysis.dump(2) + "\n");
    record_stage("analyze", {"analysis.json"});

    manifest["completed"] = true;
    write_manifest();
  } catch (...) {
    manifest["failed_stage"] = current_stage;
    write_manifest();
    throw;
  }
  return manifest;
}

}  // namespace prefkit
