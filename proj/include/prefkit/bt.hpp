#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "prefkit/errors.hpp"
#include "prefkit/io.hpp"
#include "prefkit/pairs.hpp"
#include "prefkit/rng.hpp"
#include "prefkit/text.hpp"

namespace prefkit {

// Sparse feature vector: (index, signed count), sorted by index, indices unique.
using SparseVec = std::vector<std::pair<uint32_t, double>>;

inline double sparse_dot(const std::vector<double>& w, const SparseVec& f) {
  double s = 0.0;
  for (const auto& [i, v] : f) s += w[i] * v;
  return s;
}

struct Featurizer {
  uint64_t hash_dimension = 1ull << 18;  // must be a power of two
  bool use_unigrams = true;
  bool use_bigrams = true;
  uint64_t hash_seed = 0;

  void validate() const {
    if (hash_dimension == 0 || (hash_dimension & (hash_dimension - 1)) != 0)
      throw ConfigError("hash_dimension must be a power of two");
    if (!use_unigrams && !use_bigrams)
      throw ConfigError("ngram_orders must include 1 or 2");
  }

  // Signed hashing: low bits pick the slot, bit 63 picks the sign.
  void add(SparseVec& out, std::string_view key, uint64_t ns) const {
    uint64_t h = fnv1a64(key, hash_combine(hash_seed, ns));
    uint32_t idx = static_cast<uint32_t>(h & (hash_dimension - 1));
    double sign = (h >> 63) ? -1.0 : 1.0;
    out.emplace_back(idx, sign);
  }

  // Response unigrams + bigrams, prompt unigrams in their own namespace.
  SparseVec featurize(std::string_view prompt, std::string_view response) const {
    SparseVec out;
    auto rtoks = tokenize(response);
    if (use_unigrams)
      for (auto t : rtoks) add(out, t, 1);
    if (use_bigrams)
      for (size_t i = 0; i + 1 < rtoks.size(); ++i) {
        std::string key(rtoks[i]);
        key += '\x1f';
        key += rtoks[i + 1];
        add(out, key, 2);
      }
    for (auto t : tokenize(prompt)) add(out, t, 3);
    std::sort(out.begin(), out.end());
    SparseVec merged;
    for (const auto& [i, v] : out) {
      if (!merged.empty() && merged.back().first == i) merged.back().second += v;
      else merged.emplace_back(i, v);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const auto& e) { return e.second == 0.0; }),
                 merged.end());
    return merged;
  }
};

// phi_chosen - phi_rejected, the only quantity BT training needs per pair.
inline SparseVec sparse_delta(const SparseVec& a, const SparseVec& b) {
  SparseVec out;
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.emplace_back(b[j].first, -b[j].second);
      ++j;
    } else {
      double v = a[i].second - b[j].second;
      if (v != 0.0) out.emplace_back(a[i].first, v);
      ++i;
      ++j;
    }
  }
  return out;
}

struct BTModel {
  Featurizer feat;
  std::vector<double> weights;
  std::vector<double> adam_m, adam_v;
  int64_t steps_taken = 0;

  static BTModel zero(const Featurizer& f) {
    f.validate();
    BTModel m;
    m.feat = f;
    m.weights.assign(f.hash_dimension, 0.0);
    return m;
  }

  double reward(std::string_view prompt, std::string_view response) const {
    return sparse_dot(weights, feat.featurize(prompt, response));
  }
};

// Numerically stable sigmoid(s0 - s1).
inline double bt_probability(double score_0, double score_1) {
  double d = score_0 - score_1;
  if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
  double e = std::exp(d);
  return e / (1.0 + e);
}

// -log sigmoid(x) without overflow on either tail.
inline double nll_of_margin(double x) {
  if (x >= 0.0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

// Mean BT loss over (diff, label) observations; label 1 means the first
// response (chosen) is preferred, so its margin enters as +diff.
inline double bt_loss(const std::vector<std::pair<double, int>>& diff_labels) {
  if (diff_labels.empty()) throw DataError("bt_loss: empty input");
  double total = 0.0;
  for (const auto& [d, y] : diff_labels) total += nll_of_margin(y == 1 ? d : -d);
  return total / static_cast<double>(diff_labels.size());
}

// Featurized training pair; label is implicitly "chosen preferred".
struct TrainPair {
  SparseVec delta;  // phi_chosen - phi_rejected
};

inline TrainPair featurize_pair(const Featurizer& f, const PreferencePair& p) {
  return {sparse_delta(f.featurize(p.prompt, p.chosen), f.featurize(p.prompt, p.rejected))};
}

// Gradient of mean BT loss w.r.t. weights: per pair (sigmoid(d) - 1) * delta.
inline std::vector<double> bt_gradient(const BTModel& model, const std::vector<TrainPair>& batch) {
  if (batch.empty()) throw DataError("bt_gradient: empty batch");
  std::vector<double> grad(model.weights.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& tp : batch) {
    double d = sparse_dot(model.weights, tp.delta);
    double coef = (bt_probability(d, 0.0) - 1.0) * scale;
    for (const auto& [i, v] : tp.delta) grad[i] += coef * v;
  }
  return grad;
}

inline double batch_loss(const BTModel& model, const std::vector<TrainPair>& batch) {
  double total = 0.0;
  for (const auto& tp : batch) total += nll_of_margin(sparse_dot(model.weights, tp.delta));
  return total / static_cast<double>(batch.size());
}

struct TrainConfig {
  // Desk-scale defaults for the hashed linear model.  The neural-regime
  // reference surface (lr 3e-6, batch 10K, warmup 0.1, decay 0.1, single
  // epoch) is far off-scale for a linear model and kept only as commentary.
  double learning_rate = 0.05;
  int64_t batch_size = 256;
  double warmup_ratio = 0.1;
  double weight_decay = 1e-5;
  int64_t max_samples = std::numeric_limits<int64_t>::max();
  int64_t eval_every = 10;  // in optimizer steps
  uint64_t seed = 1;
  Featurizer feat;

  void validate() const {
    if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (warmup_ratio < 0.0 || warmup_ratio > 1.0)
      throw ConfigError("warmup_ratio must be in [0,1]");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (max_samples < 1) throw ConfigError("max_samples must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    feat.validate();
  }
};

struct CurvePoint {
  int64_t samples_seen = 0;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double valid_loss = std::numeric_limits<double>::quiet_NaN();
};

struct LossCurve {
  std::vector<CurvePoint> points;
};

using EvalHook = std::function<void(const BTModel&, int64_t samples_seen)>;

inline double eval_loss_on(const BTModel& model, const std::vector<TrainPair>& pairs) {
  if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
  return batch_loss(model, pairs);
}

// Single-epoch AdamW-style loop: every pair contributes to at most one
// gradient step; linear warmup over warmup_ratio of total steps, then a
// constant rate; decoupled weight decay.  Bit-deterministic under (seed,
// config): sample order comes from a seeded shuffle and all reductions run
// in fixed order.
inline std::pair<BTModel, LossCurve> train(const std::vector<PreferencePair>& pairs,
                                           const TrainConfig& cfg,
                                           const std::vector<PreferencePair>* valid = nullptr,
                                           const EvalHook& hook = {}) {
  cfg.validate();
  if (static_cast<int64_t>(pairs.size()) < cfg.batch_size)
    throw DataError("train: need at least batch_size pairs");

  BTModel model = BTModel::zero(cfg.feat);
  std::vector<TrainPair> featurized;
  featurized.reserve(pairs.size());
  for (const auto& p : pairs) featurized.push_back(featurize_pair(cfg.feat, p));
  std::vector<TrainPair> valid_feat;
  if (valid)
    for (const auto& p : *valid) valid_feat.push_back(featurize_pair(cfg.feat, p));

  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = Rng::keyed(cfg.seed, "train.order");
  rng.shuffle(order);

  const int64_t total = std::min<int64_t>(static_cast<int64_t>(pairs.size()), cfg.max_samples);
  const int64_t total_steps = (total + cfg.batch_size - 1) / cfg.batch_size;
  const int64_t warmup_steps =
      static_cast<int64_t>(std::ceil(cfg.warmup_ratio * static_cast<double>(total_steps)));

  model.adam_m.assign(model.weights.size(), 0.0);
  model.adam_v.assign(model.weights.size(), 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  LossCurve curve;
  double loss_accum = 0.0;
  int64_t loss_batches = 0;
  int64_t samples_seen = 0;

  std::vector<TrainPair> batch;
  std::map<uint32_t, double> grad;
  for (int64_t step = 0; step < total_steps; ++step) {
    const int64_t begin = step * cfg.batch_size;
    const int64_t end = std::min(total, begin + cfg.batch_size);
    batch.clear();
    for (int64_t k = begin; k < end; ++k) batch.push_back(featurized[order[k]]);

    loss_accum += batch_loss(model, batch);
    ++loss_batches;

    grad.clear();
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const auto& tp : batch) {
      double d = sparse_dot(model.weights, tp.delta);
      double coef = (bt_probability(d, 0.0) - 1.0) * scale;
      for (const auto& [i, v] : tp.delta) grad[i] += coef * v;
    }

    double lr = cfg.learning_rate;
    if (warmup_steps > 0 && step < warmup_steps)
      lr *= static_cast<double>(step + 1) / static_cast<double>(warmup_steps);

    ++model.steps_taken;
    const double t = static_cast<double>(model.steps_taken);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    // Decay moments everywhere, apply the gradient where it is nonzero.
    for (size_t i = 0; i < model.weights.size(); ++i) {
      model.adam_m[i] *= beta1;
      model.adam_v[i] *= beta2;
    }
    for (const auto& [i, g] : grad) {
      model.adam_m[i] += (1.0 - beta1) * g;
      model.adam_v[i] += (1.0 - beta2) * g * g;
    }
    for (size_t i = 0; i < model.weights.size(); ++i) {
      double mhat = model.adam_m[i] / bc1;
      double vhat = model.adam_v[i] / bc2;
      double upd = mhat / (std::sqrt(vhat) + eps);
      model.weights[i] -= lr * (upd + cfg.weight_decay * model.weights[i]);
    }

    samples_seen += end - begin;
    const bool at_eval = ((step + 1) % cfg.eval_every == 0) || step + 1 == total_steps;
    if (at_eval) {
      CurvePoint pt;
      pt.samples_seen = samples_seen;
      pt.train_loss = loss_accum / static_cast<double>(loss_batches);
      if (valid) pt.valid_loss = eval_loss_on(model, valid_feat);
      curve.points.push_back(pt);
      loss_accum = 0.0;
      loss_batches = 0;
      if (hook) hook(model, samples_seen);
    }
  }
  return {std::move(model), std::move(curve)};
}

struct ScoreRecord {
  std::string pair_id;
  double score_chosen = 0.0;
  double score_rejected = 0.0;
};

// Pure per-pair map; with threads > 1 each worker fills a disjoint index
// block, so output order and content are identical to the sequential run.
inline std::vector<ScoreRecord> score_pairs(const BTModel& model,
                                            const std::vector<PreferencePair>& pairs,
                                            int threads = 1) {
  std::vector<ScoreRecord> out(pairs.size());
  auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i)
      out[i] = {pairs[i].pair_id, model.reward(pairs[i].prompt, pairs[i].chosen),
                model.reward(pairs[i].prompt, pairs[i].rejected)};
  };
  if (threads <= 1 || pairs.size() < 2) {
    work(0, pairs.size());
    return out;
  }
  size_t n = pairs.size();
  size_t t = std::min<size_t>(static_cast<size_t>(threads), n);
  std::vector<std::thread> pool;
  for (size_t k = 0; k < t; ++k)
    pool.emplace_back(work, n * k / t, n * (k + 1) / t);
  for (auto& th : pool) th.join();
  return out;
}

inline void serialize_scores(const std::vector<ScoreRecord>& scores, std::ostream& out) {
  for (const auto& s : scores) {
    json obj;
    obj["pair_id"] = s.pair_id;
    obj["score_chosen"] = s.score_chosen;
    obj["score_rejected"] = s.score_rejected;
    out << obj.dump() << "\n";
  }
}

inline void write_curve_csv(const LossCurve& curve, std::ostream& out) {
  out << "samples_seen,train_loss,valid_loss\n";
  for (const auto& pt : curve.points) {
    out << pt.samples_seen << "," << fmt_double(pt.train_loss) << ",";
    if (!std::isnan(pt.valid_loss)) out << fmt_double(pt.valid_loss);
    out << "\n";
  }
}

constexpr int kCheckpointVersion = 1;

// Sparse JSON checkpoint: only nonzero weights are stored.
inline void save_checkpoint(const BTModel& model, const std::string& path) {
  json obj;
  obj["format_version"] = kCheckpointVersion;
  obj["kind"] = "prefkit-btmodel";
  obj["hash_dimension"] = model.feat.hash_dimension;
  json orders = json::array();
  if (model.feat.use_unigrams) orders.push_back(1);
  if (model.feat.use_bigrams) orders.push_back(2);
  obj["ngram_orders"] = orders;
  obj["hash_seed"] = model.feat.hash_seed;
  obj["steps_taken"] = model.steps_taken;
  json w = json::array();
  for (size_t i = 0; i < model.weights.size(); ++i)
    if (model.weights[i] != 0.0) w.push_back(json::array({i, model.weights[i]}));
  obj["weights"] = std::move(w);
  auto out = open_output(path);
  out << obj.dump() << "\n";
  if (!out.good()) throw IoError("writing checkpoint failed: " + path);
}

inline BTModel load_checkpoint(const std::string& path) {
  json obj = json::parse(read_file(path), nullptr, false);
  if (obj.is_discarded()) throw DataError("checkpoint is not valid JSON: " + path);
  if (!obj.contains("kind") || obj["kind"] != "prefkit-btmodel")
    throw DataError("not a model checkpoint: " + path);
  if (!obj.contains("format_version") || obj["format_version"].get<int>() != kCheckpointVersion)
    throw DataError("unsupported checkpoint version in " + path);
  Featurizer f;
  f.hash_dimension = obj["hash_dimension"].get<uint64_t>();
  f.hash_seed = obj["hash_seed"].get<uint64_t>();
  f.use_unigrams = f.use_bigrams = false;
  for (const auto& o : obj["ngram_orders"]) {
    if (o.get<int>() == 1) f.use_unigrams = true;
    else if (o.get<int>() == 2) f.use_bigrams = true;
    else throw DataError("bad ngram order in checkpoint");
  }
  BTModel model = BTModel::zero(f);
  model.steps_taken = obj["steps_taken"].get<int64_t>();
  for (const auto& e : obj["weights"]) {
    size_t i = e.at(0).get<size_t>();
    if (i >= model.weights.size()) throw DataError("weight index out of range in checkpoint");
    model.weights[i] = e.at(1).get<double>();
  }
  return model;
}

}  // namespace prefkit
