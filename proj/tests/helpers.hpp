#pragma once

// Synthetic data generators shared by the unit and acceptance suites.  All
// draw from keyed Rng streams so every dataset is reproducible by seed.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "prefkit/bt.hpp"
#include "prefkit/eval.hpp"
#include "prefkit/pairs.hpp"
#include "prefkit/rng.hpp"

namespace testgen {

using namespace prefkit;

inline std::string join_tokens(const std::vector<std::string>& toks) {
  std::string out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

// ---- planted linear scorer, for learnability checks ------------------------
//
// Responses mix filler tokens with "marker" tokens worth +4 reward each; the
// marker-count gap is at least 2, so the Bayes-optimal pair accuracy is
// sigmoid(8) ~ 0.9997.  Labels are sampled from the planted reward through
// the BT probability, not copied deterministically.

struct PlantedDataset {
  std::vector<PreferencePair> train;
  std::vector<PreferencePair> test;
  Featurizer feat;
};

inline PlantedDataset gen_planted_linear(uint64_t seed, size_t n_train = 5000,
                                         size_t n_test = 1000) {
  PlantedDataset ds;
  ds.feat.hash_dimension = 1ull << 16;
  ds.feat.hash_seed = 99;
  Rng rng = Rng::keyed(seed, "planted-linear");

  auto make_body = [&](int64_t k_markers) {
    std::vector<std::string> toks;
    size_t n_fill = 6 + rng.next_below(9);
    for (size_t t = 0; t < n_fill; ++t) toks.push_back("w" + std::to_string(rng.next_below(200)));
    for (int64_t t = 0; t < k_markers; ++t)
      toks.push_back("mk" + std::to_string(rng.next_below(30)));
    rng.shuffle(toks);
    return join_tokens(toks);
  };

  size_t total = n_train + n_test;
  for (size_t i = 0; i < total; ++i) {
    int64_t k0 = static_cast<int64_t>(rng.next_below(9));
    int64_t k1 = k0;
    while (std::llabs(k0 - k1) < 2) k1 = static_cast<int64_t>(rng.next_below(9));
    std::string y0 = make_body(k0);
    std::string y1 = make_body(k1);
    double p0 = bt_probability(4.0 * static_cast<double>(k0), 4.0 * static_cast<double>(k1));
    bool y0_preferred = rng.next_double() < p0;
    PreferencePair p;
    p.pair_id = "pl" + std::to_string(i);
    p.prompt = "q w" + std::to_string(rng.next_below(200));
    p.chosen = y0_preferred ? y0 : y1;
    p.rejected = y0_preferred ? y1 : y0;
    p.margin = 1;
    p.bucket = Bucket::B1_2;
    p.source = "planted";
    (i < n_train ? ds.train : ds.test).push_back(std::move(p));
  }
  return ds;
}

// ---- planted style-control data (alpha* = 1, beta* given) -----------------

inline std::vector<ScoredPair> gen_style_data(size_t n, uint64_t seed, double alpha_star,
                                              std::array<double, kStyleDim> beta_star) {
  Rng rng = Rng::keyed(seed, "style-control");
  std::vector<ScoredPair> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    ScoredPair sp;
    sp.pair_id = "sc" + std::to_string(i);
    sp.diff = rng.next_gaussian();
    double r = alpha_star * sp.diff;
    for (size_t k = 0; k < kStyleDim; ++k) {
      sp.style[k] = rng.next_gaussian();
      r += beta_star[k] * sp.style[k];
    }
    sp.label = rng.next_double() < bt_probability(r, 0.0) ? 1 : 0;
    out.push_back(std::move(sp));
  }
  return out;
}

// ---- length-confounded dynamics data ---------------------------------------
//
// 80% of pairs have the chosen response longer, 20% shorter; in both groups
// the chosen response carries 3 content markers vs 1, so content is the only
// consistent signal.  Length ranges are disjoint, which keeps the split
// unambiguous (no length ties).

struct ConfoundDataset {
  std::vector<PreferencePair> train;
  std::vector<PreferencePair> eval_longer;   // chosen is the longer response
  std::vector<PreferencePair> eval_shorter;  // chosen is the shorter response
  Featurizer feat;
};

inline ConfoundDataset gen_length_confound(uint64_t seed, size_t n_train = 10240,
                                           size_t n_eval = 2000) {
  ConfoundDataset ds;
  ds.feat.hash_dimension = 1ull << 16;
  ds.feat.hash_seed = 7;
  Rng rng = Rng::keyed(seed, "length-confound");

  auto make_body = [&](size_t n_fill, int markers) {
    std::vector<std::string> toks;
    for (size_t t = 0; t < n_fill; ++t) toks.push_back("f" + std::to_string(rng.next_below(150)));
    for (int t = 0; t < markers; ++t) toks.push_back("c" + std::to_string(rng.next_below(40)));
    rng.shuffle(toks);
    return join_tokens(toks);
  };

  size_t total = n_train + n_eval;
  for (size_t i = 0; i < total; ++i) {
    bool chosen_longer = rng.next_double() < 0.8;
    size_t len_long = 25 + rng.next_below(20);
    size_t len_short = 8 + rng.next_below(8);
    PreferencePair p;
    p.pair_id = "dy" + std::to_string(i);
    p.prompt = "q f" + std::to_string(rng.next_below(150));
    p.chosen = make_body(chosen_longer ? len_long : len_short, 3);
    p.rejected = make_body(chosen_longer ? len_short : len_long, 1);
    p.margin = 1;
    p.bucket = Bucket::B1_2;
    p.source = "confound";
    if (i < n_train) ds.train.push_back(std::move(p));
    else if (chosen_longer) ds.eval_longer.push_back(std::move(p));
    else ds.eval_shorter.push_back(std::move(p));
  }
  return ds;
}

// Accuracy of a weight vector on pre-featurized deltas (ties count 0.5).
inline double group_accuracy(const std::vector<double>& weights,
                             const std::vector<TrainPair>& deltas) {
  if (deltas.empty()) return std::nan("");
  double correct = 0.0;
  for (const auto& tp : deltas) {
    double d = sparse_dot(weights, tp.delta);
    correct += d > 0.0 ? 1.0 : (d == 0.0 ? 0.5 : 0.0);
  }
  return correct / static_cast<double>(deltas.size());
}

}  // namespace testgen
