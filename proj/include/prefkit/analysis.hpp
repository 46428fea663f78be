#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prefkit/bt.hpp"
#include "prefkit/errors.hpp"
#include "prefkit/pairs.hpp"
#include "prefkit/style.hpp"

namespace prefkit {

struct ContingencyTable {
  int64_t n11 = 0, n10 = 0, n01 = 0, n00 = 0;

  void add(bool a, bool b) {
    if (a && b) ++n11;
    else if (a && !b) ++n10;
    else if (!a && b) ++n01;
    else ++n00;
  }
  int64_t total() const { return n11 + n10 + n01 + n00; }
  int64_t row1() const { return n11 + n10; }
  int64_t row0() const { return n01 + n00; }
  int64_t col1() const { return n11 + n01; }
  int64_t col0() const { return n10 + n00; }
};

// Pearson phi for a 2x2 table; any zero marginal makes it undefined
// (distinct from 0).
inline std::optional<double> phi(const ContingencyTable& t) {
  double r1 = static_cast<double>(t.row1()), r0 = static_cast<double>(t.row0());
  double c1 = static_cast<double>(t.col1()), c0 = static_cast<double>(t.col0());
  if (r1 == 0.0 || r0 == 0.0 || c1 == 0.0 || c0 == 0.0) return std::nullopt;
  double num = static_cast<double>(t.n11) * static_cast<double>(t.n00) -
               static_cast<double>(t.n10) * static_cast<double>(t.n01);
  return num / std::sqrt(r1 * r0 * c1 * c0);
}

enum class StyleFeature { length, markdown };

inline int64_t markdown_markers(const StyleVector& sv) {
  return sv.md_lists + sv.md_headers + sv.md_bold;
}

// One evaluation observation in presented (y0, y1) orientation.
struct AnalysisPair {
  std::string pair_id;
  double score_0 = 0.0;
  double score_1 = 0.0;
  int label = 1;  // 1 iff y0 preferred
  int64_t len_0 = 0, len_1 = 0;
  int64_t md_0 = 0, md_1 = 0;
  Bucket bucket = Bucket::B1_2;
};

struct StyleCorrelation {
  std::optional<double> phi_pred_style;   // phi(P, S)
  std::optional<double> phi_label_style;  // phi(G, S)
  ContingencyTable pred_table;
  ContingencyTable label_table;
  int64_t style_ties = 0;  // excluded from both tables
  int64_t pred_ties = 0;   // excluded from the prediction table only
};

// S = "y0 wins on the style feature".  Style ties drop the pair entirely;
// score ties drop it from the prediction table but keep the label row.
inline StyleCorrelation style_correlation(const std::vector<AnalysisPair>& pairs,
                                          StyleFeature feature) {
  StyleCorrelation out;
  for (const auto& p : pairs) {
    int64_t f0 = feature == StyleFeature::length ? p.len_0 : p.md_0;
    int64_t f1 = feature == StyleFeature::length ? p.len_1 : p.md_1;
    if (f0 == f1) { ++out.style_ties; continue; }
    bool s = f0 > f1;
    out.label_table.add(p.label == 1, s);
    double d = p.score_0 - p.score_1;
    if (d == 0.0) { ++out.pred_ties; continue; }
    out.pred_table.add(d > 0.0, s);
  }
  out.phi_pred_style = phi(out.pred_table);
  out.phi_label_style = phi(out.label_table);
  return out;
}

struct LengthSplit {
  std::optional<double> acc_chosen_longer;
  std::optional<double> acc_chosen_shorter;
  int64_t n_chosen_longer = 0;
  int64_t n_chosen_shorter = 0;
  int64_t length_ties = 0;
};

// Accuracy on pairs where the human-chosen response is longer vs shorter;
// exact-length ties are excluded and tallied.  Score ties count one half.
inline LengthSplit length_split_eval(const std::vector<AnalysisPair>& pairs) {
  if (pairs.empty()) throw DataError("length_split_eval: empty input");
  LengthSplit out;
  double correct_longer = 0.0, correct_shorter = 0.0;
  for (const auto& p : pairs) {
    int64_t len_chosen = p.label == 1 ? p.len_0 : p.len_1;
    int64_t len_rejected = p.label == 1 ? p.len_1 : p.len_0;
    if (len_chosen == len_rejected) { ++out.length_ties; continue; }
    double margin = p.label == 1 ? p.score_0 - p.score_1 : p.score_1 - p.score_0;
    double credit = margin > 0.0 ? 1.0 : (margin == 0.0 ? 0.5 : 0.0);
    if (len_chosen > len_rejected) {
      ++out.n_chosen_longer;
      correct_longer += credit;
    } else {
      ++out.n_chosen_shorter;
      correct_shorter += credit;
    }
  }
  if (out.n_chosen_longer > 0)
    out.acc_chosen_longer = correct_longer / static_cast<double>(out.n_chosen_longer);
  if (out.n_chosen_shorter > 0)
    out.acc_chosen_shorter = correct_shorter / static_cast<double>(out.n_chosen_shorter);
  return out;
}

struct BucketRow {
  Bucket bucket = Bucket::B1_2;
  int64_t count = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

inline std::vector<BucketRow> bucket_eval(const std::vector<AnalysisPair>& pairs) {
  if (pairs.empty()) throw DataError("bucket_eval: empty input");
  struct Acc { int64_t n = 0; double loss = 0.0, correct = 0.0; };
  std::array<Acc, 4> acc;
  for (const auto& p : pairs) {
    double margin = p.label == 1 ? p.score_0 - p.score_1 : p.score_1 - p.score_0;
    Acc& a = acc[static_cast<size_t>(p.bucket)];
    ++a.n;
    a.loss += nll_of_margin(margin);
    a.correct += margin > 0.0 ? 1.0 : (margin == 0.0 ? 0.5 : 0.0);
  }
  std::vector<BucketRow> rows;
  for (size_t b = 0; b < 4; ++b) {
    if (acc[b].n == 0) continue;
    double n = static_cast<double>(acc[b].n);
    rows.push_back({static_cast<Bucket>(b), acc[b].n, acc[b].loss / n, acc[b].correct / n});
  }
  return rows;
}

struct BiasAudit {
  std::optional<double> phi_correct_longer;
  bool flagged = false;  // |phi| above threshold means style-confounded
  ContingencyTable table;
};

inline BiasAudit bias_audit(const std::vector<std::pair<bool, bool>>& correct_longer,
                            double threshold = 0.3) {
  BiasAudit out;
  for (const auto& [correct, longer] : correct_longer) out.table.add(correct, longer);
  out.phi_correct_longer = phi(out.table);
  out.flagged = out.phi_correct_longer && std::abs(*out.phi_correct_longer) > threshold;
  return out;
}

// Lift stored pairs + scores into presented-orientation observations.  With
// randomize_orientation, each pair is flipped by a seeded per-pair coin so
// labels vary — without it the stored orientation (chosen first, label always
// 1) is kept, which leaves phi(G,S) undefined by construction.
inline std::vector<AnalysisPair> make_analysis_pairs(const std::vector<PreferencePair>& pairs,
                                                     const ScoreMap& scores,
                                                     bool randomize_orientation,
                                                     uint64_t seed = 0) {
  std::vector<AnalysisPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto it = scores.find(p.pair_id);
    if (it == scores.end()) throw DataError("no score for pair " + p.pair_id);
    StyleVector sc = extract_style(p.chosen);
    StyleVector sr = extract_style(p.rejected);
    bool flip = randomize_orientation &&
                (hash_combine(mix64(seed), fnv1a64(p.pair_id)) & 1ull) != 0;
    AnalysisPair ap;
    ap.pair_id = p.pair_id;
    ap.bucket = p.bucket;
    if (!flip) {
      ap.score_0 = it->second.score_chosen;
      ap.score_1 = it->second.score_rejected;
      ap.label = 1;
      ap.len_0 = sc.token_length;
      ap.len_1 = sr.token_length;
      ap.md_0 = markdown_markers(sc);
      ap.md_1 = markdown_markers(sr);
    } else {
      ap.score_0 = it->second.score_rejected;
      ap.score_1 = it->second.score_chosen;
      ap.label = 0;
      ap.len_0 = sr.token_length;
      ap.len_1 = sc.token_length;
      ap.md_0 = markdown_markers(sr);
      ap.md_1 = markdown_markers(sc);
    }
    out.push_back(std::move(ap));
  }
  return out;
}

struct ScalingFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double residual = 0.0;  // residual sum of squares in original space
};

// L(N) = a*N^(-b) + c.  The offset c is grid-searched over [0, 0.999*minL]
// (64 steps, refined twice around the incumbent); for each c, (a, b) come
// from least squares on log(L - c) vs log N, and candidates are ranked by
// original-space RSS.  Ties prefer the larger c, so flat curves resolve to
// b = 0 with c at the loss floor.
inline ScalingFit fit_power_law(std::vector<std::pair<double, double>> curve) {
  if (curve.size() < 4) throw DataError("fit_power_law: need at least 4 points");
  std::sort(curve.begin(), curve.end());
  double min_l = curve.front().second;
  for (size_t i = 0; i < curve.size(); ++i) {
    if (i > 0 && curve[i].first == curve[i - 1].first)
      throw DataError("fit_power_law: duplicate N");
    if (curve[i].first <= 0.0) throw DataError("fit_power_law: N must be positive");
    if (curve[i].second <= 0.0) throw DataError("fit_power_law: L must be positive");
    min_l = std::min(min_l, curve[i].second);
  }

  const double n = static_cast<double>(curve.size());
  auto fit_given_c = [&](double c, double& a, double& b, double& rss) -> bool {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [N, L] : curve) {
      if (L - c <= 0.0) return false;
      double x = std::log(N), y = std::log(L - c);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) return false;
    double slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    b = -slope;
    a = std::exp(intercept);
    rss = 0.0;
    for (const auto& [N, L] : curve) {
      double r = a * std::pow(N, -b) + c - L;
      rss += r * r;
    }
    return true;
  };

  const int steps = 64;
  const double c_max = 0.999 * min_l;
  double lo = 0.0, hi = c_max;
  ScalingFit best;
  bool found = false;
  for (int round = 0; round < 3; ++round) {
    double spacing = steps > 1 ? (hi - lo) / (steps - 1) : 0.0;
    for (int s = 0; s < steps; ++s) {
      double c = lo + spacing * s;
      double a, b, rss;
      if (!fit_given_c(c, a, b, rss)) continue;
      if (!found || rss <= best.residual) {
        best = {a, b, c, rss};
        found = true;
      }
    }
    if (!found) break;
    lo = std::max(0.0, best.c - spacing);
    hi = std::min(c_max, best.c + spacing);
  }
  if (!found) throw DataError("fit_power_law: no admissible offset");
  return best;
}

inline json table_to_json(const ContingencyTable& t) {
  return json{{"n11", t.n11}, {"n10", t.n10}, {"n01", t.n01}, {"n00", t.n00}};
}

inline json opt_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

inline json style_correlation_to_json(const StyleCorrelation& sc) {
  json obj;
  obj["phi_pred_style"] = opt_to_json(sc.phi_pred_style);
  obj["phi_label_style"] = opt_to_json(sc.phi_label_style);
  obj["pred_table"] = table_to_json(sc.pred_table);
  obj["label_table"] = table_to_json(sc.label_table);
  obj["style_ties"] = sc.style_ties;
  obj["pred_ties"] = sc.pred_ties;
  return obj;
}

inline json length_split_to_json(const LengthSplit& ls) {
  json obj;
  obj["acc_chosen_longer"] = opt_to_json(ls.acc_chosen_longer);
  obj["acc_chosen_shorter"] = opt_to_json(ls.acc_chosen_shorter);
  obj["n_chosen_longer"] = ls.n_chosen_longer;
  obj["n_chosen_shorter"] = ls.n_chosen_shorter;
  obj["length_ties"] = ls.length_ties;
  return obj;
}

inline json bucket_rows_to_json(const std::vector<BucketRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json obj;
    obj["bucket"] = bucket_name(r.bucket);
    obj["count"] = r.count;
    obj["loss"] = r.loss;
    obj["accuracy"] = r.accuracy;
    arr.push_back(std::move(obj));
  }
  return arr;
}

inline json bias_audit_to_json(const BiasAudit& ba) {
  json obj;
  obj["phi_correct_longer"] = opt_to_json(ba.phi_correct_longer);
  obj["flagged"] = ba.flagged;
  obj["table"] = table_to_json(ba.table);
  return obj;
}

inline json scaling_to_json(const ScalingFit& sf) {
  return json{{"a", sf.a}, {"b", sf.b}, {"c", sf.c}, {"residual", sf.residual}};
}

}  // namespace prefkit
