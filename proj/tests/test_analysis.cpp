#include <catch_amalgamated.hpp>

#include <cmath>

#include "prefkit/analysis.hpp"
#include "prefkit/rng.hpp"

using namespace prefkit;

namespace {

AnalysisPair ap(double s0, double s1, int label, int64_t l0, int64_t l1, int64_t m0 = 0,
                int64_t m1 = 0) {
  AnalysisPair p;
  p.score_0 = s0;
  p.score_1 = s1;
  p.label = label;
  p.len_0 = l0;
  p.len_1 = l1;
  p.md_0 = m0;
  p.md_1 = m1;
  return p;
}

}  // namespace

TEST_CASE("phi hand values") {
  CHECK(*phi({50, 0, 0, 50}) == 1.0);
  CHECK(*phi({25, 25, 25, 25}) == 0.0);
  CHECK(*phi({40, 10, 10, 40}) == Catch::Approx(0.6).margin(1e-15));
  CHECK(*phi({0, 50, 50, 0}) == -1.0);
}

TEST_CASE("phi is undefined on zero marginals") {
  CHECK_FALSE(phi({0, 0, 5, 5}).has_value());   // row1 empty
  CHECK_FALSE(phi({5, 5, 0, 0}).has_value());   // row0 empty
  CHECK_FALSE(phi({0, 5, 0, 5}).has_value());   // col1 empty
  CHECK_FALSE(phi({5, 0, 5, 0}).has_value());   // col0 empty
  CHECK_FALSE(phi({0, 0, 0, 0}).has_value());
}

TEST_CASE("phi antisymmetry and range on random tables") {
  Rng rng = Rng::keyed(21, "phi-prop");
  for (int t = 0; t < 1000; ++t) {
    ContingencyTable tab{static_cast<int64_t>(1 + rng.next_below(50)),
                         static_cast<int64_t>(1 + rng.next_below(50)),
                         static_cast<int64_t>(1 + rng.next_below(50)),
                         static_cast<int64_t>(1 + rng.next_below(50))};
    auto v = phi(tab);
    REQUIRE(v.has_value());
    CHECK(*v >= -1.0);
    CHECK(*v <= 1.0);
    ContingencyTable swapped{tab.n01, tab.n00, tab.n11, tab.n10};  // flip first variable
    CHECK(*phi(swapped) == Catch::Approx(-*v).margin(1e-12));
  }
}

TEST_CASE("contingency accumulation matches direct counting") {
  Rng rng = Rng::keyed(22, "phi-recount");
  std::vector<std::pair<bool, bool>> obs;
  ContingencyTable tab;
  for (int i = 0; i < 500; ++i) {
    bool a = rng.next_below(2) == 1;
    bool b = rng.next_below(3) == 0;
    obs.emplace_back(a, b);
    tab.add(a, b);
  }
  int64_t n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (auto [a, b] : obs) {
    if (a && b) ++n11;
    else if (a) ++n10;
    else if (b) ++n01;
    else ++n00;
  }
  CHECK(tab.n11 == n11);
  CHECK(tab.n10 == n10);
  CHECK(tab.n01 == n01);
  CHECK(tab.n00 == n00);
  CHECK(tab.total() == 500);
}

TEST_CASE("predictions that always favor the longer response have phi +1") {
  std::vector<AnalysisPair> pairs;
  Rng rng = Rng::keyed(23, "longer-pred");
  for (int i = 0; i < 200; ++i) {
    int64_t l0 = 5 + static_cast<int64_t>(rng.next_below(30));
    int64_t l1 = 5 + static_cast<int64_t>(rng.next_below(30));
    if (l0 == l1) l1 += 1;
    double s0 = l0 > l1 ? 1.0 : -1.0;
    pairs.push_back(ap(s0, 0.0, static_cast<int>(rng.next_below(2)), l0, l1));
  }
  auto sc = style_correlation(pairs, StyleFeature::length);
  REQUIRE(sc.phi_pred_style.has_value());
  CHECK(*sc.phi_pred_style == 1.0);
  CHECK(sc.style_ties == 0);
}

TEST_CASE("independent predictions have phi near zero") {
  const int n = 4000;
  std::vector<AnalysisPair> pairs;
  Rng rng = Rng::keyed(24, "indep-pred");
  for (int i = 0; i < n; ++i) {
    int64_t l0 = 5 + static_cast<int64_t>(rng.next_below(30));
    int64_t l1 = 5 + static_cast<int64_t>(rng.next_below(30));
    if (l0 == l1) continue;
    double s0 = rng.next_below(2) ? 1.0 : -1.0;
    pairs.push_back(ap(s0, 0.0, static_cast<int>(rng.next_below(2)), l0, l1));
  }
  auto sc = style_correlation(pairs, StyleFeature::length);
  REQUIRE(sc.phi_pred_style.has_value());
  CHECK(std::abs(*sc.phi_pred_style) < 3.0 / std::sqrt(static_cast<double>(pairs.size())));
}

TEST_CASE("planted label-style correlation is recovered") {
  const int n = 10000;
  const double rho = 0.4;
  std::vector<AnalysisPair> pairs;
  Rng rng = Rng::keyed(25, "planted-rho");
  for (int i = 0; i < n; ++i) {
    // P(G = S) = (1 + rho) / 2 makes phi converge to rho on balanced margins
    bool s = rng.next_below(2) == 1;
    bool g = rng.next_double() < (1.0 + rho) / 2.0 ? s : !s;
    int64_t l0 = s ? 20 : 10;
    int64_t l1 = s ? 10 : 20;
    pairs.push_back(ap(0.0, 0.0, g ? 1 : 0, l0, l1));
  }
  auto sc = style_correlation(pairs, StyleFeature::length);
  REQUIRE(sc.phi_label_style.has_value());
  CHECK(std::abs(*sc.phi_label_style - rho) < 0.05);
}

TEST_CASE("markdown feature uses total marker counts") {
  std::vector<AnalysisPair> pairs = {
      ap(1.0, 0.0, 1, 10, 10, 3, 1),  // md winner = y0, pred y0, label y0
      ap(0.0, 1.0, 0, 10, 10, 0, 2),  // md winner = y1, pred y1, label y1
      ap(1.0, 0.0, 1, 10, 10, 2, 2),  // md tie: excluded
  };
  auto sc = style_correlation(pairs, StyleFeature::markdown);
  CHECK(sc.style_ties == 1);
  REQUIRE(sc.phi_pred_style.has_value());
  CHECK(*sc.phi_pred_style == 1.0);
  REQUIRE(sc.phi_label_style.has_value());
  CHECK(*sc.phi_label_style == 1.0);
}

TEST_CASE("score ties drop out of the prediction table only") {
  std::vector<AnalysisPair> pairs = {
      ap(0.0, 0.0, 1, 20, 10),
      ap(1.0, 0.0, 1, 20, 10),
      ap(0.0, 1.0, 0, 10, 20),
  };
  auto sc = style_correlation(pairs, StyleFeature::length);
  CHECK(sc.pred_ties == 1);
  CHECK(sc.pred_table.total() == 2);
  CHECK(sc.label_table.total() == 3);
}

TEST_CASE("length split with a pure length scorer is 1.0 vs 0.0") {
  std::vector<AnalysisPair> pairs;
  Rng rng = Rng::keyed(26, "len-split");
  int64_t n_longer = 0, n_shorter = 0;
  for (int i = 0; i < 100; ++i) {
    int64_t l0 = 5 + static_cast<int64_t>(rng.next_below(20));
    int64_t l1 = 5 + static_cast<int64_t>(rng.next_below(20));
    if (l0 == l1) l1 += 2;
    int label = static_cast<int>(rng.next_below(2));
    int64_t len_chosen = label == 1 ? l0 : l1;
    int64_t len_rejected = label == 1 ? l1 : l0;
    (len_chosen > len_rejected ? n_longer : n_shorter) += 1;
    pairs.push_back(ap(static_cast<double>(l0), static_cast<double>(l1), label, l0, l1));
  }
  auto split = length_split_eval(pairs);
  REQUIRE(split.acc_chosen_longer.has_value());
  REQUIRE(split.acc_chosen_shorter.has_value());
  CHECK(*split.acc_chosen_longer == 1.0);
  CHECK(*split.acc_chosen_shorter == 0.0);
  CHECK(split.n_chosen_longer == n_longer);
  CHECK(split.n_chosen_shorter == n_shorter);
  CHECK(split.n_chosen_longer + split.n_chosen_shorter + split.length_ties ==
        static_cast<int64_t>(pairs.size()));
}

TEST_CASE("length split handles all ties and empties") {
  std::vector<AnalysisPair> tied = {ap(1, 0, 1, 7, 7), ap(0, 1, 0, 3, 3)};
  auto split = length_split_eval(tied);
  CHECK_FALSE(split.acc_chosen_longer.has_value());
  CHECK_FALSE(split.acc_chosen_shorter.has_value());
  CHECK(split.length_ties == 2);
  CHECK_THROWS_AS(length_split_eval({}), DataError);
}

TEST_CASE("bucket_eval partitions and its weighted mean is the overall accuracy") {
  std::vector<AnalysisPair> pairs;
  Rng rng = Rng::keyed(27, "buckets");
  double overall_correct = 0.0;
  for (int i = 0; i < 300; ++i) {
    AnalysisPair p = ap(rng.next_gaussian(), rng.next_gaussian(),
                        static_cast<int>(rng.next_below(2)), 10, 20);
    p.bucket = bucket_of(1 + static_cast<int64_t>(rng.next_below(15)));
    double margin = p.label == 1 ? p.score_0 - p.score_1 : p.score_1 - p.score_0;
    overall_correct += margin > 0.0 ? 1.0 : (margin == 0.0 ? 0.5 : 0.0);
    pairs.push_back(std::move(p));
  }
  auto rows = bucket_eval(pairs);
  int64_t total = 0;
  double weighted = 0.0;
  for (const auto& r : rows) {
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
    CHECK(r.loss >= 0.0);
    total += r.count;
    weighted += r.accuracy * static_cast<double>(r.count);
  }
  CHECK(total == static_cast<int64_t>(pairs.size()));
  CHECK(weighted / static_cast<double>(total) ==
        Catch::Approx(overall_correct / static_cast<double>(pairs.size())).margin(1e-9));

  std::vector<AnalysisPair> single = {pairs[0]};
  single[0].bucket = Bucket::B3_5;
  auto one = bucket_eval(single);
  REQUIRE(one.size() == 1);
  CHECK(one[0].bucket == Bucket::B3_5);
}

TEST_CASE("bias audit flags strong negative correlation") {
  std::vector<std::pair<bool, bool>> obs;
  for (int i = 0; i < 50; ++i) obs.emplace_back(true, false);   // correct & shorter
  for (int i = 0; i < 50; ++i) obs.emplace_back(false, true);   // wrong & longer
  auto audit = bias_audit(obs);
  REQUIRE(audit.phi_correct_longer.has_value());
  CHECK(*audit.phi_correct_longer == -1.0);
  CHECK(audit.flagged);
}

TEST_CASE("bias audit passes independent data and zero marginals") {
  Rng rng = Rng::keyed(28, "audit-indep");
  std::vector<std::pair<bool, bool>> obs;
  for (int i = 0; i < 10000; ++i)
    obs.emplace_back(rng.next_below(2) == 1, rng.next_below(2) == 1);
  auto audit = bias_audit(obs);
  REQUIRE(audit.phi_correct_longer.has_value());
  CHECK(std::abs(*audit.phi_correct_longer) < 0.05);
  CHECK_FALSE(audit.flagged);

  auto degenerate = bias_audit({{true, true}, {true, false}});
  CHECK_FALSE(degenerate.phi_correct_longer.has_value());
  CHECK_FALSE(degenerate.flagged);
}

TEST_CASE("make_analysis_pairs keeps or flips orientation deterministically") {
  std::vector<PreferencePair> pairs;
  ScoreMap scores;
  for (int i = 0; i < 50; ++i) {
    PreferencePair p;
    p.pair_id = "pr" + std::to_string(i);
    p.prompt = "q";
    p.chosen = "alpha beta gamma delta";
    p.rejected = "short";
    p.margin = 1 + i % 12;
    p.bucket = bucket_of(p.margin);
    pairs.push_back(p);
    scores[p.pair_id] = {0.5 + i, 0.25};
  }

  auto fixed = make_analysis_pairs(pairs, scores, false);
  for (const auto& p : fixed) CHECK(p.label == 1);
  CHECK(fixed[0].len_0 == 4);
  CHECK(fixed[0].len_1 == 1);
  CHECK(fixed[0].score_0 == 0.5);
  CHECK(fixed[0].bucket == Bucket::B1_2);

  auto r1 = make_analysis_pairs(pairs, scores, true, 9);
  auto r2 = make_analysis_pairs(pairs, scores, true, 9);
  int flips = 0;
  for (size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1[i].label == r2[i].label);
    CHECK(r1[i].score_0 == r2[i].score_0);
    if (r1[i].label == 0) {
      ++flips;
      CHECK(r1[i].score_1 == scores[r1[i].pair_id].score_chosen);
      CHECK(r1[i].len_1 == 4);
    }
  }
  CHECK(flips > 5);
  CHECK(flips < 45);

  CHECK_THROWS_AS(make_analysis_pairs(pairs, {}, false), DataError);
}

TEST_CASE("power law recovers planted parameters noiselessly") {
  std::vector<std::pair<double, double>> curve;
  for (int k = 10; k <= 20; ++k) {
    double n = std::pow(2.0, k);
    curve.push_back({n, 2.0 * std::pow(n, -0.5) + 0.1});
  }
  auto fit = fit_power_law(curve);
  CHECK(std::abs(fit.b - 0.5) / 0.5 <= 0.01);
  CHECK(fit.a == Catch::Approx(2.0).epsilon(0.05));
  CHECK(fit.c == Catch::Approx(0.1).margin(0.01));
  CHECK(fit.residual < 1e-6);
}

TEST_CASE("power law with zero offset recovers the amplitude") {
  std::vector<std::pair<double, double>> curve;
  for (int k = 4; k <= 12; ++k) {
    double n = std::pow(2.0, k);
    curve.push_back({n, 3.0 / n});
  }
  auto fit = fit_power_law(curve);
  CHECK(std::abs(fit.a - 3.0) / 3.0 <= 0.01);
  CHECK(fit.b == Catch::Approx(1.0).epsilon(0.01));
}

TEST_CASE("flat curves resolve to b near zero with c at the floor") {
  std::vector<std::pair<double, double>> curve = {{10, 0.5}, {100, 0.5}, {1000, 0.5}, {10000, 0.5}};
  auto fit = fit_power_law(curve);
  CHECK(std::abs(fit.b) < 0.2);
  CHECK(fit.c == Catch::Approx(0.4995).margin(1e-6));  // 0.999 * 0.5
  double worst = 0.0;
  for (auto [n, l] : curve) worst = std::max(worst, std::abs(fit.a * std::pow(n, -fit.b) + fit.c - l));
  CHECK(worst < 1e-3);
}

TEST_CASE("power law fit is order-invariant and validates input") {
  std::vector<std::pair<double, double>> curve;
  for (int k = 4; k <= 10; ++k) {
    double n = std::pow(2.0, k);
    curve.push_back({n, 1.7 * std::pow(n, -0.33) + 0.2});
  }
  auto sorted_fit = fit_power_law(curve);
  std::reverse(curve.begin(), curve.end());
  std::swap(curve[1], curve[4]);
  auto shuffled_fit = fit_power_law(curve);
  CHECK(sorted_fit.a == shuffled_fit.a);
  CHECK(sorted_fit.b == shuffled_fit.b);
  CHECK(sorted_fit.c == shuffled_fit.c);

  CHECK_THROWS_AS(fit_power_law({{1, 1}, {2, 1}, {3, 1}}), DataError);
  CHECK_THROWS_AS(fit_power_law({{1, 1}, {1, 2}, {3, 1}, {4, 1}}), DataError);
  CHECK_THROWS_AS(fit_power_law({{-1, 1}, {2, 1}, {3, 1}, {4, 1}}), DataError);
  CHECK_THROWS_AS(fit_power_law({{1, 1}, {2, 0.0}, {3, 1}, {4, 1}}), DataError);
}

TEST_CASE("analysis json helpers serialize optionals as null") {
  CHECK(opt_to_json(std::nullopt).is_null());
  CHECK(opt_to_json(0.25).get<double>() == 0.25);
  auto tab = table_to_json({1, 2, 3, 4});
  CHECK(tab["n11"] == 1);
  CHECK(tab["n00"] == 4);
}
