#include <catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "prefkit/eval.hpp"

using namespace prefkit;

namespace {

double cosine(const std::array<double, kStyleDim>& a, const std::array<double, kStyleDim>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t k = 0; k < kStyleDim; ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return dot / std::sqrt(na * nb);
}

std::vector<ScoredPair> zeros(size_t n) {
  std::vector<ScoredPair> out(n);
  for (size_t i = 0; i < n; ++i) out[i].pair_id = "z" + std::to_string(i);
  return out;
}

}  // namespace

TEST_CASE("raw_eval hand examples") {
  auto flat = zeros(4);
  auto res = raw_eval(flat);
  CHECK(res.loss == Catch::Approx(std::log(2.0)).margin(1e-12));
  CHECK(res.accuracy == 0.5);

  std::vector<ScoredPair> four = {{"a", 1.0, 1, {}}, {"b", 2.0, 1, {}},
                                  {"c", -1.0, 0, {}}, {"d", -1.0, 1, {}}};
  CHECK(raw_eval(four).accuracy == 0.75);

  std::vector<ScoredPair> one = {{"a", std::log(3.0), 1, {}}};
  CHECK(raw_eval(one).loss == Catch::Approx(-std::log(0.75)).margin(1e-12));

  CHECK_THROWS_AS(raw_eval({}), DataError);
}

TEST_CASE("controlled_eval reduces to raw at the identity fit") {
  auto data = testgen::gen_style_data(200, 3, 1.0, {0.5, -0.5, 0.0, 0.0});
  StyleControlFit identity;  // alpha = 1, beta = 0
  auto raw = raw_eval(data);
  auto ctl = controlled_eval(data, identity);
  CHECK(ctl.loss == raw.loss);
  CHECK(ctl.accuracy == raw.accuracy);

  StyleControlFit null_fit;
  null_fit.alpha = 0.0;
  auto nres = controlled_eval(data, null_fit);
  CHECK(nres.loss == Catch::Approx(std::log(2.0)).margin(1e-12));
  CHECK(nres.accuracy == 0.5);
}

TEST_CASE("planted style coefficients are recovered") {
  std::array<double, kStyleDim> beta_star = {2.0, 0.0, 0.0, 0.0};
  auto data = testgen::gen_style_data(4000, 11, 1.0, beta_star);
  auto fit = fit_style_control(data, ControlMode::full);
  CHECK(fit.converged);
  CHECK(cosine(fit.beta, beta_star) >= 0.9);
  CHECK(fit.alpha > 0.5);
  CHECK(fit.alpha < 2.0);
  CHECK(std::abs(fit.beta[0] - 2.0) < 0.4);
}

TEST_CASE("style-independent labels give a small beta") {
  auto data = testgen::gen_style_data(4000, 12, 1.0, {0, 0, 0, 0});
  auto full = fit_style_control(data, ControlMode::full);
  auto alpha = fit_style_control(data, ControlMode::alpha_only);
  double bnorm = 0.0;
  for (double b : full.beta) bnorm += b * b;
  CHECK(std::sqrt(bnorm) < 0.15);
  CHECK(std::abs(controlled_eval(data, full).loss - controlled_eval(data, alpha).loss) < 0.01);
}

TEST_CASE("alpha-only fit drives the loss down on separable data") {
  std::vector<ScoredPair> data;
  for (int i = 0; i < 64; ++i) {
    ScoredPair sp;
    sp.pair_id = "s" + std::to_string(i);
    sp.label = i % 2;
    sp.diff = sp.label == 1 ? 1.0 : -1.0;
    data.push_back(sp);
  }
  auto fit = fit_style_control(data, ControlMode::alpha_only);
  CHECK(fit.alpha > 3.0);
  CHECK(fit.fit_nll < 0.05);
  for (double b : fit.beta) CHECK(b == 0.0);
}

TEST_CASE("nested models order their fit NLLs") {
  auto data = testgen::gen_style_data(2000, 13, 0.8, {1.0, -0.5, 0.0, 0.25});
  auto full = fit_style_control(data, ControlMode::full);
  auto alpha = fit_style_control(data, ControlMode::alpha_only);
  double raw_nll = raw_eval(data).loss;  // NLL at (alpha=1, beta=0)
  CHECK(full.fit_nll <= alpha.fit_nll + 1e-9);
  CHECK(alpha.fit_nll <= raw_nll + 1e-9);
}

TEST_CASE("label swap symmetry holds to 1e-9") {
  auto data = testgen::gen_style_data(1000, 14, 1.0, {0.7, 0, -0.3, 0});
  auto swapped = data;
  for (auto& p : swapped) {
    p.label = 1 - p.label;
    p.diff = -p.diff;
    for (auto& z : p.style) z = -z;
  }
  CHECK(raw_eval(data).loss == Catch::Approx(raw_eval(swapped).loss).margin(1e-9));
  CHECK(raw_eval(data).accuracy == Catch::Approx(raw_eval(swapped).accuracy).margin(1e-12));
  auto f1 = fit_style_control(data, ControlMode::full);
  auto f2 = fit_style_control(swapped, ControlMode::full);
  CHECK(f1.fit_nll == Catch::Approx(f2.fit_nll).margin(1e-9));
}

TEST_CASE("positive scaling cannot change sign accuracy") {
  auto data = testgen::gen_style_data(1000, 15, 1.0, {0, 0, 0, 0});
  auto scaled = data;
  for (auto& p : scaled) p.diff *= 3.0;
  CHECK(raw_eval(data).accuracy == raw_eval(scaled).accuracy);
  auto f1 = fit_style_control(data, ControlMode::alpha_only);
  auto f2 = fit_style_control(scaled, ControlMode::alpha_only);
  CHECK(f1.fit_nll == Catch::Approx(f2.fit_nll).margin(1e-6));
  CHECK(f2.alpha == Catch::Approx(f1.alpha / 3.0).margin(1e-3));
}

TEST_CASE("style control fit validates input") {
  CHECK_THROWS_AS(fit_style_control(zeros(7), ControlMode::full), DataError);
  auto bad = zeros(8);
  bad[3].diff = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(fit_style_control(bad, ControlMode::full), DataError);
  auto bad2 = zeros(8);
  bad2[5].style[2] = std::nan("");
  CHECK_THROWS_AS(fit_style_control(bad2, ControlMode::full), DataError);
}

TEST_CASE("eval_report on degenerate data pins every loss to ln 2") {
  auto rep = eval_report(zeros(16));
  CHECK(rep.n_pairs == 16);
  CHECK(rep.raw_loss == Catch::Approx(std::log(2.0)).margin(1e-12));
  CHECK(rep.alpha_only_loss == Catch::Approx(std::log(2.0)).margin(1e-12));
  CHECK(rep.controlled_loss == Catch::Approx(std::log(2.0)).margin(1e-12));
  CHECK(rep.raw_accuracy == 0.5);

  json obj = report_to_json(rep);
  for (const char* key : {"n_pairs", "raw_loss", "raw_accuracy", "alpha_only_loss",
                          "alpha_only_accuracy", "controlled_loss", "controlled_accuracy", "fit",
                          "alpha_fit", "protocol"})
    CHECK(obj.contains(key));
  CHECK(obj["fit"].contains("alpha"));
  CHECK(obj["fit"]["beta"].size() == kStyleDim);
}

TEST_CASE("identical inputs produce identical report bytes") {
  auto data = testgen::gen_style_data(500, 16, 1.0, {1, 0, 0, 0});
  auto s1 = report_to_json(eval_report(data)).dump();
  auto s2 = report_to_json(eval_report(data)).dump();
  CHECK(s1 == s2);
}
