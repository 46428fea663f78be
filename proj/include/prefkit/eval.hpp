#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "prefkit/bt.hpp"
#include "prefkit/errors.hpp"
#include "prefkit/io.hpp"
#include "prefkit/style.hpp"

namespace prefkit {

struct ScoredPair {
  std::string pair_id;
  double diff = 0.0;  // D = r(x, y0) - r(x, y1)
  int label = 1;      // 1 means y0 (chosen) preferred
  std::array<double, kStyleDim> style{};  // standardized style diff Z
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

namespace detail {

// Accuracy with sign(diff) against label; exact ties count one half.
inline EvalResult eval_margins(const std::vector<ScoredPair>& pairs,
                               const std::function<double(const ScoredPair&)>& score) {
  if (pairs.empty()) throw DataError("eval: empty input");
  double loss = 0.0, correct = 0.0;
  for (const auto& p : pairs) {
    double r = score(p);
    double m = p.label == 1 ? r : -r;
    loss += nll_of_margin(m);
    if (m > 0.0) correct += 1.0;
    else if (m == 0.0) correct += 0.5;
  }
  double n = static_cast<double>(pairs.size());
  return {loss / n, correct / n};
}

}  // namespace detail

inline EvalResult raw_eval(const std::vector<ScoredPair>& pairs) {
  return detail::eval_margins(pairs, [](const ScoredPair& p) { return p.diff; });
}

enum class ControlMode { full, alpha_only };

struct StyleControlFit {
  double alpha = 1.0;
  std::array<double, kStyleDim> beta{};
  double fit_nll = 0.0;  // unpenalized NLL at the fitted parameters
  int iterations = 0;
  bool converged = false;
};

// Minimizes mean logistic NLL of R = D*alpha + Z'beta against labels, plus
// L2 ridge 1e-6 on (alpha, beta) to keep separable data well-posed.  Plain
// full-batch gradient descent with Armijo backtracking; the problem is convex
// in 5 parameters, so this converges from the (1, 0) start.
inline StyleControlFit fit_style_control(const std::vector<ScoredPair>& pairs,
                                         ControlMode mode) {
  if (pairs.size() < 8) throw DataError("fit_style_control: need at least 8 pairs");
  for (const auto& p : pairs) {
    if (!std::isfinite(p.diff)) throw DataError("fit_style_control: non-finite diff");
    for (double z : p.style)
      if (!std::isfinite(z)) throw DataError("fit_style_control: non-finite style diff");
  }
  const double lambda = 1e-6;
  const double n = static_cast<double>(pairs.size());
  const bool fit_beta = mode == ControlMode::full;

  // theta = (alpha, beta[0..3])
  std::array<double, 1 + kStyleDim> theta{1.0, 0.0, 0.0, 0.0, 0.0};

  auto nll_at = [&](const std::array<double, 1 + kStyleDim>& th) {
    double total = 0.0;
    for (const auto& p : pairs) {
      double r = th[0] * p.diff;
      for (size_t k = 0; k < kStyleDim; ++k) r += th[1 + k] * p.style[k];
      total += nll_of_margin(p.label == 1 ? r : -r);
    }
    return total / n;
  };
  auto penalized = [&](const std::array<double, 1 + kStyleDim>& th) {
    double pen = 0.0;
    for (double t : th) pen += t * t;
    return nll_at(th) + lambda * pen;
  };
  auto gradient = [&](const std::array<double, 1 + kStyleDim>& th) {
    std::array<double, 1 + kStyleDim> g{};
    for (const auto& p : pairs) {
      double r = th[0] * p.diff;
      for (size_t k = 0; k < kStyleDim; ++k) r += th[1 + k] * p.style[k];
      double s = p.label == 1 ? 1.0 : -1.0;
      double coef = (bt_probability(s * r, 0.0) - 1.0) * s;  // d nll / d r
      g[0] += coef * p.diff;
      for (size_t k = 0; k < kStyleDim; ++k) g[1 + k] += coef * p.style[k];
    }
    for (size_t j = 0; j < g.size(); ++j) g[j] = g[j] / n + 2.0 * lambda * th[j];
    if (!fit_beta)
      for (size_t k = 0; k < kStyleDim; ++k) g[1 + k] = 0.0;
    return g;
  };

  StyleControlFit fit;
  double f = penalized(theta);
  double step = 1.0;
  const int max_iters = 10000;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    auto g = gradient(theta);
    double gnorm2 = 0.0;
    for (double v : g) gnorm2 += v * v;
    if (gnorm2 == 0.0) { fit.converged = true; break; }

    step *= 2.0;  // try a bigger move than last time, backtrack from there
    double f_new = f;
    std::array<double, 1 + kStyleDim> cand = theta;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (size_t j = 0; j < theta.size(); ++j) cand[j] = theta[j] - step * g[j];
      f_new = penalized(cand);
      if (f_new <= f - 1e-4 * step * gnorm2) { accepted = true; break; }
      step *= 0.5;
    }
    if (!accepted) { fit.converged = true; break; }
    double improvement = f - f_new;
    theta = cand;
    f = f_new;
    if (improvement < 1e-10) { fit.converged = true; ++iter; break; }
  }
  fit.alpha = theta[0];
  for (size_t k = 0; k < kStyleDim; ++k) fit.beta[k] = theta[1 + k];
  fit.fit_nll = nll_at(theta);
  fit.iterations = iter;
  return fit;
}

inline double controlled_score(const ScoredPair& p, const StyleControlFit& fit) {
  double r = fit.alpha * p.diff;
  for (size_t k = 0; k < kStyleDim; ++k) r += fit.beta[k] * p.style[k];
  return r;
}

inline EvalResult controlled_eval(const std::vector<ScoredPair>& pairs,
                                  const StyleControlFit& fit) {
  return detail::eval_margins(pairs,
                              [&](const ScoredPair& p) { return controlled_score(p, fit); });
}

struct EvalReport {
  size_t n_pairs = 0;
  double raw_loss = 0.0;
  double raw_accuracy = 0.0;
  double alpha_only_loss = 0.0;
  double alpha_only_accuracy = 0.0;
  double controlled_loss = 0.0;
  double controlled_accuracy = 0.0;
  StyleControlFit fit;        // full (alpha, beta) fit
  StyleControlFit alpha_fit;  // footnote's alpha-only comparison fit
};

// (alpha, beta) are fit on the evaluation set itself, the per-checkpoint
// controlled-comparison protocol; reuse fit + controlled_eval directly for a
// fit/apply split.
inline EvalReport eval_report(const std::vector<ScoredPair>& pairs) {
  EvalReport rep;
  rep.n_pairs = pairs.size();
  EvalResult raw = raw_eval(pairs);
  rep.raw_loss = raw.loss;
  rep.raw_accuracy = raw.accuracy;
  rep.alpha_fit = fit_style_control(pairs, ControlMode::alpha_only);
  EvalResult ares = controlled_eval(pairs, rep.alpha_fit);
  rep.alpha_only_loss = ares.loss;
  rep.alpha_only_accuracy = ares.accuracy;
  rep.fit = fit_style_control(pairs, ControlMode::full);
  EvalResult cres = controlled_eval(pairs, rep.fit);
  rep.controlled_loss = cres.loss;
  rep.controlled_accuracy = cres.accuracy;
  return rep;
}

inline json fit_to_json(const StyleControlFit& fit) {
  json obj;
  obj["alpha"] = fit.alpha;
  obj["beta"] = fit.beta;
  obj["fit_nll"] = fit.fit_nll;
  obj["iterations"] = fit.iterations;
  obj["converged"] = fit.converged;
  return obj;
}

inline json report_to_json(const EvalReport& rep) {
  json obj;
  obj["n_pairs"] = rep.n_pairs;
  obj["raw_loss"] = rep.raw_loss;
  obj["raw_accuracy"] = rep.raw_accuracy;
  obj["alpha_only_loss"] = rep.alpha_only_loss;
  obj["alpha_only_accuracy"] = rep.alpha_only_accuracy;
  obj["controlled_loss"] = rep.controlled_loss;
  obj["controlled_accuracy"] = rep.controlled_accuracy;
  obj["fit"] = fit_to_json(rep.fit);
  obj["alpha_fit"] = fit_to_json(rep.alpha_fit);
  obj["protocol"] = "style-control coefficients fit on the reported evaluation set";
  return obj;
}

}  // namespace prefkit
