/*
 * Copyright 2026 The fairweight Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fairweight/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fairweight/error.hpp"
#include "fairweight/text.hpp"

namespace fairweight {

double PearsonCorrelation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::kShape, "correlation inputs differ in length");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<double> AverageRanks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double SpearmanCorrelation(const std::vector<double>& x, const std::vector<double>& y) {
  return PearsonCorrelation(AverageRanks(x), AverageRanks(y));
}

// ---------------------------------------------------------------------------
// Leave-one-out

LooStats LooInfluenceCheck(const Dataset& train, const Dataset& test,
                           const LooConfig& cfg,
                           const std::vector<Eigen::Index>& samples) {
  LooStats stats;
  if (samples.empty()) return stats;
  const Eigen::Index n = train.n();
  for (Eigen::Index i : samples) {
    if (i < 0 || i >= n) throw Error(ErrorKind::kShape, "LOO sample index out of range");
  }
  const ModelSpec spec{ModelKind::kLogistic, train.dim()};
  const Eigen::VectorXd uniform = UniformWeights(n);
  const TrainResult full =
      TrainErm(Model::Initialize(spec, cfg.train.seed), train, uniform, cfg.train);
  if (!full.converged) {
    throw Error(ErrorKind::kOracle, "full-data training did not reach tolerance (grad norm " +
                                        FormatDouble(full.grad_norm, 6) + ")");
  }
  const Model& theta = full.model;
  stats.base_test_loss = theta.MeanLoss(test);

  // Adjoint form: one solve against the test gradient, then a dot product per
  // training sample.
  const ModelCurvature h(theta, train, HessianKind::kExact);
  const ParameterVector test_grad = theta.MeanGrad(test);
  const ParameterVector s_test = InverseHvp(h, test_grad, cfg.solver).vector;
  const Eigen::VectorXd dots = theta.SampleGradDots(train, s_test);

  for (Eigen::Index i : samples) {
    Eigen::VectorXd w = uniform;
    w(i) = 0.0;
    const TrainResult loo = TrainErm(theta, train, w, cfg.train);
    if (!loo.converged) {
      throw Error(ErrorKind::kOracle, "retrain without sample " + std::to_string(i) +
                                          " did not reach tolerance");
    }
    LooResult r;
    r.sample_index = i;
    r.predicted_delta = dots(i) / static_cast<double>(n);
    r.actual_delta = loo.model.MeanLoss(test) - stats.base_test_loss;
    stats.results.push_back(r);
  }
  std::vector<double> pred, actual;
  for (const auto& r : stats.results) {
    pred.push_back(r.predicted_delta);
    actual.push_back(r.actual_delta);
  }
  stats.pearson = PearsonCorrelation(pred, actual);
  stats.spearman = SpearmanCorrelation(pred, actual);
  return stats;
}

LooStats LooInfluenceCheck(const Dataset& train, const Dataset& test,
                           const LooConfig& cfg, Eigen::Index k) {
  if (k < 0 || k > train.n()) {
    throw Error(ErrorKind::kPrecondition, "k must be in [0, n]");
  }
  std::vector<Eigen::Index> samples(static_cast<std::size_t>(k));
  std::iota(samples.begin(), samples.end(), Eigen::Index{0});
  return LooInfluenceCheck(train, test, cfg, samples);
}

// ---------------------------------------------------------------------------
// Proposition checks

double AccuracyGapFromRates(double alpha, double beta, const GroupRates& rates) {
  const double tpr0 = rates.Tpr(0), tpr1 = rates.Tpr(1);
  const double tnr0 = rates.Tnr(0), tnr1 = rates.Tnr(1);
  // Grouped so equalized rates cancel exactly:
  // alpha dTPR + (1 - alpha) dTNR + (alpha - beta)(TPR1 - TNR1).
  return std::abs(alpha * (tpr0 - tpr1) + (1.0 - alpha) * (tnr0 - tnr1) +
                  (alpha - beta) * (tpr1 - tnr1));
}

PropositionReport PropositionCheck(BiasKind kind, double alpha, double beta,
                                   const GroupRates& rates) {
  PropositionReport out;
  out.kind = kind;
  const double tpr0 = rates.Tpr(0), tpr1 = rates.Tpr(1);
  const double tnr0 = rates.Tnr(0), tnr1 = rates.Tnr(1);
  const double d_tpr = std::abs(tpr0 - tpr1);
  const double d_tnr = std::abs(tnr0 - tnr1);
  out.ad = AccuracyGapFromRates(alpha, beta, rates);
  out.aod = AverageOddsDifference(rates);
  out.eod = EqualOpportunityDifference(rates);

  constexpr double kSlack = 1e-12;
  if (kind == BiasKind::kGroupDistributionShift) {
    const double eta = alpha + beta - 1.0;
    const double premise_slack = std::abs(eta) * std::abs(tnr1 - tpr1);
    out.bound = alpha * d_tpr + alpha * d_tnr +
                std::abs(1.0 - 2.0 * alpha) * std::abs(tpr1 - tnr0) + premise_slack;
    if (tpr1 == tnr0) {
      out.tightened_bound = alpha * (d_tpr + d_tnr) + premise_slack;
      out.tightened_bound_holds = out.ad <= *out.tightened_bound + kSlack;
    }
  } else {
    out.bound = alpha * d_tpr + (1.0 - alpha) * d_tnr +
                std::abs(alpha - beta) * std::abs(tpr1 - tnr1);
  }
  out.bound_holds = out.ad <= out.bound + kSlack;
  out.equalized = tpr0 == tpr1 && tnr0 == tnr1 && tpr0 == tnr0;
  out.all_zero = out.equalized && out.ad == 0.0 && out.aod == 0.0 && out.eod == 0.0;
  return out;
}

PropositionReport PropositionCheck(const GroupClassStats& stats,
                                   const GroupRates& rates, double tolerance) {
  CellTable cells{};
  // Reconstruct the cell table from marginals and conditionals.
  cells[1][0] = std::llround(stats.alpha * static_cast<double>(stats.group_sizes[0]));
  cells[0][0] = stats.group_sizes[0] - cells[1][0];
  cells[1][1] = std::llround(stats.beta * static_cast<double>(stats.group_sizes[1]));
  cells[0][1] = stats.group_sizes[1] - cells[1][1];
  if (cells[0][0] + cells[0][1] != stats.class_sizes[0] ||
      cells[1][0] + cells[1][1] != stats.class_sizes[1]) {
    throw Error(ErrorKind::kClassification,
                "group/class sizes are inconsistent with alpha and beta");
  }
  const auto kind = ClassifyCells(cells, tolerance);
  if (!kind) {
    throw Error(ErrorKind::kClassification,
                "statistics match none of the three bias structures");
  }
  return PropositionCheck(*kind, stats.alpha, stats.beta, rates);
}

// ---------------------------------------------------------------------------
// First-order accuracy diagnostic

AccuracyBoundDiagnostic ComputeAccuracyBoundDiagnostic(
    const Model& erm_model, const Model& fair_model, const Dataset& train,
    const Dataset& test, const EpsilonVector& eps, const SolverConfig& solver) {
  if (erm_model.kind() != fair_model.kind() ||
      erm_model.param_count() != fair_model.param_count()) {
    throw Error(ErrorKind::kPrecondition, "models must share an architecture");
  }
  if (eps.eps.size() != train.n()) {
    throw Error(ErrorKind::kShape, "epsilon length does not match training size");
  }
  const ModelCurvature h(erm_model, train, ResolveHessianKind(solver, erm_model));
  const ExplicitInverse inverse(h, solver.damping);
  const Eigen::MatrixXd influence = -inverse.Solve(erm_model.SampleGrads(train));

  AccuracyBoundDiagnostic diag;
  const auto n = static_cast<double>(train.n());
  diag.gamma = n * influence.colwise().norm().maxCoeff();
  diag.eps_norm = eps.eps.norm();
  const ParameterVector test_grad = erm_model.MeanGrad(test);
  diag.test_grad_norm = test_grad.norm();
  const ParameterVector delta = influence * eps.eps;
  diag.predicted_loss_change = test_grad.dot(delta);
  diag.actual_loss_change = fair_model.MeanLoss(test) - erm_model.MeanLoss(test);
  diag.cauchy_schwarz_bound = diag.test_grad_norm * delta.norm();
  diag.gamma_bound = diag.test_grad_norm * diag.gamma * diag.eps_norm;
  return diag;
}

// ---------------------------------------------------------------------------
// Finite differences

FiniteDifferenceReport FiniteDifferenceSuite(const Model& model,
                                             const Dataset& data, int points,
                                             std::uint64_t seed) {
  if (data.n() == 0) throw Error(ErrorKind::kPrecondition, "finite differences need data");
  FiniteDifferenceReport report;
  report.points = points;
  constexpr double kGradStep = 1e-5;
  constexpr double kHvpStep = 1e-4;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index p = model.param_count();
  const Eigen::VectorXd w = UniformWeights(data.n());
  const double spread = model.kind() == ModelKind::kLogistic ? 0.5 : 0.3;

  for (int k = 0; k < points; ++k) {
    ParameterVector theta = model.params();
    for (Eigen::Index j = 0; j < p; ++j) theta(j) += spread * normal(rng);
    const Model at = model.WithParams(theta);

    const ParameterVector g = at.WeightedGrad(data, w);
    ParameterVector g_fd(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      ParameterVector tp = theta, tm = theta;
      tp(j) += kGradStep;
      tm(j) -= kGradStep;
      g_fd(j) = (model.WithParams(tp).WeightedLoss(data, w) -
                 model.WithParams(tm).WeightedLoss(data, w)) /
                (2.0 * kGradStep);
    }
    report.max_grad_rel_err =
        std::max(report.max_grad_rel_err, (g - g_fd).norm() / std::max(g.norm(), 1e-300));

    ParameterVector v(p);
    for (Eigen::Index j = 0; j < p; ++j) v(j) = normal(rng);
    v.normalize();
    const ParameterVector hv = Hvp(at, data, w, v, HessianKind::kExact);
    const ParameterVector hv_fd =
        (model.WithParams(theta + kHvpStep * v).WeightedGrad(data, w) -
         model.WithParams(theta - kHvpStep * v).WeightedGrad(data, w)) /
        (2.0 * kHvpStep);
    report.max_hvp_rel_err = std::max(
        report.max_hvp_rel_err, (hv - hv_fd).norm() / std::max(hv.norm(), 1e-300));
  }
  report.grad_ok = report.max_grad_rel_err <= report.grad_tol;
  report.hvp_ok = report.max_hvp_rel_err <= report.hvp_tol;
  return report;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json ToJson(const LooStats& stats) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : stats.results) {
    rows.push_back({{"index", r.sample_index},
                    {"predicted_delta", r.predicted_delta},
                    {"actual_delta", r.actual_delta}});
  }
  return {{"schema", 1},
          {"pearson", stats.pearson},
          {"spearman", stats.spearman},
          {"base_test_loss", stats.base_test_loss},
          {"results", rows}};
}

nlohmann::json ToJson(const PropositionReport& report) {
  nlohmann::json doc = {{"schema", 1},
                        {"kind", BiasKindName(report.kind)},
                        {"ad", report.ad},
                        {"aod", report.aod},
                        {"eod", report.eod},
                        {"bound", report.bound},
                        {"bound_holds", report.bound_holds},
                        {"equalized", report.equalized},
                        {"all_zero", report.all_zero}};
  if (report.tightened_bound) {
    doc["tightened_bound"] = *report.tightened_bound;
    doc["tightened_bound_holds"] = *report.tightened_bound_holds;
  }
  return doc;
}

nlohmann::json ToJson(const AccuracyBoundDiagnostic& diag) {
  return {{"schema", 1},
          {"eps_norm", diag.eps_norm},
          {"test_grad_norm", diag.test_grad_norm},
          {"gamma", diag.gamma},
          {"predicted_loss_change", diag.predicted_loss_change},
          {"actual_loss_change", diag.actual_loss_change},
          {"cauchy_schwarz_bound", diag.cauchy_schwarz_bound},
          {"gamma_bound", diag.gamma_bound}};
}

nlohmann::json ToJson(const FiniteDifferenceReport& report) {
  return {{"schema", 1},
          {"points", report.points},
          {"max_grad_rel_err", report.max_grad_rel_err},
          {"max_hvp_rel_err", report.max_hvp_rel_err},
          {"grad_tol", report.grad_tol},
          {"hvp_tol", report.hvp_tol},
          {"grad_ok", report.grad_ok},
          {"hvp_ok", report.hvp_ok}};
}

}  // namespace fairweight
