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

#ifndef FAIRWEIGHT_ORACLE_HPP_
#define FAIRWEIGHT_ORACLE_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fairweight/datamodel.hpp"
#include "fairweight/influence.hpp"
#include "fairweight/metrics.hpp"
#include "fairweight/model.hpp"
#include "fairweight/reweight.hpp"

namespace fairweight {

double PearsonCorrelation(const std::vector<double>& x, const std::vector<double>& y);
// Pearson correlation of average ranks.
double SpearmanCorrelation(const std::vector<double>& x, const std::vector<double>& y);

struct LooResult {
  Eigen::Index sample_index = 0;
  double predicted_delta = 0.0;  // -I_loss / n
  double actual_delta = 0.0;     // retrained minus full-data test loss
};

struct LooStats {
  std::vector<LooResult> results;
  double pearson = 0.0;
  double spearman = 0.0;
  double base_test_loss = 0.0;
};

// train.l2 equal to solver.damping makes the damped Hessian the exact Hessian
// of the training objective.
struct LooConfig {
  TrainConfig train = [] {
    TrainConfig c;
    c.learning_rate = 1.0;
    c.epochs = 200000;
    c.convergence_tol = 1e-10;
    c.l2 = 0.01;
    return c;
  }();
  SolverConfig solver = [] {
    SolverConfig c;
    c.method = SolverMethod::kExplicit;
    return c;
  }();
};

// Trains logistic regression on `train` to tol, then for each listed sample
// retrains without it (warm-started, full batch) and compares the change in
// mean test loss with the influence prediction. Throws kOracle if a retrain
// fails to converge.
LooStats LooInfluenceCheck(const Dataset& train, const Dataset& test,
                           const LooConfig& cfg,
                           const std::vector<Eigen::Index>& samples);
// First k samples.
LooStats LooInfluenceCheck(const Dataset& train, const Dataset& test,
                           const LooConfig& cfg, Eigen::Index k);

struct PropositionReport {
  BiasKind kind = BiasKind::kGroupSizeDiscrepancy;
  double ad = 0.0;   // alpha/beta rewriting of the accuracy gap
  double aod = 0.0;
  double eod = 0.0;
  // Case bound on AD; includes an |alpha - beta| (or |alpha + beta - 1|)
  // slack term that vanishes when the kind's premise holds exactly.
  double bound = 0.0;
  bool bound_holds = false;
  // Distribution-shift case only, when TPR(1) == TNR(0).
  std::optional<double> tightened_bound;
  std::optional<bool> tightened_bound_holds;
  // All four rates equal.
  bool equalized = false;
  // When equalized: whether AD, AOD and EOD all came out exactly 0.
  bool all_zero = false;
};

// Throws kClassification when the stats match none of the three bias kinds.
PropositionReport PropositionCheck(const GroupClassStats& stats,
                                   const GroupRates& rates,
                                   double tolerance = kDefaultScenarioTolerance);
// Classification from the cell table carried by the stats is skipped.
PropositionReport PropositionCheck(BiasKind kind, double alpha, double beta,
                                   const GroupRates& rates);

// alpha TPR0 - beta TPR1 + (1-alpha) TNR0 - (1-beta) TNR1, in absolute value.
double AccuracyGapFromRates(double alpha, double beta, const GroupRates& rates);

struct AccuracyBoundDiagnostic {
  double eps_norm = 0.0;
  double test_grad_norm = 0.0;
  // n * max_i ||I_param(z_i)||
  double gamma = 0.0;
  double predicted_loss_change = 0.0;
  double actual_loss_change = 0.0;
  // ||grad L_test|| * ||sum_i I_param(z_i) eps_i||
  double cauchy_schwarz_bound = 0.0;
  // ||grad L_test|| * gamma * ||eps||
  double gamma_bound = 0.0;
};

AccuracyBoundDiagnostic ComputeAccuracyBoundDiagnostic(
    const Model& erm_model, const Model& fair_model, const Dataset& train,
    const Dataset& test, const EpsilonVector& eps, const SolverConfig& solver);

struct FiniteDifferenceReport {
  double max_grad_rel_err = 0.0;
  double max_hvp_rel_err = 0.0;
  double grad_tol = 1e-5;
  double hvp_tol = 1e-4;
  int points = 0;
  bool grad_ok = false;
  bool hvp_ok = false;
};

// Gradient (step 1e-5) and exact-HVP (step 1e-4) central differences at
// `points` random parameter draws around the model's parameters.
FiniteDifferenceReport FiniteDifferenceSuite(const Model& model,
                                             const Dataset& data, int points = 10,
                                             std::uint64_t seed = 0);

nlohmann::json ToJson(const LooStats& stats);
nlohmann::json ToJson(const PropositionReport& report);
nlohmann::json ToJson(const AccuracyBoundDiagnostic& diag);
nlohmann::json ToJson(const FiniteDifferenceReport& report);

}  // namespace fairweight

#endif  // FAIRWEIGHT_ORACLE_HPP_
