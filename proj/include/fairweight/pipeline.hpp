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

#ifndef FAIRWEIGHT_PIPELINE_HPP_
#define FAIRWEIGHT_PIPELINE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fairweight/datamodel.hpp"
#include "fairweight/influence.hpp"
#include "fairweight/metrics.hpp"
#include "fairweight/model.hpp"
#include "fairweight/reweight.hpp"

namespace fairweight {

struct FairIFConfig {
  // input_dim == 0 is filled in from the training data.
  ModelSpec model;
  std::uint64_t init_seed = 0;
  TrainConfig stage1;
  TrainConfig stage2;
  SolverConfig solver;
  SoftMetricConfig soft;
  double lambda = 0.1;
  WeightPolicy weight_policy = WeightPolicy::kClamp;
  ChannelWeights channel_weights = {1.0, 1.0};
  // Stage two starts from the stage-one parameters instead of a fresh init.
  bool warm_start = false;
  std::uint64_t stage2_init_seed = 0;
  // Length of the top up/down-weighted lists in the report.
  int top_k = 10;
};

struct EpsilonStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double l2 = 0.0;
  Eigen::Index clamped_count = 0;
};

struct RankedWeight {
  Eigen::Index index = 0;
  double epsilon = 0.0;
  double weight = 0.0;
};

struct StageTimings {
  double stage1_seconds = 0.0;
  double influence_seconds = 0.0;
  double solve_seconds = 0.0;
  double stage2_seconds = 0.0;
};

struct RunReport {
  // Keyed by split name ("train", "val", "test"); a split appears only when
  // it carries group annotations.
  std::map<std::string, FairnessReport> erm;
  std::map<std::string, FairnessReport> fairif;
  double a_tpr = 0.0;
  double a_tnr = 0.0;
  double lambda = 0.0;
  double objective_value = 0.0;
  EpsilonStats epsilon_stats;
  // First-order prediction of the validation soft gaps after reweighting.
  std::pair<double, double> predicted_residuals{};
  // Soft gaps actually measured on the validation set after stage two.
  std::pair<double, double> realized_gaps{};
  std::vector<RankedWeight> top_upweighted;
  std::vector<RankedWeight> top_downweighted;
  double stage1_grad_norm = 0.0;
  double stage2_grad_norm = 0.0;
  bool stage1_converged = false;
  bool stage2_converged = false;
  std::string solver;
  std::vector<std::string> warnings;
  StageTimings timings;
};

struct FairIFResult {
  Model erm_model;
  Model fair_model;
  InfluenceCoefficients coefficients;
  EpsilonVector eps;
  WeightVector weights;
  RunReport report;
};

FairnessReport Evaluate(const Model& model, const Dataset& data);

// Indices with eps of the requested sign, sorted by |eps| descending (ties by
// index), truncated to k.
std::vector<RankedWeight> TopWeights(const EpsilonVector& eps,
                                     const WeightVector& weights, bool positive,
                                     int k);

// Trains the ERM model, estimates influence coefficients on `val`, solves for
// the sample-weight perturbation and retrains with the resulting weights.
// Errors are rethrown as StageError tagged with the failing stage.
FairIFResult FairIFTrain(const Dataset& train, const Dataset& val,
                         const FairIFConfig& cfg,
                         const Dataset* test = nullptr);

// Stage one only; returns the converged ERM model and its training result.
TrainResult TrainErmStage(const Dataset& train, const FairIFConfig& cfg);

struct ErmRunResult {
  Model model;
  RunReport report;
};

// Stage one plus evaluation; the report's FairIF fields stay empty.
ErmRunResult ErmTrain(const Dataset& train, const Dataset& val,
                      const FairIFConfig& cfg, const Dataset* test = nullptr);

struct SweepEntry {
  double fraction = 1.0;
  std::optional<RunReport> report;
  std::vector<std::string> warnings;
  bool skipped = false;
};

// One FairIFTrain per stratified validation subsample. Runs whose subsample
// empties a (label, group) cell are skipped with a warning. `jobs` > 1 runs
// fractions concurrently; results keep the input order.
std::vector<SweepEntry> ValidationSizeSweep(const Dataset& train,
                                            const Dataset& val,
                                            const FairIFConfig& cfg,
                                            const std::vector<double>& fractions,
                                            std::uint64_t seed,
                                            const Dataset* test = nullptr,
                                            int jobs = 1);

// JSON document with a top-level "schema": 1. Timings are omitted when
// `include_timings` is false so reports can be compared bitwise.
nlohmann::json ToJson(const RunReport& report, bool include_timings = true);

// Flat CSV row per run, built from the test split when present, else val.
std::string RunCsvHeader();
std::string RunCsvRow(const std::string& run_name, const RunReport& report);

}  // namespace fairweight

#endif  // FAIRWEIGHT_PIPELINE_HPP_
