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

#ifndef FAIRWEIGHT_METRICS_HPP_
#define FAIRWEIGHT_METRICS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fairweight/datamodel.hpp"
#include "fairweight/model.hpp"

namespace fairweight {

// Empirical per-group TPR/TNR. A rate is absent when its denominator is 0.
struct GroupRates {
  std::optional<double> tpr0, tpr1, tnr0, tnr1;
  // Denominators indexed [label][group].
  CellTable counts{};

  // Throw kUndefinedMetric when absent.
  double Tpr(int group) const;
  double Tnr(int group) const;

  static GroupRates FromValues(double tpr0, double tpr1, double tnr0, double tnr1);
};

GroupRates ComputeGroupRates(const std::vector<int>& predictions,
                             const std::vector<int>& labels,
                             const std::vector<int>& groups);
GroupRates ComputeGroupRates(const Model& model, const Dataset& data);

// |P(h=y | s=0) - P(h=y | s=1)|.
double AccuracyDifference(const std::vector<int>& predictions,
                          const std::vector<int>& labels,
                          const std::vector<int>& groups);
double AccuracyDifference(const Model& model, const Dataset& data);

// (|tpr1 - tpr0| + |tnr1 - tnr0|) / 2
double AverageOddsDifference(const GroupRates& rates);
// |tpr1 - tpr0|
double EqualOpportunityDifference(const GroupRates& rates);

struct FairnessReport {
  double accuracy = 0.0;
  std::array<double, 2> group_accuracy{};
  double ad = 0.0;
  double aod = 0.0;
  double eod = 0.0;
  GroupRates rates;
};

FairnessReport MakeFairnessReport(const std::vector<int>& predictions,
                                  const std::vector<int>& labels,
                                  const std::vector<int>& groups);

// Flat object: accuracy, acc_group0, acc_group1, ad, aod, eod, tpr0, tpr1,
// tnr0, tnr1, denominators.
nlohmann::json ToJson(const FairnessReport& report);

enum class RateKind { kTpr, kTnr };

const char* RateKindName(RateKind which);

struct SoftMetricConfig {
  double temperature = 0.1;
  // Logistic (difference-of-Gumbels) noise added to each logit.
  bool gumbel_noise = false;
  std::uint64_t noise_seed = 0;
};

// Mean of sigmoid(logit/tau) over positives (TPR) or sigmoid(-logit/tau)
// over negatives (TNR) of `slice`.
double SoftRate(const Model& model, const Dataset& slice, RateKind which,
                const SoftMetricConfig& cfg);
inline double SoftTpr(const Model& model, const Dataset& slice,
                      const SoftMetricConfig& cfg) {
  return SoftRate(model, slice, RateKind::kTpr, cfg);
}
inline double SoftTnr(const Model& model, const Dataset& slice,
                      const SoftMetricConfig& cfg) {
  return SoftRate(model, slice, RateKind::kTnr, cfg);
}

// Gradient of SoftRate with respect to the model parameters.
ParameterVector SoftRateGrad(const Model& model, const Dataset& slice,
                             RateKind which, const SoftMetricConfig& cfg);

// Signed soft-metric gap F(group 0) - F(group 1) on `val`.
double MetricDiscrepancy(const Model& model, const Dataset& val, RateKind which,
                         const SoftMetricConfig& cfg);

}  // namespace fairweight

#endif  // FAIRWEIGHT_METRICS_HPP_
