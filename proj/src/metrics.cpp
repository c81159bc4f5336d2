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

#include "fairweight/metrics.hpp"

#include <cmath>
#include <random>
#include <string>

#include "fairweight/error.hpp"

namespace fairweight {

namespace {

double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double Require(const std::optional<double>& rate, const char* name) {
  if (!rate) {
    throw Error(ErrorKind::kUndefinedMetric,
                std::string(name) + " is undefined (empty cell)");
  }
  return *rate;
}

void CheckAligned(const std::vector<int>& predictions,
                  const std::vector<int>& labels,
                  const std::vector<int>& groups) {
  if (predictions.size() != labels.size() || groups.size() != labels.size()) {
    throw Error(ErrorKind::kShape, "prediction, label and group lengths differ");
  }
}

// Logistic noise draws (one per slice sample) for the Gumbel surrogate.
Eigen::VectorXd NoiseFor(const Dataset& slice, const SoftMetricConfig& cfg) {
  Eigen::VectorXd noise = Eigen::VectorXd::Zero(slice.n());
  if (!cfg.gumbel_noise) return noise;
  std::mt19937_64 rng(cfg.noise_seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < slice.n(); ++i) {
    double u = uniform(rng);
    u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
    noise(i) = std::log(u) - std::log1p(-u);
  }
  return noise;
}

int TargetLabel(RateKind which) { return which == RateKind::kTpr ? 1 : 0; }

void CheckSoft(const Dataset& slice, RateKind which, const SoftMetricConfig& cfg,
               Eigen::Index* count) {
  if (!(cfg.temperature > 0.0)) {
    throw Error(ErrorKind::kConfig, "soft metric temperature must be positive");
  }
  const int target = TargetLabel(which);
  *count = 0;
  for (Eigen::Index i = 0; i < slice.n(); ++i) *count += slice.y(i) == target;
  if (*count == 0) {
    throw Error(ErrorKind::kUndefinedMetric,
                std::string("soft ") + RateKindName(which) +
                    " needs at least one sample with label " +
                    std::to_string(target));
  }
}

}  // namespace

double GroupRates::Tpr(int group) const {
  return Require(group == 0 ? tpr0 : tpr1, group == 0 ? "tpr0" : "tpr1");
}

double GroupRates::Tnr(int group) const {
  return Require(group == 0 ? tnr0 : tnr1, group == 0 ? "tnr0" : "tnr1");
}

GroupRates GroupRates::FromValues(double tpr0, double tpr1, double tnr0,
                                  double tnr1) {
  GroupRates r;
  r.tpr0 = tpr0;
  r.tpr1 = tpr1;
  r.tnr0 = tnr0;
  r.tnr1 = tnr1;
  return r;
}

GroupRates ComputeGroupRates(const std::vector<int>& predictions,
                             const std::vector<int>& labels,
                             const std::vector<int>& groups) {
  CheckAligned(predictions, labels, groups);
  CellTable hits{};
  GroupRates rates;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    const auto s = static_cast<std::size_t>(groups[i]);
    ++rates.counts[y][s];
    if (predictions[i] == labels[i]) ++hits[y][s];
  }
  auto rate = [&](int y, int s) -> std::optional<double> {
    if (rates.counts[y][s] == 0) return std::nullopt;
    return static_cast<double>(hits[y][s]) / static_cast<double>(rates.counts[y][s]);
  };
  rates.tpr0 = rate(1, 0);
  rates.tpr1 = rate(1, 1);
  rates.tnr0 = rate(0, 0);
  rates.tnr1 = rate(0, 1);
  return rates;
}

GroupRates ComputeGroupRates(const Model& model, const Dataset& data) {
  return ComputeGroupRates(model.Predictions(data), data.labels(), data.groups());
}

namespace {

struct AccuracyTally {
  std::array<double, 2> group{};
  double overall = 0.0;
};

AccuracyTally TallyAccuracy(const std::vector<int>& predictions,
                            const std::vector<int>& labels,
                            const std::vector<int>& groups) {
  CheckAligned(predictions, labels, groups);
  std::array<std::int64_t, 2> correct{};
  std::array<std::int64_t, 2> total{};
  std::int64_t all_correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto s = static_cast<std::size_t>(groups[i]);
    ++total[s];
    if (predictions[i] == labels[i]) {
      ++correct[s];
      ++all_correct;
    }
  }
  if (total[0] == 0 || total[1] == 0) {
    throw Error(ErrorKind::kUndefinedMetric,
                "accuracy difference needs both groups to be nonempty");
  }
  AccuracyTally tally;
  for (int s = 0; s < 2; ++s) {
    tally.group[s] = static_cast<double>(correct[s]) / static_cast<double>(total[s]);
  }
  tally.overall = static_cast<double>(all_correct) / static_cast<double>(labels.size());
  return tally;
}

}  // namespace

double AccuracyDifference(const std::vector<int>& predictions,
                          const std::vector<int>& labels,
                          const std::vector<int>& groups) {
  const AccuracyTally tally = TallyAccuracy(predictions, labels, groups);
  return std::abs(tally.group[0] - tally.group[1]);
}

double AccuracyDifference(const Model& model, const Dataset& data) {
  return AccuracyDifference(model.Predictions(data), data.labels(), data.groups());
}

double AverageOddsDifference(const GroupRates& rates) {
  return 0.5 * (std::abs(rates.Tpr(1) - rates.Tpr(0)) +
                std::abs(rates.Tnr(1) - rates.Tnr(0)));
}

double EqualOpportunityDifference(const GroupRates& rates) {
  return std::abs(rates.Tpr(1) - rates.Tpr(0));
}

FairnessReport MakeFairnessReport(const std::vector<int>& predictions,
                                  const std::vector<int>& labels,
                                  const std::vector<int>& groups) {
  const AccuracyTally tally = TallyAccuracy(predictions, labels, groups);
  FairnessReport report;
  report.group_accuracy = tally.group;
  report.accuracy = tally.overall;
  report.ad = std::abs(tally.group[0] - tally.group[1]);
  report.rates = ComputeGroupRates(predictions, labels, groups);
  report.aod = AverageOddsDifference(report.rates);
  report.eod = EqualOpportunityDifference(report.rates);
  return report;
}

nlohmann::json ToJson(const FairnessReport& report) {
  nlohmann::json denominators;
  for (int y = 0; y < 2; ++y) {
    for (int s = 0; s < 2; ++s) {
      denominators["y" + std::to_string(y) + "_s" + std::to_string(s)] =
          report.rates.counts[y][s];
    }
  }
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {
      {"accuracy", report.accuracy},
      {"acc_group0", report.group_accuracy[0]},
      {"acc_group1", report.group_accuracy[1]},
      {"ad", report.ad},
      {"aod", report.aod},
      {"eod", report.eod},
      {"tpr0", opt(report.rates.tpr0)},
      {"tpr1", opt(report.rates.tpr1)},
      {"tnr0", opt(report.rates.tnr0)},
      {"tnr1", opt(report.rates.tnr1)},
      {"denominators", denominators},
  };
}

const char* RateKindName(RateKind which) {
  return which == RateKind::kTpr ? "TPR" : "TNR";
}

double SoftRate(const Model& model, const Dataset& slice, RateKind which,
                const SoftMetricConfig& cfg) {
  Eigen::Index count = 0;
  CheckSoft(slice, which, cfg, &count);
  const int target = TargetLabel(which);
  const double sign = which == RateKind::kTpr ? 1.0 : -1.0;
  const Eigen::VectorXd f = model.Logits(slice);
  const Eigen::VectorXd noise = NoiseFor(slice, cfg);
  double total = 0.0;
  for (Eigen::Index i = 0; i < slice.n(); ++i) {
    if (slice.y(i) != target) continue;
    total += Sigmoid(sign * (f(i) + noise(i)) / cfg.temperature);
  }
  return total / static_cast<double>(count);
}

ParameterVector SoftRateGrad(const Model& model, const Dataset& slice,
                             RateKind which, const SoftMetricConfig& cfg) {
  Eigen::Index count = 0;
  CheckSoft(slice, which, cfg, &count);
  const int target = TargetLabel(which);
  const double sign = which == RateKind::kTpr ? 1.0 : -1.0;
  const Eigen::VectorXd f = model.Logits(slice);
  const Eigen::VectorXd noise = NoiseFor(slice, cfg);
  ParameterVector g = ParameterVector::Zero(model.param_count());
  for (Eigen::Index i = 0; i < slice.n(); ++i) {
    if (slice.y(i) != target) continue;
    const double sig = Sigmoid(sign * (f(i) + noise(i)) / cfg.temperature);
    g += (sign * sig * (1.0 - sig) / cfg.temperature) * model.LogitGrad(slice.x(i));
  }
  return g / static_cast<double>(count);
}

double MetricDiscrepancy(const Model& model, const Dataset& val, RateKind which,
                         const SoftMetricConfig& cfg) {
  return SoftRate(model, val.GroupSlice(0), which, cfg) -
         SoftRate(model, val.GroupSlice(1), which, cfg);
}

}  // namespace fairweight
