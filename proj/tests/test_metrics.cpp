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

#include <doctest.h>

#include <cmath>

#include "fairweight/metrics.hpp"
#include "test_util.hpp"

using namespace fairweight;
using fairweight::testing::KindOf;
using fairweight::testing::RelErr;
using fairweight::testing::TeacherData;

namespace {

// Logistic model on one feature with the given slope: logit = slope * x.
Model Slope(double slope) {
  ParameterVector p(2);
  p << slope, 0.0;
  return Model({ModelKind::kLogistic, 1}, p);
}

Dataset OneFeature(std::vector<double> xs, std::vector<int> y,
                   std::optional<std::vector<int>> s = std::nullopt) {
  FeatureMatrix x(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = xs[i];
  return Dataset(x, std::move(y), std::move(s));
}

}  // namespace

TEST_CASE("group rates on hand-counted data") {
  const std::vector<int> y{1, 1, 0, 0, 1, 1, 0, 0};
  const std::vector<int> s{0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<int> h{1, 0, 0, 0, 1, 1, 1, 0};
  const GroupRates r = ComputeGroupRates(h, y, s);
  CHECK(r.Tpr(0) == 0.5);
  CHECK(r.Tnr(0) == 1.0);
  CHECK(r.Tpr(1) == 1.0);
  CHECK(r.Tnr(1) == 0.5);
  CHECK(r.counts[1][0] == 2);
  CHECK(AverageOddsDifference(r) == 0.5);
  CHECK(EqualOpportunityDifference(r) == 0.5);
  CHECK(AccuracyDifference(h, y, s) == 0.0);

  const GroupRates perfect = ComputeGroupRates(y, y, s);
  CHECK(perfect.Tpr(0) == 1.0);
  CHECK(perfect.Tnr(1) == 1.0);
  const GroupRates ones = ComputeGroupRates(std::vector<int>(8, 1), y, s);
  CHECK(ones.Tpr(0) == 1.0);
  CHECK(ones.Tpr(1) == 1.0);
  CHECK(ones.Tnr(0) == 0.0);
  CHECK(ones.Tnr(1) == 0.0);
}

TEST_CASE("empty cells leave rates undefined") {
  const GroupRates r = ComputeGroupRates({1, 0, 1}, {1, 0, 1}, {0, 0, 1});
  CHECK_FALSE(r.tnr1.has_value());
  CHECK(KindOf([&] { r.Tnr(1); }) == ErrorKind::kUndefinedMetric);
  CHECK(KindOf([&] { AverageOddsDifference(r); }) == ErrorKind::kUndefinedMetric);
  CHECK(EqualOpportunityDifference(r) == 0.0);
  CHECK(KindOf([&] { AccuracyDifference({1, 0}, {1, 0}, {0, 0}); }) ==
        ErrorKind::kUndefinedMetric);
}

TEST_CASE("odds and opportunity differences") {
  // (tpr1, tpr0, tnr1, tnr0) = (0.9, 0.8, 0.7, 0.75)
  CHECK(AverageOddsDifference(GroupRates::FromValues(0.8, 0.9, 0.75, 0.7)) ==
        doctest::Approx(0.075).epsilon(1e-14));
  CHECK(AverageOddsDifference(GroupRates::FromValues(0.6, 0.6, 0.4, 0.4)) == 0.0);
  CHECK(AverageOddsDifference(GroupRates::FromValues(0.0, 1.0, 0.0, 1.0)) == 1.0);
  CHECK(EqualOpportunityDifference(GroupRates::FromValues(0.8, 0.9, 0.5, 0.5)) ==
        doctest::Approx(0.1).epsilon(1e-14));
  CHECK(EqualOpportunityDifference(GroupRates::FromValues(0.7, 0.7, 0.1, 0.9)) == 0.0);
  CHECK(EqualOpportunityDifference(GroupRates::FromValues(1.0, 0.0, 0.5, 0.5)) == 1.0);
}

TEST_CASE("accuracy difference") {
  // Group 0: 8 of 10 correct; group 1: 7 of 10 correct.
  std::vector<int> y(20, 1), h(20, 1), s(20, 0);
  for (int i = 10; i < 20; ++i) s[static_cast<std::size_t>(i)] = 1;
  for (int i : {0, 1, 10, 11, 12}) h[static_cast<std::size_t>(i)] = 0;
  CHECK(AccuracyDifference(h, y, s) == doctest::Approx(0.1).epsilon(1e-14));
  // Mirrored groups.
  const Dataset d = OneFeature({-1, 1, -1, 1}, {0, 1, 0, 1}, std::vector<int>{0, 0, 1, 1});
  CHECK(AccuracyDifference(Slope(1.0), d) == 0.0);
  const FairnessReport perfect = MakeFairnessReport({0, 1, 0, 1}, {0, 1, 0, 1}, {0, 0, 1, 1});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.ad == 0.0);
  CHECK(perfect.aod == 0.0);
  CHECK(perfect.eod == 0.0);
  const nlohmann::json j = ToJson(perfect);
  CHECK(j.at("accuracy") == 1.0);
  CHECK(j.contains("tpr0"));
}

TEST_CASE("soft rates") {
  const SoftMetricConfig cfg;
  const Dataset zeros = OneFeature({0.0, 0.0, 0.0}, {1, 1, 0});
  CHECK(SoftTpr(Slope(1.0), zeros, cfg) == 0.5);
  CHECK(SoftTnr(Slope(1.0), zeros, cfg) == 0.5);
  const Dataset one = OneFeature({cfg.temperature * std::log(3.0)}, {1});
  CHECK(SoftTpr(Slope(1.0), one, cfg) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(KindOf([&] { SoftTnr(Slope(1.0), one, cfg); }) == ErrorKind::kUndefinedMetric);

  // Small temperature recovers hard rates when no |logit| < 0.1.
  const Dataset d = OneFeature({-2, -0.5, 0.3, 1, 2, -1, 0.2, 3}, {1, 1, 1, 1, 0, 0, 0, 0});
  SoftMetricConfig sharp;
  sharp.temperature = 0.01;
  CHECK(std::abs(SoftTpr(Slope(1.0), d, sharp) - 0.5) <= 0.01);
  CHECK(std::abs(SoftTnr(Slope(1.0), d, sharp) - 0.25) <= 0.01);
  const double r = SoftTpr(Slope(3.0), d, cfg);
  CHECK(r >= 0.0);
  CHECK(r <= 1.0);
  SoftMetricConfig bad;
  bad.temperature = 0.0;
  CHECK(KindOf([&] { SoftTpr(Slope(1.0), d, bad); }) == ErrorKind::kConfig);
}

TEST_CASE("soft rate gradient") {
  const Dataset d = TeacherData(40, 3, 4);
  ParameterVector p(4);
  p << 0.2, -0.1, 0.05, 0.1;
  const Model m({ModelKind::kLogistic, 3}, p);
  SoftMetricConfig cfg;
  cfg.temperature = 1.0;
  for (RateKind which : {RateKind::kTpr, RateKind::kTnr}) {
    const ParameterVector g = SoftRateGrad(m, d, which, cfg);
    ParameterVector fd(4);
    for (Eigen::Index k = 0; k < 4; ++k) {
      ParameterVector hi = p, lo = p;
      hi(k) += 1e-6;
      lo(k) -= 1e-6;
      fd(k) = (SoftRate(m.WithParams(hi), d, which, cfg) -
               SoftRate(m.WithParams(lo), d, which, cfg)) / 2e-6;
    }
    CHECK(RelErr(g, fd) <= 1e-6);
    SoftMetricConfig flat;
    flat.temperature = 1e6;
    CHECK(SoftRateGrad(m, d, which, flat).norm() <= 1e-4 * g.norm());
    CHECK(RelErr(SoftRateGrad(m, d.Repeat(2), which, cfg), g) <= 1e-14);
  }
}

TEST_CASE("metric discrepancy") {
  const SoftMetricConfig cfg;
  const Dataset mirrored =
      OneFeature({1, -1, 1, -1}, {1, 0, 1, 0}, std::vector<int>{0, 0, 1, 1});
  CHECK(MetricDiscrepancy(Slope(0.2), mirrored, RateKind::kTpr, cfg) == 0.0);
  CHECK(MetricDiscrepancy(Slope(0.2), mirrored, RateKind::kTnr, cfg) == 0.0);
  // Group-0 positive at soft TPR 0.9, group-1 positive at 0.6.
  const double l9 = cfg.temperature * std::log(9.0);
  const double l6 = cfg.temperature * std::log(1.5);
  const Dataset d = OneFeature({l9, l6}, {1, 1}, std::vector<int>{0, 1});
  CHECK(MetricDiscrepancy(Slope(1.0), d, RateKind::kTpr, cfg) ==
        doctest::Approx(0.3).epsilon(1e-12));
  const Dataset no_neg = OneFeature({1.0, 2.0}, {1, 1}, std::vector<int>{0, 1});
  CHECK(KindOf([&] { MetricDiscrepancy(Slope(1.0), no_neg, RateKind::kTnr, cfg); }) ==
        ErrorKind::kUndefinedMetric);
}

TEST_CASE("metrics are pure and Gumbel noise is seeded") {
  const Dataset d = TeacherData(50, 2, 7, true);
  ParameterVector p(3);
  p << 0.5, -0.5, 0.1;
  const Model m({ModelKind::kLogistic, 2}, p);
  SoftMetricConfig cfg;
  CHECK(MetricDiscrepancy(m, d, RateKind::kTpr, cfg) ==
        MetricDiscrepancy(m, d, RateKind::kTpr, cfg));
  cfg.gumbel_noise = true;
  cfg.noise_seed = 3;
  const double a = SoftTpr(m, d, cfg);
  CHECK(a == SoftTpr(m, d, cfg));
  cfg.noise_seed = 4;
  CHECK(a != SoftTpr(m, d, cfg));
}
