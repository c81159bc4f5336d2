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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 1 when a
// criterion fails that was not listed with --expected-failure.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fairweight/datamodel.hpp"
#include "fairweight/influence.hpp"
#include "fairweight/metrics.hpp"
#include "fairweight/model.hpp"
#include "fairweight/oracle.hpp"
#include "fairweight/pipeline.hpp"
#include "fairweight/reweight.hpp"
#include "test_util.hpp"

using namespace fairweight;
using fairweight::testing::DenseRidgeEpsilon;
using fairweight::testing::GaussianVector;
using fairweight::testing::GradientDescentEpsilon;
using fairweight::testing::RelErr;
using fairweight::testing::TeacherData;
using fairweight::testing::TempDir;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string Fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

ScenarioSplits Scenario(BiasKind kind, const CellTable& cells, std::uint64_t seed) {
  ScenarioFile f;
  f.scenario.kind = kind;
  f.scenario.cell_counts = cells;
  f.scenario.seed = seed;
  f.scenario.feature_spec = MakeFeatureSpec(f.geometry);
  return GenerateScenarioSplits(f);
}

// ---------------------------------------------------------------------------
// 1. leave-one-out fidelity
// ---------------------------------------------------------------------------
Outcome InfluenceFidelity() {
  Stopwatch clock;
  double worst = 1.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset train = TeacherData(100, 10, 1000 + seed);
    const Dataset test = TeacherData(500, 10, 2000 + seed);
    const LooStats st = LooInfluenceCheck(train, test, LooConfig{}, 100);
    worst = std::min(worst, st.pearson);
    per_seed += (seed ? "," : "") + Fmt(st.pearson, 3);
  }
  const double secs = clock.Seconds();
  return {worst >= 0.9 && secs <= 120.0,
          "min pearson " + Fmt(worst) + " [" + per_seed + "] in " + Fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------------------
// 2. inverse-HVP solver agreement
// ---------------------------------------------------------------------------
Outcome SolverAgreement() {
  Stopwatch clock;
  double worst_lissa = 0.0, worst_cg = 0.0;
  for (Eigen::Index d : {4, 10, 30, 49}) {
    const Dataset data = TeacherData(300, d, 3000 + static_cast<std::uint64_t>(d));
    TrainConfig tc;
    tc.learning_rate = 1.0;
    tc.epochs = 100000;
    tc.convergence_tol = 1e-10;
    const Model m = TrainErm(Model::Initialize({ModelKind::kLogistic, d}, 0), data,
                             UniformWeights(data.n()), tc)
                        .model;
    const ModelCurvature h(m, data, HessianKind::kExact);
    std::mt19937_64 rng(static_cast<std::uint64_t>(d));
    const ParameterVector v = GaussianVector(m.param_count(), rng);
    const ParameterVector ex = InverseHvpExplicit(h, v, 0.01).vector;
    const ParameterVector cg = InverseHvpCg(h, v, 0.01).vector;
    LissaConfig lc;
    lc.repeats = 16;
    lc.batch_size = data.n();
    lc.seed = 7;
    const ParameterVector li = InverseHvpLissa(h, v, lc).vector;
    worst_cg = std::max(worst_cg, RelErr(cg, ex));
    worst_lissa = std::max({worst_lissa, RelErr(li, ex), RelErr(li, cg)});
  }
  return {worst_lissa <= 0.05 && worst_cg <= 1e-6,
          "P in {5,11,31,50}: lissa rel err " + Fmt(worst_lissa) + ", cg vs explicit " +
              Fmt(worst_cg) + " in " + Fmt(clock.Seconds(), 3) + " s"};
}

// ---------------------------------------------------------------------------
// 3. epsilon solve optimality and lambda limits
// ---------------------------------------------------------------------------
Outcome EpsilonOptimality() {
  std::mt19937_64 rng(42);
  double worst_ridge = 0.0, worst_gd = 0.0, worst_small = 0.0, worst_large = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd c1 = 0.1 * GaussianVector(50, rng);
    const Eigen::VectorXd c2 = 0.1 * GaussianVector(50, rng);
    const Eigen::VectorXd a = GaussianVector(2, rng);
    const double lambda = 0.1;
    const EpsilonVector e = SolveEpsilon(a(0), c1, a(1), c2, lambda);
    worst_ridge = std::max(worst_ridge, RelErr(e.eps, DenseRidgeEpsilon(a(0), c1, a(1), c2, lambda)));
    worst_gd = std::max(worst_gd, RelErr(e.eps, GradientDescentEpsilon(a(0), c1, a(1), c2, lambda)));

    const auto small = ResidualDiscrepancy(SolveEpsilon(a(0), c1, a(1), c2, 1e-8), a(0), c1, a(1), c2);
    worst_small = std::max(worst_small, std::hypot(small.first, small.second) / a.norm());
    const double big = 1e8 * (c1.squaredNorm() + c2.squaredNorm());
    const auto large = ResidualDiscrepancy(SolveEpsilon(a(0), c1, a(1), c2, big), a(0), c1, a(1), c2);
    worst_large = std::max(
        worst_large, std::hypot(large.first - a(0), large.second - a(1)) / a.norm());
  }
  const bool pass = worst_ridge <= 1e-9 && worst_gd <= 1e-6 && worst_small <= 1e-4 &&
                    worst_large <= 1e-4;
  return {pass, "ridge " + Fmt(worst_ridge) + ", gd " + Fmt(worst_gd) + ", lambda->0 residual " +
                    Fmt(worst_small) + ", lambda->inf shift " + Fmt(worst_large)};
}

// ---------------------------------------------------------------------------
// 4. proposition checks on randomized rates
// ---------------------------------------------------------------------------
Outcome PropositionTrials() {
  Stopwatch clock;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int held[3] = {0, 0, 0};
  int tight_held = 0;
  int zero_held = 0;
  int zero_trials = 0;
  constexpr int kTrials = 1000;
  for (int t = 0; t < kTrials; ++t) {
    const GroupRates r = GroupRates::FromValues(unif(rng), unif(rng), unif(rng), unif(rng));
    const double a = unif(rng);
    held[0] += PropositionCheck(BiasKind::kGroupSizeDiscrepancy, a, a, r).bound_holds;
    held[1] += PropositionCheck(BiasKind::kGroupDistributionShift, a, 1.0 - a, r).bound_holds;
    // Class-size discrepancy keeps equal per-group class mixes away from 1/2.
    const double c = 0.05 + 0.4 * unif(rng);
    held[2] += PropositionCheck(BiasKind::kClassSizeDiscrepancy, c, c, r).bound_holds;

    const double tie = unif(rng);
    const GroupRates tied = GroupRates::FromValues(unif(rng), tie, tie, unif(rng));
    const PropositionReport shift =
        PropositionCheck(BiasKind::kGroupDistributionShift, a, 1.0 - a, tied);
    tight_held += shift.tightened_bound_holds.value_or(false);

    const double p = unif(rng), q = unif(rng);
    const GroupRates across = GroupRates::FromValues(p, p, q, q);
    for (BiasKind k : {BiasKind::kGroupSizeDiscrepancy, BiasKind::kClassSizeDiscrepancy}) {
      const PropositionReport rep = PropositionCheck(k, a, a, across);
      zero_held += rep.ad == 0.0 && rep.aod == 0.0 && rep.eod == 0.0;
      ++zero_trials;
    }
    const GroupRates flat = GroupRates::FromValues(p, p, p, p);
    for (BiasKind k : {BiasKind::kGroupSizeDiscrepancy, BiasKind::kGroupDistributionShift,
                       BiasKind::kClassSizeDiscrepancy}) {
      const double beta = k == BiasKind::kGroupDistributionShift ? 1.0 - a : a;
      zero_held += PropositionCheck(k, a, beta, flat).all_zero;
      ++zero_trials;
    }
  }
  const double secs = clock.Seconds();
  const bool pass = held[0] == kTrials && held[1] == kTrials && held[2] == kTrials &&
                    tight_held == kTrials && zero_held == zero_trials && secs < 1.0;
  return {pass, "bounds " + std::to_string(held[0]) + "/" + std::to_string(held[1]) + "/" +
                    std::to_string(held[2]) + ", tightened " + std::to_string(tight_held) +
                    ", exact zeros " + std::to_string(zero_held) + "/" +
                    std::to_string(zero_trials) + " in " + Fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------------------
// 5. fairness movement on the three synthetic scenarios
// ---------------------------------------------------------------------------
Outcome ScenarioMovement() {
  Stopwatch clock;
  struct Case {
    BiasKind kind;
    CellTable cells;
  };
  const Case cases[] = {
      {BiasKind::kGroupSizeDiscrepancy, {{{1700, 300}, {1700, 300}}}},
      {BiasKind::kGroupDistributionShift, {{{300, 1700}, {1700, 300}}}},
      {BiasKind::kClassSizeDiscrepancy, {{{1700, 1700}, {300, 300}}}},
  };
  bool pass = true;
  std::string detail;
  for (const Case& c : cases) {
    int joint = 0, aod = 0, eod = 0, acc = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const ScenarioSplits sp = Scenario(c.kind, c.cells, seed);
      const FairIFResult r = FairIFTrain(sp.train, sp.val, FairIFConfig{}, &sp.test);
      const FairnessReport& e = r.report.erm.at("test");
      const FairnessReport& f = r.report.fairif.at("test");
      const bool a_ok = f.aod < e.aod;
      const bool e_ok = f.eod < e.eod;
      const bool acc_ok = std::abs(f.accuracy - e.accuracy) <= 0.01;
      aod += a_ok;
      eod += e_ok;
      acc += acc_ok;
      joint += a_ok && e_ok && acc_ok;
    }
    pass = pass && joint >= 8;
    detail += std::string(detail.empty() ? "" : "; ") + BiasKindName(c.kind) + " " +
              std::to_string(joint) + "/10 (aod " + std::to_string(aod) + ", eod " +
              std::to_string(eod) + ", acc " + std::to_string(acc) + ")";
  }
  const double secs = clock.Seconds();
  return {pass && secs <= 300.0, detail + " in " + Fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------------------
// 6. Adult-format tabular data
// ---------------------------------------------------------------------------

// Two-group tabular data with the Adult class/group cells (sex 0 = female):
// y0 = (13026, 20988), y1 = (1669, 9539). Income is easier to separate for
// group 0 than for group 1.
void WriteAdultLike(const std::string& path, double scale, std::uint64_t seed) {
  const CellTable adult{{{13026, 20988}, {1669, 9539}}};
  const CellTable cells = ScaleCells(adult, scale);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::ofstream out(path);
  out << "age,education_num,capital_gain,capital_loss,hours_per_week,occupation_score,"
         "income,sex\n";
  out << std::setprecision(9);
  for (int y = 0; y < 2; ++y) {
    for (int s = 0; s < 2; ++s) {
      const double sep = s == 0 ? 3.5 : 1.5;
      for (std::int64_t i = 0; i < cells[y][s]; ++i) {
        double x[6];
        for (double& v : x) v = normal(rng);
        x[0] += (y == 1 ? 0.5 : -0.5) * sep + (s == 1 ? 0.5 : 0.0);
        x[1] += s == 1 ? 2.0 : 0.0;
        for (double v : x) out << v << ',';
        out << y << ',' << s << '\n';
      }
    }
  }
}

Outcome AdultReproduction() {
  TempDir dir;
  WriteAdultLike(dir.File("adult_train.csv"), 0.2, 0);
  WriteAdultLike(dir.File("adult_val.csv"), 0.1, 100);
  WriteAdultLike(dir.File("adult_test.csv"), 0.1, 200);
  CsvSchema schema;
  schema.label_column = "income";
  schema.group_column = "sex";
  schema.group_optional = false;
  const Dataset train = LoadCsv(dir.File("adult_train.csv"), schema);
  const Dataset val = LoadCsv(dir.File("adult_val.csv"), schema);
  const Dataset test = LoadCsv(dir.File("adult_test.csv"), schema);
  const FairIFResult r = FairIFTrain(train, val, FairIFConfig{}, &test);
  const FairnessReport& e = r.report.erm.at("test");
  const FairnessReport& f = r.report.fairif.at("test");
  const double aod_drop = (e.aod - f.aod) / e.aod;
  const bool pass = e.ad >= 0.14 && e.ad <= 0.21 && f.ad < e.ad && aod_drop >= 0.15;
  return {pass, "n=" + std::to_string(train.n()) + " AD " + Fmt(e.ad) + " -> " + Fmt(f.ad) +
                    ", AOD " + Fmt(e.aod) + " -> " + Fmt(f.aod) + " (" +
                    Fmt(100.0 * aod_drop, 3) + "% lower), accuracy " + Fmt(e.accuracy) +
                    " -> " + Fmt(f.accuracy)};
}

// ---------------------------------------------------------------------------
// 7. validation-size sweep
// ---------------------------------------------------------------------------
Outcome ValidationSweep() {
  int degraded = 0;
  int ran = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ScenarioSplits sp =
        Scenario(BiasKind::kGroupSizeDiscrepancy, {{{1700, 300}, {1700, 300}}}, seed);
    const std::vector<SweepEntry> sweep =
        ValidationSizeSweep(sp.train, sp.val, FairIFConfig{}, {1.0, 0.1}, seed, &sp.test, 2);
    if (!sweep[0].report || !sweep[1].report) continue;
    ++ran;
    const FairnessReport& full = sweep[0].report->fairif.at("test");
    const FairnessReport& tenth = sweep[1].report->fairif.at("test");
    degraded += tenth.aod + tenth.eod >= full.aod + full.eod;
  }
  return {degraded >= 7, "fraction 0.1 no better (AOD+EOD) on " + std::to_string(degraded) +
                             "/10 seeds, " + std::to_string(ran) + " ran"};
}

// ---------------------------------------------------------------------------
// 8. finite differences and determinism
// ---------------------------------------------------------------------------
Outcome NumericalContracts() {
  const Dataset d = TeacherData(50, 10, 81);
  const FiniteDifferenceReport lr =
      FiniteDifferenceSuite(Model::Initialize({ModelKind::kLogistic, 10}, 0), d);
  const FiniteDifferenceReport mlp =
      FiniteDifferenceSuite(Model::Initialize({ModelKind::kMlp, 10, 64}, 1), d);

  const ScenarioSplits sp =
      Scenario(BiasKind::kGroupSizeDiscrepancy, {{{340, 60}, {340, 60}}}, 11);
  bool deterministic = true;
  for (ModelKind kind : {ModelKind::kLogistic, ModelKind::kMlp}) {
    FairIFConfig cfg;
    cfg.model.kind = kind;
    cfg.model.hidden = 16;
    if (kind == ModelKind::kMlp) {
      cfg.stage1.epochs = 300;
      cfg.stage2.epochs = 300;
    }
    const std::string first = ToJson(FairIFTrain(sp.train, sp.val, cfg, &sp.test).report, false).dump();
    const std::string second = ToJson(FairIFTrain(sp.train, sp.val, cfg, &sp.test).report, false).dump();
    deterministic = deterministic && first == second;
  }
  const bool pass = lr.grad_ok && lr.hvp_ok && mlp.grad_ok && mlp.hvp_ok && deterministic;
  return {pass, "logistic grad " + Fmt(lr.max_grad_rel_err, 3) + " hvp " +
                    Fmt(lr.max_hvp_rel_err, 3) + ", mlp grad " + Fmt(mlp.max_grad_rel_err, 3) +
                    " hvp " + Fmt(mlp.max_hvp_rel_err, 3) + ", reports " +
                    (deterministic ? "bitwise equal" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairweight acceptance suite"};
  std::vector<int> expected_list;
  app.add_option("--expected-failure", expected_list,
                 "Criterion number known not to hold; reported but not fatal");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> expected(expected_list.begin(), expected_list.end());

  const std::vector<std::function<Outcome()>> criteria = {
      InfluenceFidelity, SolverAgreement,  EpsilonOptimality, PropositionTrials,
      ScenarioMovement,  AdultReproduction, ValidationSweep,   NumericalContracts,
  };
  int passed = 0;
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    passed += o.pass;
    const bool known = expected.count(number) > 0;
    if (!o.pass && !known) ++unexpected;
    std::cout << "criterion " << number << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << (!o.pass && known ? "  (expected failure)" : "") << std::endl;
  }
  std::cout << passed << "/" << criteria.size() << " criteria passed" << std::endl;
  return unexpected == 0 ? 0 : 1;
}
