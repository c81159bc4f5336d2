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
#include <fstream>

#include "fairweight/reweight.hpp"
#include "fairweight/text.hpp"
#include "test_util.hpp"

using namespace fairweight;
using fairweight::testing::DenseRidgeEpsilon;
using fairweight::testing::GaussianVector;
using fairweight::testing::GradientDescentEpsilon;
using fairweight::testing::KindOf;
using fairweight::testing::RelErr;
using fairweight::testing::TempDir;

TEST_CASE("trivial epsilon solves") {
  const Eigen::VectorXd c1 = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
  const Eigen::VectorXd c2 = Eigen::VectorXd::Constant(5, 0.3);
  const EpsilonVector zero = SolveEpsilon(0.0, c1, 0.0, c2, 0.1);
  CHECK(zero.eps.norm() == 0.0);
  CHECK(zero.objective_value == 0.0);

  const EpsilonVector scalar =
      SolveEpsilon(1.0, Eigen::VectorXd::Constant(1, 2.0), 0.0, Eigen::VectorXd::Zero(1), 4.0);
  CHECK(scalar.eps(0) == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(scalar.objective_value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(scalar.lambda == 4.0);

  CHECK(KindOf([&] { SolveEpsilon(1.0, c1, 0.0, c2, 0.0); }) == ErrorKind::kConfig);
  CHECK(KindOf([&] { SolveEpsilon(1.0, c1, 0.0, c2, -1.0); }) == ErrorKind::kConfig);
  CHECK(KindOf([&] { SolveEpsilon(1.0, c1, 0.0, Eigen::VectorXd::Zero(4), 1.0); }) ==
        ErrorKind::kShape);
}

TEST_CASE("closed form matches dense ridge and gradient descent") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd c1 = GaussianVector(50, rng);
    const Eigen::VectorXd c2 = GaussianVector(50, rng);
    const Eigen::Vector2d a = GaussianVector(2, rng);
    const double lambda = 0.1;
    const EpsilonVector e = SolveEpsilon(a(0), c1, a(1), c2, lambda);
    CHECK(RelErr(e.eps, DenseRidgeEpsilon(a(0), c1, a(1), c2, lambda)) <= 1e-9);
    CHECK(RelErr(e.eps, GradientDescentEpsilon(a(0), c1, a(1), c2, lambda)) <= 1e-6);
    CHECK(e.objective_value ==
          doctest::Approx(EpsilonObjective(e.eps, a(0), c1, a(1), c2, lambda)).epsilon(1e-9));
    CHECK(e.objective_value <= a.squaredNorm());
  }
  // Dense agreement holds up to n = 500.
  const Eigen::VectorXd c1 = GaussianVector(500, rng);
  const Eigen::VectorXd c2 = GaussianVector(500, rng);
  CHECK(RelErr(SolveEpsilon(0.4, c1, -0.2, c2, 0.1).eps,
               DenseRidgeEpsilon(0.4, c1, -0.2, c2, 0.1)) <= 1e-9);
}

TEST_CASE("perturbing the optimum never helps") {
  std::mt19937_64 rng(5);
  const Eigen::VectorXd c1 = GaussianVector(30, rng);
  const Eigen::VectorXd c2 = GaussianVector(30, rng);
  const EpsilonVector e = SolveEpsilon(0.3, c1, -0.7, c2, 0.1);
  const double base = EpsilonObjective(e.eps, 0.3, c1, -0.7, c2, 0.1);
  int decreased = 0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd dir = GaussianVector(30, rng).normalized();
    if (EpsilonObjective(e.eps + 1e-3 * dir, 0.3, c1, -0.7, c2, 0.1) < base) ++decreased;
  }
  CHECK(decreased == 0);
}

TEST_CASE("epsilon norm shrinks as lambda grows") {
  std::mt19937_64 rng(8);
  const Eigen::VectorXd c1 = GaussianVector(40, rng);
  const Eigen::VectorXd c2 = GaussianVector(40, rng);
  double prev = INFINITY;
  for (double lambda : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
    const double norm = SolveEpsilon(0.5, c1, 0.2, c2, lambda).eps.norm();
    CHECK(norm <= prev);
    prev = norm;
  }
}

TEST_CASE("residual limits") {
  std::mt19937_64 rng(9);
  const Eigen::VectorXd c1 = GaussianVector(20, rng);
  const Eigen::VectorXd c2 = GaussianVector(20, rng);
  const double a1 = 0.25, a2 = -0.15;
  EpsilonVector none;
  none.eps = Eigen::VectorXd::Zero(20);
  CHECK(ResidualDiscrepancy(none, a1, c1, a2, c2) == std::pair<double, double>{a1, a2});

  const auto small = ResidualDiscrepancy(SolveEpsilon(a1, c1, a2, c2, 1e-8), a1, c1, a2, c2);
  CHECK(std::abs(small.first) <= 1e-4 * std::abs(a1));
  CHECK(std::abs(small.second) <= 1e-4 * std::abs(a2));

  const double big_lambda = 1e8 * (c1.squaredNorm() + c2.squaredNorm());
  const auto big = ResidualDiscrepancy(SolveEpsilon(a1, c1, a2, c2, big_lambda), a1, c1, a2, c2);
  CHECK(std::abs(big.first - a1) <= 1e-4);
  CHECK(std::abs(big.second - a2) <= 1e-4);
}

TEST_CASE("channel weights") {
  std::mt19937_64 rng(10);
  const Eigen::VectorXd c1 = GaussianVector(10, rng);
  const Eigen::VectorXd c2 = GaussianVector(10, rng);
  const EpsilonVector tpr_only = SolveEpsilon(0.3, c1, 0.4, c2, 0.1, {1.0, 0.0});
  CHECK(RelErr(tpr_only.eps, SolveEpsilon(0.3, c1, 0.0, Eigen::VectorXd::Zero(10), 0.1).eps) <=
        1e-12);
  const EpsilonVector doubled = SolveEpsilon(0.3, c1, 0.4, c2, 0.2, {2.0, 2.0});
  CHECK(RelErr(doubled.eps, SolveEpsilon(0.3, c1, 0.4, c2, 0.1).eps) <= 1e-12);
  CHECK(KindOf([&] { SolveEpsilon(0.3, c1, 0.4, c2, 0.1, {-1.0, 1.0}); }) == ErrorKind::kConfig);
}

TEST_CASE("weights from epsilon") {
  EpsilonVector e;
  e.eps = Eigen::VectorXd::Zero(4);
  CHECK(ApplyWeights(e, 4).w == Eigen::VectorXd::Constant(4, 0.25));
  e.eps(0) = -0.5;
  const WeightVector clamp = ApplyWeights(e, 4);
  CHECK(clamp.w == Eigen::Vector4d(0.0, 0.25, 0.25, 0.25));
  CHECK(clamp.clamped_count == 1);
  const WeightVector renorm = ApplyWeights(e, 4, WeightPolicy::kClampRenormalize);
  CHECK(renorm.w(0) == 0.0);
  for (int i = 1; i < 4; ++i) CHECK(renorm.w(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  e.eps = Eigen::VectorXd::Constant(4, -1.0);
  CHECK(KindOf([&] { ApplyWeights(e, 4); }) == ErrorKind::kDegenerateWeights);
  CHECK(KindOf([&] { ApplyWeights(e, 5); }) == ErrorKind::kShape);
  CHECK(ParseWeightPolicy("clamp_renormalize") == WeightPolicy::kClampRenormalize);
  CHECK(KindOf([] { ParseWeightPolicy("none"); }) == ErrorKind::kConfig);
}

TEST_CASE("weights file round trip") {
  std::mt19937_64 rng(11);
  const Eigen::VectorXd c1 = GaussianVector(12, rng);
  const Eigen::VectorXd c2 = GaussianVector(12, rng);
  const EpsilonVector e = SolveEpsilon(0.3, c1, -0.1, c2, 0.1);
  const WeightVector w = ApplyWeights(e, 12);
  TempDir dir;
  WriteWeightsCsv(dir.File("w.csv"), e, w);
  const std::string text = ReadFile(dir.File("w.csv"));
  CHECK(text.rfind("# n=12\n", 0) == 0);
  CHECK(text.find("index,epsilon,weight\n") != std::string::npos);
  const WeightFile back = ReadWeightsCsv(dir.File("w.csv"));
  CHECK(back.eps.eps == e.eps);
  CHECK(back.weights.w == w.w);
  CHECK(back.eps.lambda == e.lambda);
  CHECK(back.eps.objective_value == e.objective_value);
  std::ofstream(dir.File("bad.csv")) << "# n=2\nidx,eps\n0,1\n";
  CHECK(KindOf([&] { ReadWeightsCsv(dir.File("bad.csv")); }) == ErrorKind::kFormat);
}
