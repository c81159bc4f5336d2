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

#ifndef FAIRWEIGHT_TESTS_TEST_UTIL_HPP_
#define FAIRWEIGHT_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fairweight/datamodel.hpp"
#include "fairweight/error.hpp"

namespace fairweight::testing {

// Gaussian features with labels drawn from a random logistic teacher.
inline Dataset TeacherData(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                           bool with_groups = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd w(d);
  for (Eigen::Index j = 0; j < d; ++j) w(j) = normal(rng);
  FeatureMatrix x(n, d);
  std::vector<int> y(static_cast<std::size_t>(n));
  std::vector<int> s(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
    const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(w)));
    y[static_cast<std::size_t>(i)] = unif(rng) < p ? 1 : 0;
    s[static_cast<std::size_t>(i)] = unif(rng) < 0.3 ? 1 : 0;
  }
  if (with_groups) return Dataset(std::move(x), std::move(y), std::move(s));
  return Dataset(std::move(x), std::move(y));
}

inline double RelErr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

template <typename Fn>
ErrorKind KindOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected an error");
}

template <typename Fn>
std::string MessageOf(Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

// Dense n x n ridge solution of the epsilon objective.
inline Eigen::VectorXd DenseRidgeEpsilon(double a_tpr, const Eigen::VectorXd& c_tpr,
                                         double a_tnr, const Eigen::VectorXd& c_tnr,
                                         double lambda) {
  const Eigen::Index n = c_tpr.size();
  Eigen::MatrixXd c(2, n);
  c.row(0) = c_tpr.transpose();
  c.row(1) = c_tnr.transpose();
  const Eigen::MatrixXd normal =
      c.transpose() * c + lambda * Eigen::MatrixXd::Identity(n, n);
  return normal.ldlt().solve(-c.transpose() * Eigen::Vector2d(a_tpr, a_tnr));
}

// Plain gradient descent on the epsilon objective from zero.
inline Eigen::VectorXd GradientDescentEpsilon(double a_tpr, const Eigen::VectorXd& c_tpr,
                                              double a_tnr, const Eigen::VectorXd& c_tnr,
                                              double lambda, int iterations = 200000) {
  const double lipschitz = 2.0 * (c_tpr.squaredNorm() + c_tnr.squaredNorm() + lambda);
  Eigen::VectorXd eps = Eigen::VectorXd::Zero(c_tpr.size());
  for (int it = 0; it < iterations; ++it) {
    const double r1 = a_tpr + c_tpr.dot(eps);
    const double r2 = a_tnr + c_tnr.dot(eps);
    const Eigen::VectorXd grad = 2.0 * (r1 * c_tpr + r2 * c_tnr + lambda * eps);
    if (grad.norm() <= 1e-15 * (1.0 + eps.norm())) break;
    eps -= grad / lipschitz;
  }
  return eps;
}

inline Eigen::VectorXd GaussianVector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("fairweight_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string File(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fairweight::testing

#endif  // FAIRWEIGHT_TESTS_TEST_UTIL_HPP_
