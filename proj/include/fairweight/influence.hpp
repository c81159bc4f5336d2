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

#ifndef FAIRWEIGHT_INFLUENCE_HPP_
#define FAIRWEIGHT_INFLUENCE_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairweight/datamodel.hpp"
#include "fairweight/metrics.hpp"
#include "fairweight/model.hpp"

namespace fairweight {

// A symmetric curvature operator H = sum_i w_i H_i that inverse-HVP solvers
// can apply in full or on a mini-batch of its terms.
class CurvatureOperator {
 public:
  virtual ~CurvatureOperator() = default;
  virtual Eigen::Index dim() const = 0;
  // Number of terms H_i; mini-batches draw indices from [0, term_count()).
  virtual Eigen::Index term_count() const = 0;
  virtual ParameterVector Apply(const ParameterVector& v) const = 0;
  // Unbiased estimate of H v from the listed terms (drawn with replacement).
  virtual ParameterVector ApplyBatch(const std::vector<Eigen::Index>& terms,
                                     const ParameterVector& v) const = 0;
};

// Training-objective Hessian of a model, with per-sample weights (uniform
// 1/n when omitted).
class ModelCurvature final : public CurvatureOperator {
 public:
  ModelCurvature(Model model, const Dataset& data, HessianKind kind,
                 std::optional<Eigen::VectorXd> weights = std::nullopt);

  Eigen::Index dim() const override { return model_.param_count(); }
  Eigen::Index term_count() const override { return data_->n(); }
  ParameterVector Apply(const ParameterVector& v) const override;
  ParameterVector ApplyBatch(const std::vector<Eigen::Index>& terms,
                             const ParameterVector& v) const override;

 private:
  Model model_;
  const Dataset* data_;
  HessianKind kind_;
  Eigen::VectorXd weights_;
};

// Fixed dense matrix; mini-batches return the exact product.
class MatrixCurvature final : public CurvatureOperator {
 public:
  explicit MatrixCurvature(Eigen::MatrixXd h) : h_(std::move(h)) {}

  Eigen::Index dim() const override { return h_.rows(); }
  Eigen::Index term_count() const override { return 1; }
  ParameterVector Apply(const ParameterVector& v) const override { return h_ * v; }
  ParameterVector ApplyBatch(const std::vector<Eigen::Index>&,
                             const ParameterVector& v) const override {
    return h_ * v;
  }

 private:
  Eigen::MatrixXd h_;
};

enum class SolverMethod { kExplicit, kCg, kLissa };

const char* SolverMethodName(SolverMethod method);
SolverMethod ParseSolverMethod(const std::string& name);

struct LissaConfig {
  int depth = 1000;      // J
  int repeats = 4;       // T
  int batch_size = 16;   // B
  double damping = 0.01;
  // <= 0 selects 1.5x a 20-iteration power-method estimate of ||H + damping I||.
  double scale = 0.0;
  std::uint64_t seed = 0;
};

struct InverseHvpResult {
  ParameterVector vector;
  SolverMethod method = SolverMethod::kExplicit;
  // ||(H + damping I) x - v|| / ||v||, 0 when v = 0.
  double residual = 0.0;
  int iterations = 0;
  double scale = 1.0;  // LiSSA only
};

// Largest eigenvalue magnitude of H + damping I by power iteration.
double EstimateSpectralNorm(const CurvatureOperator& h, double damping,
                            int iterations = 20, std::uint64_t seed = 0);

// Approximates (H + damping I)^{-1} v with the stochastic Neumann recursion
//   x_j = v + (I - (H_B + damping I) / scale) x_{j-1},  x_0 = v,
// averaged over `repeats` independent chains and divided by `scale`.
// With scale = 1 and damping = 0 this is the plain recursion
// x_j = v + (I - H_B) x_{j-1}.
InverseHvpResult InverseHvpLissa(const CurvatureOperator& h,
                                 const ParameterVector& v,
                                 const LissaConfig& cfg);

// Conjugate gradients on (H + damping I) x = v, stopping at relative
// residual <= tol. Throws kConvergence if max_iter is exhausted.
InverseHvpResult InverseHvpCg(const CurvatureOperator& h,
                              const ParameterVector& v, double damping,
                              double tol = 1e-10, int max_iter = 1000);

// Dense factorization of H + damping I, reusable across right-hand sides.
class ExplicitInverse {
 public:
  ExplicitInverse(const CurvatureOperator& h, double damping);
  explicit ExplicitInverse(const Eigen::MatrixXd& damped_hessian);

  ParameterVector Solve(const ParameterVector& v) const;
  Eigen::MatrixXd Solve(const Eigen::MatrixXd& rhs) const;
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

InverseHvpResult InverseHvpExplicit(const CurvatureOperator& h,
                                    const ParameterVector& v, double damping);

struct SolverConfig {
  SolverMethod method = SolverMethod::kCg;
  // Applied by every method (overrides lissa.damping).
  double damping = 0.01;
  LissaConfig lissa;
  double cg_tol = 1e-10;
  int cg_max_iter = 2000;
  // Defaults to exact for logistic regression and Gauss-Newton for the MLP.
  std::optional<HessianKind> hessian;
};

HessianKind ResolveHessianKind(const SolverConfig& solver, const Model& model);

InverseHvpResult InverseHvp(const CurvatureOperator& h, const ParameterVector& v,
                            const SolverConfig& solver);

// -H^{-1} grad loss(z): parameter change per unit upweighting of z.
ParameterVector InfluenceOnParams(const Model& model, const Dataset& data,
                                  const Sample& z, const SolverConfig& solver);

// -grad loss(z_test)^T H^{-1} grad loss(z): test-loss change per unit
// upweighting of z.
double InfluenceOnLoss(const Model& model, const Dataset& data, const Sample& z,
                       const Sample& z_test, const SolverConfig& solver);

// Coefficients of the linearized group-gap equations. For each channel
//   gap(eps) ~= a + c . eps,
// a = F(group 0) - F(group 1) on the validation set and
// c_i = (mean grad F(group 1) - mean grad F(group 0))^T H^{-1} grad loss(z_i).
struct InfluenceCoefficients {
  double a_tpr = 0.0;
  double a_tnr = 0.0;
  Eigen::VectorXd c_tpr;
  Eigen::VectorXd c_tnr;
  Eigen::VectorXd grad_norm;  // ||grad loss(z_i)|| at the trained parameters
  double residual_tpr = 0.0;
  double residual_tnr = 0.0;
};

// Two inverse-HVP solves (one per channel) followed by n gradient dot
// products. The model is expected to be at a stationary point on `train`.
InfluenceCoefficients ComputeInfluenceCoefficients(
    const Model& model, const Dataset& train, const Dataset& val,
    const SoftMetricConfig& soft, const SolverConfig& solver);

// CSV with columns index,c_tpr,c_tnr,grad_norm.
void WriteCoefficientsCsv(const std::string& path,
                          const InfluenceCoefficients& coeffs);

}  // namespace fairweight

#endif  // FAIRWEIGHT_INFLUENCE_HPP_
