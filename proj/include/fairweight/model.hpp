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

#ifndef FAIRWEIGHT_MODEL_HPP_
#define FAIRWEIGHT_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairweight/datamodel.hpp"

namespace fairweight {

using ParameterVector = Eigen::VectorXd;
using FeatureRow = Eigen::Ref<const Eigen::RowVectorXd>;

enum class ModelKind { kLogistic = 0, kMlp = 1 };

const char* ModelKindName(ModelKind kind);
ModelKind ParseModelKind(const std::string& name);

// Which curvature an HVP uses. For logistic regression both are identical.
enum class HessianKind { kExact, kGaussNewton };

struct ModelSpec {
  ModelKind kind = ModelKind::kLogistic;
  Eigen::Index input_dim = 0;
  Eigen::Index hidden = 64;  // MLP only

  Eigen::Index ParamCount() const;
};

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] inside the loss.
inline constexpr double kProbClamp = 1e-7;

// Binary classifier f(x) = sigmoid(logit(x; params)).
//
// Parameter layout:
//   logistic: [w (d), b]
//   mlp:      [W1 (hidden x d, row-major), b1 (hidden), w2 (hidden), b2]
//             logit = w2 . tanh(W1 x + b1) + b2
class Model {
 public:
  Model() = default;
  Model(ModelSpec spec, ParameterVector params);

  // Zero parameters for logistic regression; seeded scaled-uniform init for
  // the MLP hidden layer.
  static Model Initialize(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  ModelKind kind() const { return spec_.kind; }
  Eigen::Index input_dim() const { return spec_.input_dim; }
  Eigen::Index param_count() const { return params_.size(); }
  const ParameterVector& params() const { return params_; }
  Model WithParams(ParameterVector params) const;

  double Logit(FeatureRow x) const;
  // d logit / d params.
  ParameterVector LogitGrad(FeatureRow x) const;
  // (d^2 logit / d params^2) v.
  ParameterVector LogitHessVec(FeatureRow x, const ParameterVector& v) const;

  double PredictProba(FeatureRow x) const;
  // 1 iff PredictProba(x) >= 0.5.
  int Classify(FeatureRow x) const;

  double Loss(FeatureRow x, int y) const;
  ParameterVector Grad(FeatureRow x, int y) const;

  // Vector-valued helpers over a dataset.
  Eigen::VectorXd Logits(const Dataset& data) const;
  std::vector<int> Predictions(const Dataset& data) const;

  // sum_i w_i loss(z_i) and its gradient.
  double WeightedLoss(const Dataset& data, const Eigen::VectorXd& weights) const;
  ParameterVector WeightedGrad(const Dataset& data,
                               const Eigen::VectorXd& weights) const;
  // Mean loss / gradient over the dataset.
  double MeanLoss(const Dataset& data) const;
  ParameterVector MeanGrad(const Dataset& data) const;

  // Per-sample gradients as columns (P x n).
  Eigen::MatrixXd SampleGrads(const Dataset& data) const;
  // d loss_i / d logit_i for every sample.
  Eigen::VectorXd LossSlopes(const Dataset& data) const;
  // (d logit_i / d params) . v for every sample.
  Eigen::VectorXd LogitJvp(const Dataset& data, const ParameterVector& v) const;
  // grad loss(z_i) . v for every sample, without forming the gradients.
  Eigen::VectorXd SampleGradDots(const Dataset& data,
                                 const ParameterVector& v) const;

  bool operator==(const Model& other) const;

 private:
  void CheckDim(FeatureRow x) const;

  ModelSpec spec_;
  ParameterVector params_;
};

// H v for H = sum_i w_i d^2 loss(z_i) / d params^2.
ParameterVector Hvp(const Model& model, const Dataset& data,
                    const Eigen::VectorXd& weights, const ParameterVector& v,
                    HessianKind kind = HessianKind::kExact);

// Dense P x P Hessian built column by column from Hvp. Test/oracle use.
Eigen::MatrixXd DenseHessian(const Model& model, const Dataset& data,
                             const Eigen::VectorXd& weights,
                             HessianKind kind = HessianKind::kExact);

Eigen::VectorXd UniformWeights(Eigen::Index n);

struct TrainConfig {
  double learning_rate = 0.5;
  int epochs = 3000;
  // 0 selects full batch for n <= kFullBatchLimit and 256 otherwise.
  int batch_size = 0;
  std::uint64_t seed = 0;
  // Stop once the full objective gradient norm is at or below this.
  double convergence_tol = 1e-6;
  // Adds (l2 / 2) ||theta||^2 to the objective.
  double l2 = 0.0;
};

inline constexpr Eigen::Index kFullBatchLimit = 10000;

struct TrainResult {
  Model model;
  double grad_norm = 0.0;
  std::vector<double> loss_trajectory;  // objective at the start of each epoch
  int epochs_run = 0;
  bool converged = false;
};

// Gradient descent on sum_i w_i loss(z_i, theta), starting from `init`.
// Throws kDivergence naming the epoch if the objective becomes non-finite.
TrainResult TrainErm(const Model& init, const Dataset& data,
                     const Eigen::VectorXd& weights, const TrainConfig& cfg);

// Binary checkpoint: magic "FWCKPT01", u32 kind, u64 input_dim, u64 hidden,
// u64 P, then P little-endian float64 values.
void SaveCheckpoint(const std::string& path, const Model& model);
Model LoadCheckpoint(const std::string& path);

}  // namespace fairweight

#endif  // FAIRWEIGHT_MODEL_HPP_
