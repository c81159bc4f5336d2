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

#ifndef FAIRWEIGHT_REWEIGHT_HPP_
#define FAIRWEIGHT_REWEIGHT_HPP_

#include <array>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace fairweight {

struct EpsilonVector {
  Eigen::VectorXd eps;
  double lambda = 0.0;
  double objective_value = 0.0;
};

// Per-channel weights on the squared TPR and TNR gap terms.
using ChannelWeights = std::array<double, 2>;

// w_tpr (a_tpr + c_tpr.eps)^2 + w_tnr (a_tnr + c_tnr.eps)^2 + lambda ||eps||^2
double EpsilonObjective(const Eigen::VectorXd& eps, double a_tpr,
                        const Eigen::VectorXd& c_tpr, double a_tnr,
                        const Eigen::VectorXd& c_tnr, double lambda,
                        ChannelWeights channel_weights = {1.0, 1.0});

// Exact minimizer of EpsilonObjective through the 2x2 dual system
//   eps = -C^T (C C^T + lambda I_2)^{-1} a,
// where the rows of C are sqrt(w_k) c_k and a_k is scaled likewise.
EpsilonVector SolveEpsilon(double a_tpr, const Eigen::VectorXd& c_tpr,
                           double a_tnr, const Eigen::VectorXd& c_tnr,
                           double lambda,
                           ChannelWeights channel_weights = {1.0, 1.0});

// Predicted post-reweighting gaps (a_tpr + c_tpr.eps, a_tnr + c_tnr.eps).
std::pair<double, double> ResidualDiscrepancy(const EpsilonVector& eps,
                                              double a_tpr,
                                              const Eigen::VectorXd& c_tpr,
                                              double a_tnr,
                                              const Eigen::VectorXd& c_tnr);

enum class WeightPolicy { kClamp, kClampRenormalize };

const char* WeightPolicyName(WeightPolicy policy);
WeightPolicy ParseWeightPolicy(const std::string& name);

struct WeightVector {
  Eigen::VectorXd w;
  Eigen::Index clamped_count = 0;
};

// w_i = max(0, 1/n + eps_i), optionally rescaled to sum to one.
WeightVector ApplyWeights(const EpsilonVector& eps, Eigen::Index n,
                          WeightPolicy policy = WeightPolicy::kClamp);

// CSV "index,epsilon,weight" preceded by "# n=", "# lambda=" and
// "# objective_value=" comment lines.
void WriteWeightsCsv(const std::string& path, const EpsilonVector& eps,
                     const WeightVector& weights);

struct WeightFile {
  EpsilonVector eps;
  WeightVector weights;
};

WeightFile ReadWeightsCsv(const std::string& path);

}  // namespace fairweight

#endif  // FAIRWEIGHT_REWEIGHT_HPP_
