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

#include "fairweight/reweight.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "fairweight/error.hpp"
#include "fairweight/text.hpp"

namespace fairweight {

double EpsilonObjective(const Eigen::VectorXd& eps, double a_tpr,
                        const Eigen::VectorXd& c_tpr, double a_tnr,
                        const Eigen::VectorXd& c_tnr, double lambda,
                        ChannelWeights channel_weights) {
  const double r1 = a_tpr + c_tpr.dot(eps);
  const double r2 = a_tnr + c_tnr.dot(eps);
  return channel_weights[0] * r1 * r1 + channel_weights[1] * r2 * r2 +
         lambda * eps.squaredNorm();
}

EpsilonVector SolveEpsilon(double a_tpr, const Eigen::VectorXd& c_tpr,
                           double a_tnr, const Eigen::VectorXd& c_tnr,
                           double lambda, ChannelWeights channel_weights) {
  if (!(lambda > 0.0)) {
    throw Error(ErrorKind::kConfig,
                "lambda must be positive; the unregularized problem is "
                "underdetermined");
  }
  if (c_tpr.size() != c_tnr.size()) {
    throw Error(ErrorKind::kShape, "coefficient vectors differ in length");
  }
  if (channel_weights[0] < 0.0 || channel_weights[1] < 0.0) {
    throw Error(ErrorKind::kConfig, "channel weights must be nonnegative");
  }
  const Eigen::Index n = c_tpr.size();
  const double s1 = std::sqrt(channel_weights[0]);
  const double s2 = std::sqrt(channel_weights[1]);
  Eigen::MatrixXd c(2, n);
  c.row(0) = s1 * c_tpr.transpose();
  c.row(1) = s2 * c_tnr.transpose();
  const Eigen::Vector2d a(s1 * a_tpr, s2 * a_tnr);
  Eigen::Matrix2d gram = c * c.transpose();
  gram.diagonal().array() += lambda;
  const Eigen::Vector2d dual = gram.ldlt().solve(a);

  EpsilonVector out;
  out.lambda = lambda;
  out.eps = -(c.transpose() * dual);
  out.objective_value = EpsilonObjective(out.eps, a_tpr, c_tpr, a_tnr, c_tnr,
                                         lambda, channel_weights);
  return out;
}

std::pair<double, double> ResidualDiscrepancy(const EpsilonVector& eps,
                                              double a_tpr,
                                              const Eigen::VectorXd& c_tpr,
                                              double a_tnr,
                                              const Eigen::VectorXd& c_tnr) {
  if (c_tpr.size() != eps.eps.size() || c_tnr.size() != eps.eps.size()) {
    throw Error(ErrorKind::kShape, "epsilon and coefficient lengths differ");
  }
  return {a_tpr + c_tpr.dot(eps.eps), a_tnr + c_tnr.dot(eps.eps)};
}

const char* WeightPolicyName(WeightPolicy policy) {
  return policy == WeightPolicy::kClamp ? "clamp" : "clamp_renormalize";
}

WeightPolicy ParseWeightPolicy(const std::string& name) {
  if (name == "clamp") return WeightPolicy::kClamp;
  if (name == "clamp_renormalize") return WeightPolicy::kClampRenormalize;
  throw Error(ErrorKind::kConfig, "unknown weight policy '" + name + "'");
}

WeightVector ApplyWeights(const EpsilonVector& eps, Eigen::Index n,
                          WeightPolicy policy) {
  if (eps.eps.size() != n) {
    throw Error(ErrorKind::kShape, "epsilon length " +
                                       std::to_string(eps.eps.size()) +
                                       " does not match n = " + std::to_string(n));
  }
  WeightVector out;
  out.w.resize(n);
  const double base = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double raw = base + eps.eps(i);
    if (raw < 0.0) ++out.clamped_count;
    out.w(i) = std::max(0.0, raw);
  }
  const double total = out.w.sum();
  if (!(total > 0.0)) {
    throw Error(ErrorKind::kDegenerateWeights,
                "every sample weight was clamped to zero");
  }
  if (policy == WeightPolicy::kClampRenormalize) out.w /= total;
  return out;
}

void WriteWeightsCsv(const std::string& path, const EpsilonVector& eps,
                     const WeightVector& weights) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  out << "# n=" << eps.eps.size() << '\n';
  out << "# lambda=" << FormatDouble(eps.lambda) << '\n';
  out << "# objective_value=" << FormatDouble(eps.objective_value) << '\n';
  out << "index,epsilon,weight\n";
  for (Eigen::Index i = 0; i < eps.eps.size(); ++i) {
    out << i << ',' << FormatDouble(eps.eps(i)) << ','
        << FormatDouble(weights.w(i)) << '\n';
  }
}

WeightFile ReadWeightsCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  std::map<std::string, std::string> meta;
  std::string line;
  bool header_seen = false;
  std::vector<double> eps;
  std::vector<double> w;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = StripCr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        meta[std::string(Trim(std::string_view(line).substr(1, eq - 1)))] =
            std::string(Trim(std::string_view(line).substr(eq + 1)));
      }
      continue;
    }
    if (!header_seen) {
      if (Trim(line) != "index,epsilon,weight") {
        throw Error(ErrorKind::kFormat, "weights file header must be index,epsilon,weight");
      }
      header_seen = true;
      continue;
    }
    const auto fields = SplitFields(line, ',');
    const auto idx = fields.size() == 3 ? ParseInt(fields[0]) : std::nullopt;
    const auto e = fields.size() == 3 ? ParseDouble(fields[1]) : std::nullopt;
    const auto wv = fields.size() == 3 ? ParseDouble(fields[2]) : std::nullopt;
    if (!idx || !e || !wv || *idx != static_cast<std::int64_t>(row)) {
      throw Error(ErrorKind::kFormat,
                  "malformed weights row " + std::to_string(row));
    }
    eps.push_back(*e);
    w.push_back(*wv);
    ++row;
  }
  if (!header_seen) throw Error(ErrorKind::kFormat, "weights file has no header");
  WeightFile file;
  file.eps.eps = Eigen::Map<Eigen::VectorXd>(eps.data(), static_cast<Eigen::Index>(eps.size()));
  file.weights.w = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  if (auto it = meta.find("lambda"); it != meta.end()) {
    file.eps.lambda = ParseDouble(it->second).value_or(0.0);
  }
  if (auto it = meta.find("objective_value"); it != meta.end()) {
    file.eps.objective_value = ParseDouble(it->second).value_or(0.0);
  }
  if (auto it = meta.find("n"); it != meta.end()) {
    if (ParseInt(it->second) != static_cast<std::int64_t>(eps.size())) {
      throw Error(ErrorKind::kFormat, "weights file row count disagrees with n");
    }
  }
  for (Eigen::Index i = 0; i < file.eps.eps.size(); ++i) {
    if (1.0 / static_cast<double>(eps.size()) + file.eps.eps(i) < 0.0) {
      ++file.weights.clamped_count;
    }
  }
  return file;
}

}  // namespace fairweight
