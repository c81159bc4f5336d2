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

#include "fairweight/influence.hpp"

#include <cmath>
#include <fstream>

#include "fairweight/error.hpp"
#include "fairweight/text.hpp"

namespace fairweight {

ModelCurvature::ModelCurvature(Model model, const Dataset& data,
                               HessianKind kind,
                               std::optional<Eigen::VectorXd> weights)
    : model_(std::move(model)),
      data_(&data),
      kind_(kind),
      weights_(weights ? std::move(*weights) : UniformWeights(data.n())) {
  if (weights_.size() != data.n()) {
    throw Error(ErrorKind::kShape, "curvature weight vector length mismatch");
  }
}

ParameterVector ModelCurvature::Apply(const ParameterVector& v) const {
  return Hvp(model_, *data_, weights_, v, kind_);
}

ParameterVector ModelCurvature::ApplyBatch(const std::vector<Eigen::Index>& terms,
                                           const ParameterVector& v) const {
  if (terms.empty()) return Apply(v);
  const Dataset batch = data_->Subset(terms);
  const double scale =
      static_cast<double>(data_->n()) / static_cast<double>(terms.size());
  Eigen::VectorXd w(static_cast<Eigen::Index>(terms.size()));
  for (std::size_t k = 0; k < terms.size(); ++k) {
    w(static_cast<Eigen::Index>(k)) = scale * weights_(terms[k]);
  }
  return Hvp(model_, batch, w, v, kind_);
}

const char* SolverMethodName(SolverMethod method) {
  switch (method) {
    case SolverMethod::kExplicit: return "explicit";
    case SolverMethod::kCg: return "cg";
    case SolverMethod::kLissa: return "lissa";
  }
  return "unknown";
}

SolverMethod ParseSolverMethod(const std::string& name) {
  if (name == "explicit") return SolverMethod::kExplicit;
  if (name == "cg") return SolverMethod::kCg;
  if (name == "lissa") return SolverMethod::kLissa;
  throw Error(ErrorKind::kConfig, "unknown solver '" + name + "'");
}

namespace {

void CheckRhs(const CurvatureOperator& h, const ParameterVector& v) {
  if (v.size() != h.dim()) {
    throw Error(ErrorKind::kShape, "right-hand side has length " +
                                       std::to_string(v.size()) + ", operator has " +
                                       std::to_string(h.dim()));
  }
}

double RelativeResidual(const CurvatureOperator& h, double damping,
                        const ParameterVector& x, const ParameterVector& v) {
  const double vn = v.norm();
  if (vn == 0.0) return (h.Apply(x) + damping * x).norm();
  return (h.Apply(x) + damping * x - v).norm() / vn;
}

}  // namespace

double EstimateSpectralNorm(const CurvatureOperator& h, double damping,
                            int iterations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ParameterVector x(h.dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
  x.normalize();
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    ParameterVector y = h.Apply(x) + damping * x;
    estimate = y.norm();
    if (estimate == 0.0) return 0.0;
    x = y / estimate;
  }
  return estimate;
}

InverseHvpResult InverseHvpLissa(const CurvatureOperator& h,
                                 const ParameterVector& v,
                                 const LissaConfig& cfg) {
  CheckRhs(h, v);
  if (cfg.depth <= 0 || cfg.repeats <= 0 || cfg.batch_size <= 0 ||
      !(cfg.damping >= 0.0)) {
    throw Error(ErrorKind::kConfig, "invalid LiSSA configuration");
  }
  InverseHvpResult result;
  result.method = SolverMethod::kLissa;
  double scale = cfg.scale;
  if (!(scale > 0.0)) {
    scale = 1.5 * EstimateSpectralNorm(h, cfg.damping, 20, cfg.seed);
    if (!(scale > 0.0)) scale = 1.0;
  }
  result.scale = scale;
  const double vn = v.norm();
  if (vn == 0.0) {
    result.vector = ParameterVector::Zero(v.size());
    return result;
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, h.term_count() - 1);
  std::vector<Eigen::Index> batch(static_cast<std::size_t>(cfg.batch_size));
  ParameterVector sum = ParameterVector::Zero(v.size());
  for (int t = 0; t < cfg.repeats; ++t) {
    ParameterVector x = v;
    for (int j = 0; j < cfg.depth; ++j) {
      for (auto& idx : batch) idx = pick(rng);
      const ParameterVector hx = h.ApplyBatch(batch, x);
      x = v + x - (hx + cfg.damping * x) / scale;
      if (!(x.norm() <= 1e6 * vn)) {
        throw Error(ErrorKind::kDivergence,
                    "LiSSA iterate exceeded 1e6 * ||v|| at depth " +
                        std::to_string(j) + "; increase scale or damping");
      }
    }
    sum += x;
  }
  result.vector = sum / (static_cast<double>(cfg.repeats) * scale);
  result.iterations = cfg.depth * cfg.repeats;
  result.residual = RelativeResidual(h, cfg.damping, result.vector, v);
  return result;
}

InverseHvpResult InverseHvpCg(const CurvatureOperator& h,
                              const ParameterVector& v, double damping,
                              double tol, int max_iter) {
  CheckRhs(h, v);
  if (!(damping >= 0.0) || !(tol > 0.0) || max_iter <= 0) {
    throw Error(ErrorKind::kConfig, "invalid conjugate-gradient configuration");
  }
  InverseHvpResult result;
  result.method = SolverMethod::kCg;
  ParameterVector x = ParameterVector::Zero(v.size());
  const double vn = v.norm();
  if (vn == 0.0) {
    result.vector = x;
    return result;
  }
  ParameterVector r = v;
  ParameterVector p = r;
  double rr = r.squaredNorm();
  int it = 0;
  for (; it < max_iter; ++it) {
    if (std::sqrt(rr) / vn <= tol) break;
    const ParameterVector ap = h.Apply(p) + damping * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) {
      throw Error(ErrorKind::kConvergence,
                  "damped Hessian is not positive definite along a CG direction");
    }
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  result.vector = x;
  result.iterations = it;
  result.residual = RelativeResidual(h, damping, x, v);
  if (std::sqrt(rr) / vn > tol) {
    throw Error(ErrorKind::kConvergence,
                "conjugate gradients stopped after " + std::to_string(it) +
                    " iterations at relative residual " +
                    FormatDouble(std::sqrt(rr) / vn, 6));
  }
  return result;
}

namespace {

Eigen::MatrixXd DampedDense(const CurvatureOperator& h, double damping) {
  const Eigen::Index p = h.dim();
  Eigen::MatrixXd m(p, p);
  ParameterVector e = ParameterVector::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    e(j) = 1.0;
    m.col(j) = h.Apply(e);
    e(j) = 0.0;
  }
  m = 0.5 * (m + m.transpose());
  m.diagonal().array() += damping;
  return m;
}

}  // namespace

ExplicitInverse::ExplicitInverse(const CurvatureOperator& h, double damping)
    : ExplicitInverse(DampedDense(h, damping)) {}

ExplicitInverse::ExplicitInverse(const Eigen::MatrixXd& damped_hessian)
    : matrix_(damped_hessian), ldlt_(damped_hessian) {
  if (ldlt_.info() != Eigen::Success) {
    throw Error(ErrorKind::kConvergence, "dense Hessian factorization failed");
  }
  // LDLT of a singular matrix "succeeds"; catch exact zero pivots here.
  if ((ldlt_.vectorD().array() == 0.0).any()) {
    throw Error(ErrorKind::kConvergence,
                "damped Hessian is singular; increase damping");
  }
}

ParameterVector ExplicitInverse::Solve(const ParameterVector& v) const {
  if (v.size() != matrix_.rows()) {
    throw Error(ErrorKind::kShape, "right-hand side length mismatch");
  }
  return ldlt_.solve(v);
}

Eigen::MatrixXd ExplicitInverse::Solve(const Eigen::MatrixXd& rhs) const {
  return ldlt_.solve(rhs);
}

InverseHvpResult InverseHvpExplicit(const CurvatureOperator& h,
                                    const ParameterVector& v, double damping) {
  CheckRhs(h, v);
  InverseHvpResult result;
  result.method = SolverMethod::kExplicit;
  const ExplicitInverse inverse(h, damping);
  result.vector = inverse.Solve(v);
  const double vn = v.norm();
  result.residual =
      vn == 0.0 ? 0.0 : (inverse.matrix() * result.vector - v).norm() / vn;
  return result;
}

HessianKind ResolveHessianKind(const SolverConfig& solver, const Model& model) {
  if (solver.hessian) return *solver.hessian;
  return model.kind() == ModelKind::kMlp ? HessianKind::kGaussNewton
                                         : HessianKind::kExact;
}

InverseHvpResult InverseHvp(const CurvatureOperator& h, const ParameterVector& v,
                            const SolverConfig& solver) {
  switch (solver.method) {
    case SolverMethod::kExplicit:
      return InverseHvpExplicit(h, v, solver.damping);
    case SolverMethod::kCg:
      return InverseHvpCg(h, v, solver.damping, solver.cg_tol, solver.cg_max_iter);
    case SolverMethod::kLissa: {
      LissaConfig cfg = solver.lissa;
      cfg.damping = solver.damping;
      return InverseHvpLissa(h, v, cfg);
    }
  }
  throw Error(ErrorKind::kConfig, "unknown solver");
}

ParameterVector InfluenceOnParams(const Model& model, const Dataset& data,
                                  const Sample& z, const SolverConfig& solver) {
  const ModelCurvature h(model, data, ResolveHessianKind(solver, model));
  const ParameterVector g = model.Grad(z.features.transpose(), z.label);
  return -InverseHvp(h, g, solver).vector;
}

double InfluenceOnLoss(const Model& model, const Dataset& data, const Sample& z,
                       const Sample& z_test, const SolverConfig& solver) {
  const ParameterVector test_grad =
      model.Grad(z_test.features.transpose(), z_test.label);
  return test_grad.dot(InfluenceOnParams(model, data, z, solver));
}

InfluenceCoefficients ComputeInfluenceCoefficients(
    const Model& model, const Dataset& train, const Dataset& val,
    const SoftMetricConfig& soft, const SolverConfig& solver) {
  const Dataset slice0 = val.GroupSlice(0);
  const Dataset slice1 = val.GroupSlice(1);
  const ModelCurvature h(model, train, ResolveHessianKind(solver, model));

  InfluenceCoefficients out;
  for (RateKind which : {RateKind::kTpr, RateKind::kTnr}) {
    const double a = SoftRate(model, slice0, which, soft) -
                     SoftRate(model, slice1, which, soft);
    const ParameterVector gap_grad = SoftRateGrad(model, slice1, which, soft) -
                                     SoftRateGrad(model, slice0, which, soft);
    const InverseHvpResult solved = InverseHvp(h, gap_grad, solver);
    Eigen::VectorXd c = model.SampleGradDots(train, solved.vector);
    if (which == RateKind::kTpr) {
      out.a_tpr = a;
      out.c_tpr = std::move(c);
      out.residual_tpr = solved.residual;
    } else {
      out.a_tnr = a;
      out.c_tnr = std::move(c);
      out.residual_tnr = solved.residual;
    }
  }
  const Eigen::VectorXd slopes = model.LossSlopes(train);
  out.grad_norm.resize(train.n());
  for (Eigen::Index i = 0; i < train.n(); ++i) {
    out.grad_norm(i) = std::abs(slopes(i)) * model.LogitGrad(train.x(i)).norm();
  }
  return out;
}

void WriteCoefficientsCsv(const std::string& path,
                          const InfluenceCoefficients& coeffs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  out << "# a_tpr=" << FormatDouble(coeffs.a_tpr) << '\n';
  out << "# a_tnr=" << FormatDouble(coeffs.a_tnr) << '\n';
  out << "index,c_tpr,c_tnr,grad_norm\n";
  for (Eigen::Index i = 0; i < coeffs.c_tpr.size(); ++i) {
    out << i << ',' << FormatDouble(coeffs.c_tpr(i)) << ','
        << FormatDouble(coeffs.c_tnr(i)) << ','
        << FormatDouble(coeffs.grad_norm(i)) << '\n';
  }
}

}  // namespace fairweight
