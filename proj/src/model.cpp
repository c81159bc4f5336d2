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

#include "fairweight/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "fairweight/error.hpp"

namespace fairweight {

namespace {

double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Loss and its first two derivatives with respect to the logit. Inside the
// clamp region the loss is constant, so both derivatives vanish.
struct LossTerms {
  double value;
  double d1;
  double d2;
};

LossTerms LossFromLogit(double logit, int y) {
  const double p = Sigmoid(logit);
  if (p < kProbClamp || p > 1.0 - kProbClamp) {
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    return {y == 1 ? -std::log(pc) : -std::log1p(-pc), 0.0, 0.0};
  }
  const double value = y == 1 ? -std::log(p) : -std::log1p(-p);
  return {value, p - y, p * (1.0 - p)};
}

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Views into an MLP parameter vector.
struct MlpView {
  Eigen::Map<const RowMatrix> w1;
  Eigen::Map<const Eigen::VectorXd> b1;
  Eigen::Map<const Eigen::VectorXd> w2;
  double b2;

  MlpView(const ParameterVector& p, Eigen::Index hidden, Eigen::Index d)
      : w1(p.data(), hidden, d),
        b1(p.data() + hidden * d, hidden),
        w2(p.data() + hidden * d + hidden, hidden),
        b2(p(hidden * d + 2 * hidden)) {}
};

// Writes sum_i r_i * d logit_i / d params for an MLP given the hidden
// activations (n x H) of a batch.
void MlpAccumulateLogitGrad(const MlpView& m, const FeatureMatrix& x,
                            const Eigen::MatrixXd& act,
                            const Eigen::VectorXd& r, ParameterVector& out) {
  const Eigen::Index hidden = m.w2.size();
  const Eigen::Index d = x.cols();
  // delta(i, k) = r_i * w2_k * (1 - h_ik^2)
  const Eigen::MatrixXd delta =
      (r * m.w2.transpose()).cwiseProduct(
          (1.0 - act.array().square()).matrix());
  Eigen::Map<RowMatrix> gw1(out.data(), hidden, d);
  gw1.noalias() += delta.transpose() * x;
  out.segment(hidden * d, hidden) += delta.colwise().sum().transpose();
  out.segment(hidden * d + hidden, hidden).noalias() += act.transpose() * r;
  out(hidden * d + 2 * hidden) += r.sum();
}

Eigen::MatrixXd MlpActivations(const MlpView& m, const FeatureMatrix& x) {
  Eigen::MatrixXd z = x * m.w1.transpose();
  z.rowwise() += m.b1.transpose();
  return z.array().tanh().matrix();
}

}  // namespace

const char* ModelKindName(ModelKind kind) {
  return kind == ModelKind::kLogistic ? "logistic" : "mlp";
}

ModelKind ParseModelKind(const std::string& name) {
  if (name == "logistic") return ModelKind::kLogistic;
  if (name == "mlp") return ModelKind::kMlp;
  throw Error(ErrorKind::kConfig, "unknown model kind '" + name + "'");
}

Eigen::Index ModelSpec::ParamCount() const {
  if (kind == ModelKind::kLogistic) return input_dim + 1;
  return hidden * input_dim + 2 * hidden + 1;
}

Model::Model(ModelSpec spec, ParameterVector params)
    : spec_(spec), params_(std::move(params)) {
  if (spec_.input_dim <= 0) {
    throw Error(ErrorKind::kPrecondition, "model input dimension must be positive");
  }
  if (spec_.kind == ModelKind::kMlp && spec_.hidden <= 0) {
    throw Error(ErrorKind::kPrecondition, "MLP hidden width must be positive");
  }
  if (params_.size() != spec_.ParamCount()) {
    throw Error(ErrorKind::kShape,
                "parameter vector has length " + std::to_string(params_.size()) +
                    ", architecture needs " + std::to_string(spec_.ParamCount()));
  }
  if (!params_.allFinite()) {
    throw Error(ErrorKind::kShape, "parameters contain NaN or Inf");
  }
}

Model Model::Initialize(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.input_dim <= 0) {
    throw Error(ErrorKind::kPrecondition, "model input dimension must be positive");
  }
  ParameterVector p = ParameterVector::Zero(spec.ParamCount());
  if (spec.kind == ModelKind::kMlp) {
    std::mt19937_64 rng(seed);
    const double a1 = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
    const double a2 = 1.0 / std::sqrt(static_cast<double>(spec.hidden));
    std::uniform_real_distribution<double> u1(-a1, a1);
    std::uniform_real_distribution<double> u2(-a2, a2);
    const Eigen::Index n_w1 = spec.hidden * spec.input_dim;
    for (Eigen::Index i = 0; i < n_w1; ++i) p(i) = u1(rng);
    for (Eigen::Index i = 0; i < spec.hidden; ++i) {
      p(n_w1 + spec.hidden + i) = u2(rng);
    }
  }
  return Model(spec, std::move(p));
}

Model Model::WithParams(ParameterVector params) const {
  return Model(spec_, std::move(params));
}

void Model::CheckDim(FeatureRow x) const {
  if (x.size() != spec_.input_dim) {
    throw Error(ErrorKind::kShape, "input has dimension " +
                                       std::to_string(x.size()) + ", model expects " +
                                       std::to_string(spec_.input_dim));
  }
}

double Model::Logit(FeatureRow x) const {
  CheckDim(x);
  const Eigen::Index d = spec_.input_dim;
  if (spec_.kind == ModelKind::kLogistic) {
    return x.dot(params_.head(d).transpose()) + params_(d);
  }
  const MlpView m(params_, spec_.hidden, d);
  const Eigen::VectorXd h = (m.w1 * x.transpose() + m.b1).array().tanh().matrix();
  return m.w2.dot(h) + m.b2;
}

ParameterVector Model::LogitGrad(FeatureRow x) const {
  CheckDim(x);
  const Eigen::Index d = spec_.input_dim;
  ParameterVector g(params_.size());
  if (spec_.kind == ModelKind::kLogistic) {
    g.head(d) = x.transpose();
    g(d) = 1.0;
    return g;
  }
  const Eigen::Index hidden = spec_.hidden;
  const MlpView m(params_, hidden, d);
  const Eigen::VectorXd h = (m.w1 * x.transpose() + m.b1).array().tanh().matrix();
  const Eigen::VectorXd delta =
      m.w2.cwiseProduct((1.0 - h.array().square()).matrix());
  Eigen::Map<RowMatrix> gw1(g.data(), hidden, d);
  gw1.noalias() = delta * x;
  g.segment(hidden * d, hidden) = delta;
  g.segment(hidden * d + hidden, hidden) = h;
  g(hidden * d + 2 * hidden) = 1.0;
  return g;
}

ParameterVector Model::LogitHessVec(FeatureRow x, const ParameterVector& v) const {
  CheckDim(x);
  if (v.size() != params_.size()) {
    throw Error(ErrorKind::kShape, "direction vector length mismatch");
  }
  ParameterVector out = ParameterVector::Zero(params_.size());
  if (spec_.kind == ModelKind::kLogistic) return out;
  const Eigen::Index d = spec_.input_dim;
  const Eigen::Index hidden = spec_.hidden;
  const MlpView m(params_, hidden, d);
  const MlpView dv(v, hidden, d);
  const Eigen::VectorXd h = (m.w1 * x.transpose() + m.b1).array().tanh().matrix();
  const Eigen::ArrayXd sech2 = 1.0 - h.array().square();
  const Eigen::ArrayXd rz = (dv.w1 * x.transpose() + dv.b1).array();
  const Eigen::ArrayXd rh = sech2 * rz;
  const Eigen::VectorXd rdelta =
      (dv.w2.array() * sech2 - 2.0 * m.w2.array() * h.array() * rh).matrix();
  Eigen::Map<RowMatrix> ow1(out.data(), hidden, d);
  ow1.noalias() = rdelta * x;
  out.segment(hidden * d, hidden) = rdelta;
  out.segment(hidden * d + hidden, hidden) = rh.matrix();
  return out;
}

double Model::PredictProba(FeatureRow x) const { return Sigmoid(Logit(x)); }

int Model::Classify(FeatureRow x) const { return PredictProba(x) >= 0.5 ? 1 : 0; }

double Model::Loss(FeatureRow x, int y) const {
  return LossFromLogit(Logit(x), y).value;
}

ParameterVector Model::Grad(FeatureRow x, int y) const {
  return LossFromLogit(Logit(x), y).d1 * LogitGrad(x);
}

Eigen::VectorXd Model::Logits(const Dataset& data) const {
  if (data.n() > 0 && data.dim() != spec_.input_dim) {
    throw Error(ErrorKind::kShape, "dataset dimension " + std::to_string(data.dim()) +
                                       " does not match model input " +
                                       std::to_string(spec_.input_dim));
  }
  const Eigen::Index d = spec_.input_dim;
  if (spec_.kind == ModelKind::kLogistic) {
    Eigen::VectorXd f = data.features() * params_.head(d);
    f.array() += params_(d);
    return f;
  }
  const MlpView m(params_, spec_.hidden, d);
  Eigen::VectorXd f = MlpActivations(m, data.features()) * m.w2;
  f.array() += m.b2;
  return f;
}

std::vector<int> Model::Predictions(const Dataset& data) const {
  const Eigen::VectorXd f = Logits(data);
  std::vector<int> out(static_cast<std::size_t>(f.size()));
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    out[static_cast<std::size_t>(i)] = Sigmoid(f(i)) >= 0.5 ? 1 : 0;
  }
  return out;
}

double Model::WeightedLoss(const Dataset& data,
                           const Eigen::VectorXd& weights) const {
  if (weights.size() != data.n()) {
    throw Error(ErrorKind::kShape, "weight vector length mismatch");
  }
  const Eigen::VectorXd f = Logits(data);
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (weights(i) == 0.0) continue;
    total += weights(i) * LossFromLogit(f(i), data.y(i)).value;
  }
  return total;
}

ParameterVector Model::WeightedGrad(const Dataset& data,
                                    const Eigen::VectorXd& weights) const {
  if (weights.size() != data.n()) {
    throw Error(ErrorKind::kShape, "weight vector length mismatch");
  }
  const Eigen::Index d = spec_.input_dim;
  ParameterVector g = ParameterVector::Zero(params_.size());
  if (data.n() == 0) return g;
  if (spec_.kind == ModelKind::kLogistic) {
    const Eigen::VectorXd f = Logits(data);
    Eigen::VectorXd r(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      r(i) = weights(i) == 0.0 ? 0.0 : weights(i) * LossFromLogit(f(i), data.y(i)).d1;
    }
    g.head(d).noalias() = data.features().transpose() * r;
    g(d) = r.sum();
    return g;
  }
  const MlpView m(params_, spec_.hidden, d);
  const Eigen::MatrixXd act = MlpActivations(m, data.features());
  Eigen::VectorXd f = act * m.w2;
  f.array() += m.b2;
  Eigen::VectorXd r(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    r(i) = weights(i) == 0.0 ? 0.0 : weights(i) * LossFromLogit(f(i), data.y(i)).d1;
  }
  MlpAccumulateLogitGrad(m, data.features(), act, r, g);
  return g;
}

double Model::MeanLoss(const Dataset& data) const {
  return WeightedLoss(data, UniformWeights(data.n()));
}

ParameterVector Model::MeanGrad(const Dataset& data) const {
  return WeightedGrad(data, UniformWeights(data.n()));
}

Eigen::MatrixXd Model::SampleGrads(const Dataset& data) const {
  Eigen::MatrixXd out(params_.size(), data.n());
  const Eigen::VectorXd f = Logits(data);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out.col(i) = LossFromLogit(f(i), data.y(i)).d1 * LogitGrad(data.x(i));
  }
  return out;
}

Eigen::VectorXd Model::LossSlopes(const Dataset& data) const {
  const Eigen::VectorXd f = Logits(data);
  Eigen::VectorXd out(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    out(i) = LossFromLogit(f(i), data.y(i)).d1;
  }
  return out;
}

Eigen::VectorXd Model::LogitJvp(const Dataset& data,
                                const ParameterVector& v) const {
  if (v.size() != params_.size()) {
    throw Error(ErrorKind::kShape, "direction vector length mismatch");
  }
  if (data.n() > 0 && data.dim() != spec_.input_dim) {
    throw Error(ErrorKind::kShape, "dataset dimension does not match model");
  }
  const Eigen::Index d = spec_.input_dim;
  if (spec_.kind == ModelKind::kLogistic) {
    Eigen::VectorXd out = data.features() * v.head(d);
    out.array() += v(d);
    return out;
  }
  const MlpView m(params_, spec_.hidden, d);
  const MlpView dv(v, spec_.hidden, d);
  const Eigen::MatrixXd act = MlpActivations(m, data.features());
  Eigen::MatrixXd rz = data.features() * dv.w1.transpose();
  rz.rowwise() += dv.b1.transpose();
  const Eigen::MatrixXd rh =
      ((1.0 - act.array().square()) * rz.array()).matrix();
  Eigen::VectorXd out = act * dv.w2 + rh * m.w2;
  out.array() += dv.b2;
  return out;
}

Eigen::VectorXd Model::SampleGradDots(const Dataset& data,
                                      const ParameterVector& v) const {
  return LossSlopes(data).cwiseProduct(LogitJvp(data, v));
}

bool Model::operator==(const Model& other) const {
  return spec_.kind == other.spec_.kind &&
         spec_.input_dim == other.spec_.input_dim &&
         (spec_.kind == ModelKind::kLogistic || spec_.hidden == other.spec_.hidden) &&
         params_.size() == other.params_.size() &&
         (params_.array() == other.params_.array()).all();
}

Eigen::VectorXd UniformWeights(Eigen::Index n) {
  return Eigen::VectorXd::Constant(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
}

ParameterVector Hvp(const Model& model, const Dataset& data,
                    const Eigen::VectorXd& weights, const ParameterVector& v,
                    HessianKind kind) {
  if (weights.size() != data.n()) {
    throw Error(ErrorKind::kShape, "weight vector length mismatch");
  }
  if (v.size() != model.param_count()) {
    throw Error(ErrorKind::kShape, "direction vector has length " +
                                       std::to_string(v.size()) + ", expected " +
                                       std::to_string(model.param_count()));
  }
  const Eigen::Index d = model.input_dim();
  const ParameterVector& p = model.params();
  ParameterVector out = ParameterVector::Zero(p.size());
  if (data.n() == 0) return out;

  if (model.kind() == ModelKind::kLogistic) {
    const Eigen::VectorXd f = model.Logits(data);
    Eigen::VectorXd av = data.features() * v.head(d);
    av.array() += v(d);
    Eigen::VectorXd q(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      q(i) = weights(i) == 0.0
                 ? 0.0
                 : weights(i) * LossFromLogit(f(i), data.y(i)).d2 * av(i);
    }
    out.head(d).noalias() = data.features().transpose() * q;
    out(d) = q.sum();
    return out;
  }

  const Eigen::Index hidden = model.spec().hidden;
  const MlpView m(p, hidden, d);
  const MlpView dv(v, hidden, d);
  const FeatureMatrix& x = data.features();
  const Eigen::MatrixXd act = MlpActivations(m, x);
  const Eigen::ArrayXXd sech2 = 1.0 - act.array().square();
  Eigen::MatrixXd rz = x * dv.w1.transpose();
  rz.rowwise() += dv.b1.transpose();
  const Eigen::ArrayXXd rh = sech2 * rz.array();
  // Directional derivative of each logit: J_i v.
  Eigen::VectorXd jv = act * dv.w2 + rh.matrix() * m.w2;
  jv.array() += dv.b2;
  Eigen::VectorXd f = act * m.w2;
  f.array() += m.b2;

  Eigen::VectorXd q(f.size());
  Eigen::VectorXd t(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (weights(i) == 0.0) {
      q(i) = t(i) = 0.0;
      continue;
    }
    const LossTerms terms = LossFromLogit(f(i), data.y(i));
    q(i) = weights(i) * terms.d2 * jv(i);
    t(i) = weights(i) * terms.d1;
  }
  MlpAccumulateLogitGrad(m, x, act, q, out);
  if (kind == HessianKind::kGaussNewton) return out;

  // sum_i t_i * (d^2 logit_i) v
  Eigen::ArrayXXd rdelta = sech2.rowwise() * dv.w2.transpose().array();
  rdelta -= 2.0 * ((act.array() * rh).rowwise() * m.w2.transpose().array());
  const Eigen::MatrixXd scaled = (rdelta.colwise() * t.array()).matrix();
  Eigen::Map<RowMatrix> ow1(out.data(), hidden, d);
  ow1.noalias() += scaled.transpose() * x;
  out.segment(hidden * d, hidden) += scaled.colwise().sum().transpose();
  out.segment(hidden * d + hidden, hidden).noalias() +=
      rh.matrix().transpose() * t;
  return out;
}

Eigen::MatrixXd DenseHessian(const Model& model, const Dataset& data,
                             const Eigen::VectorXd& weights, HessianKind kind) {
  const Eigen::Index p = model.param_count();
  Eigen::MatrixXd h(p, p);
  ParameterVector e = ParameterVector::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    e(j) = 1.0;
    h.col(j) = Hvp(model, data, weights, e, kind);
    e(j) = 0.0;
  }
  // Symmetrize away floating-point asymmetry.
  return 0.5 * (h + h.transpose());
}

TrainResult TrainErm(const Model& init, const Dataset& data,
                     const Eigen::VectorXd& weights, const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || cfg.epochs <= 0 || cfg.batch_size < 0 ||
      !(cfg.convergence_tol >= 0.0) || !(cfg.l2 >= 0.0)) {
    throw Error(ErrorKind::kConfig, "invalid training configuration");
  }
  if (weights.size() != data.n()) {
    throw Error(ErrorKind::kShape, "weight vector length mismatch");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw Error(ErrorKind::kPrecondition, "training weights must be finite and nonnegative");
  }
  if (data.n() > 0 && data.dim() != init.input_dim()) {
    throw Error(ErrorKind::kShape, "dataset dimension does not match model");
  }

  const Eigen::Index n = data.n();
  Eigen::Index batch = cfg.batch_size;
  if (batch == 0) batch = n <= kFullBatchLimit ? n : 256;
  const bool full_batch = batch >= n;

  TrainResult result;
  ParameterVector theta = init.params();
  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Model current = init.WithParams(theta);
    const double objective =
        current.WeightedLoss(data, weights) + 0.5 * cfg.l2 * theta.squaredNorm();
    const ParameterVector grad = current.WeightedGrad(data, weights) + cfg.l2 * theta;
    if (!std::isfinite(objective) || !grad.allFinite()) {
      throw Error(ErrorKind::kDivergence,
                  "non-finite loss at epoch " + std::to_string(epoch));
    }
    result.loss_trajectory.push_back(objective);
    result.grad_norm = grad.norm();
    if (result.grad_norm <= cfg.convergence_tol) {
      result.converged = true;
      break;
    }
    ++result.epochs_run;
    if (full_batch) {
      theta -= cfg.learning_rate * grad;
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (Eigen::Index start = 0; start < n; start += batch) {
        const Eigen::Index stop = std::min(n, start + batch);
        std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + stop);
        const Dataset mb = data.Subset(idx);
        Eigen::VectorXd wb(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
          wb(static_cast<Eigen::Index>(k)) = weights(idx[k]);
        }
        // Rescale so the mini-batch gradient estimates the full objective.
        const double scale = static_cast<double>(n) / static_cast<double>(idx.size());
        theta -= cfg.learning_rate *
                 (scale * init.WithParams(theta).WeightedGrad(mb, wb) + cfg.l2 * theta);
      }
    }
    if (!theta.allFinite()) {
      throw Error(ErrorKind::kDivergence,
                  "parameters became non-finite at epoch " + std::to_string(epoch));
    }
  }
  result.model = init.WithParams(theta);
  if (!result.converged) {
    result.grad_norm = (result.model.WeightedGrad(data, weights) + cfg.l2 * theta).norm();
    result.converged = result.grad_norm <= cfg.convergence_tol;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'W', 'C', 'K', 'P', 'T', '0', '1'};

void PutU64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t GetU64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw Error(ErrorKind::kFormat, "checkpoint truncated");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void SaveCheckpoint(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  out.write(kMagic.data(), kMagic.size());
  const auto kind = static_cast<std::uint32_t>(model.kind());
  unsigned char kb[4];
  for (int i = 0; i < 4; ++i) kb[i] = static_cast<unsigned char>(kind >> (8 * i));
  out.write(reinterpret_cast<const char*>(kb), 4);
  PutU64(out, static_cast<std::uint64_t>(model.input_dim()));
  PutU64(out, static_cast<std::uint64_t>(
                  model.kind() == ModelKind::kMlp ? model.spec().hidden : 0));
  PutU64(out, static_cast<std::uint64_t>(model.param_count()));
  for (Eigen::Index i = 0; i < model.param_count(); ++i) {
    std::uint64_t bits;
    const double v = model.params()(i);
    std::memcpy(&bits, &v, sizeof(bits));
    PutU64(out, bits);
  }
}

Model LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorKind::kFormat, "'" + path + "' is not a fairweight checkpoint");
  }
  unsigned char kb[4];
  if (!in.read(reinterpret_cast<char*>(kb), 4)) {
    throw Error(ErrorKind::kFormat, "checkpoint truncated");
  }
  std::uint32_t kind = 0;
  for (int i = 0; i < 4; ++i) kind |= static_cast<std::uint32_t>(kb[i]) << (8 * i);
  if (kind > 1) throw Error(ErrorKind::kFormat, "checkpoint has unknown model kind");
  ModelSpec spec;
  spec.kind = static_cast<ModelKind>(kind);
  spec.input_dim = static_cast<Eigen::Index>(GetU64(in));
  const auto hidden = static_cast<Eigen::Index>(GetU64(in));
  if (spec.kind == ModelKind::kMlp) spec.hidden = hidden;
  const auto count = GetU64(in);
  if (spec.input_dim <= 0 || spec.input_dim > (1 << 24) ||
      (spec.kind == ModelKind::kMlp && (hidden <= 0 || hidden > (1 << 20))) ||
      count != static_cast<std::uint64_t>(spec.ParamCount())) {
    throw Error(ErrorKind::kFormat, "checkpoint header is inconsistent");
  }
  ParameterVector p(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const std::uint64_t bits = GetU64(in);
    std::memcpy(&p(i), &bits, sizeof(bits));
  }
  return Model(spec, std::move(p));
}

}  // namespace fairweight
