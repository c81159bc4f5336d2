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

#include "fairweight/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <sstream>

#include "fairweight/error.hpp"
#include "fairweight/text.hpp"

namespace fairweight {

namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
auto RunStage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
}

ModelSpec ResolveSpec(ModelSpec spec, const Dataset& train) {
  if (spec.input_dim == 0) spec.input_dim = train.dim();
  if (spec.input_dim != train.dim()) {
    throw Error(ErrorKind::kShape, "model input_dim does not match training data");
  }
  return spec;
}

EpsilonStats Summarize(const EpsilonVector& eps, const WeightVector& weights) {
  EpsilonStats stats;
  if (eps.eps.size() > 0) {
    stats.min = eps.eps.minCoeff();
    stats.max = eps.eps.maxCoeff();
    stats.mean = eps.eps.mean();
    stats.l2 = eps.eps.norm();
  }
  stats.clamped_count = weights.clamped_count;
  return stats;
}


void EvaluateSplits(const Model& model, const Dataset& train, const Dataset& val,
                    const Dataset* test,
                    std::map<std::string, FairnessReport>& out) {
  if (train.has_groups()) out["train"] = Evaluate(model, train);
  out["val"] = Evaluate(model, val);
  if (test != nullptr && test->has_groups()) out["test"] = Evaluate(model, *test);
}

nlohmann::json RankedJson(const std::vector<RankedWeight>& list) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : list) {
    arr.push_back({{"index", r.index}, {"epsilon", r.epsilon}, {"weight", r.weight}});
  }
  return arr;
}

}  // namespace

std::vector<RankedWeight> TopWeights(const EpsilonVector& eps,
                                     const WeightVector& weights, bool positive,
                                     int k) {
  std::vector<RankedWeight> out;
  for (Eigen::Index i = 0; i < eps.eps.size(); ++i) {
    const double e = eps.eps(i);
    if (positive ? e > 0.0 : e < 0.0) out.push_back({i, e, weights.w(i)});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::abs(a.epsilon) > std::abs(b.epsilon);
  });
  if (static_cast<int>(out.size()) > k) out.resize(static_cast<std::size_t>(std::max(k, 0)));
  return out;
}

FairnessReport Evaluate(const Model& model, const Dataset& data) {
  if (!data.has_groups()) {
    throw Error(ErrorKind::kPrecondition, "evaluation requires group annotations");
  }
  return MakeFairnessReport(model.Predictions(data), data.labels(), data.groups());
}

TrainResult TrainErmStage(const Dataset& train, const FairIFConfig& cfg) {
  return RunStage("stage1_train", [&] {
    const ModelSpec spec = ResolveSpec(cfg.model, train);
    return TrainErm(Model::Initialize(spec, cfg.init_seed), train,
                    UniformWeights(train.n()), cfg.stage1);
  });
}

ErmRunResult ErmTrain(const Dataset& train, const Dataset& val,
                      const FairIFConfig& cfg, const Dataset* test) {
  ErmRunResult result;
  RunReport& report = result.report;
  report.lambda = cfg.lambda;
  report.solver = SolverMethodName(cfg.solver.method);
  const auto start = Clock::now();
  const TrainResult stage1 = TrainErmStage(train, cfg);
  report.timings.stage1_seconds = SecondsSince(start);
  result.model = stage1.model;
  report.stage1_grad_norm = stage1.grad_norm;
  report.stage1_converged = stage1.converged;
  if (!stage1.converged) {
    report.warnings.push_back("stage one stopped at the epoch budget with gradient norm " +
                              FormatDouble(stage1.grad_norm, 6));
  }
  RunStage("evaluate", [&] {
    EvaluateSplits(result.model, train, val, test, report.erm);
    return 0;
  });
  return result;
}

FairIFResult FairIFTrain(const Dataset& train, const Dataset& val,
                         const FairIFConfig& cfg, const Dataset* test) {
  RunStage("input", [&] {
    if (!val.has_groups()) {
      throw Error(ErrorKind::kPrecondition,
                  "validation set must carry group annotations");
    }
    if (train.n() == 0) throw Error(ErrorKind::kPrecondition, "training set is empty");
    if (val.dim() != train.dim()) {
      throw Error(ErrorKind::kShape, "validation and training dimensions differ");
    }
    return 0;
  });

  FairIFResult result;
  RunReport& report = result.report;
  report.lambda = cfg.lambda;
  report.solver = SolverMethodName(cfg.solver.method);

  auto start = Clock::now();
  const TrainResult stage1 = TrainErmStage(train, cfg);
  report.timings.stage1_seconds = SecondsSince(start);
  result.erm_model = stage1.model;
  report.stage1_grad_norm = stage1.grad_norm;
  report.stage1_converged = stage1.converged;
  if (!stage1.converged) {
    report.warnings.push_back("stage one stopped at the epoch budget with gradient norm " +
                              FormatDouble(stage1.grad_norm, 6));
  }

  start = Clock::now();
  result.coefficients = RunStage("influence", [&] {
    return ComputeInfluenceCoefficients(result.erm_model, train, val, cfg.soft,
                                        cfg.solver);
  });
  report.timings.influence_seconds = SecondsSince(start);
  const InfluenceCoefficients& co = result.coefficients;
  report.a_tpr = co.a_tpr;
  report.a_tnr = co.a_tnr;

  start = Clock::now();
  RunStage("solve", [&] {
    result.eps = SolveEpsilon(co.a_tpr, co.c_tpr, co.a_tnr, co.c_tnr, cfg.lambda,
                              cfg.channel_weights);
    result.weights = ApplyWeights(result.eps, train.n(), cfg.weight_policy);
    return 0;
  });
  report.timings.solve_seconds = SecondsSince(start);
  report.objective_value = result.eps.objective_value;
  report.predicted_residuals =
      ResidualDiscrepancy(result.eps, co.a_tpr, co.c_tpr, co.a_tnr, co.c_tnr);
  report.epsilon_stats = Summarize(result.eps, result.weights);
  report.top_upweighted = TopWeights(result.eps, result.weights, true, cfg.top_k);
  report.top_downweighted = TopWeights(result.eps, result.weights, false, cfg.top_k);

  start = Clock::now();
  const TrainResult stage2 = RunStage("stage2_train", [&] {
    const Model init = cfg.warm_start
                           ? result.erm_model
                           : Model::Initialize(result.erm_model.spec(),
                                               cfg.stage2_init_seed);
    return TrainErm(init, train, result.weights.w, cfg.stage2);
  });
  report.timings.stage2_seconds = SecondsSince(start);
  result.fair_model = stage2.model;
  report.stage2_grad_norm = stage2.grad_norm;
  report.stage2_converged = stage2.converged;
  if (!stage2.converged) {
    report.warnings.push_back("stage two stopped at the epoch budget with gradient norm " +
                              FormatDouble(stage2.grad_norm, 6));
  }

  RunStage("evaluate", [&] {
    EvaluateSplits(result.erm_model, train, val, test, report.erm);
    EvaluateSplits(result.fair_model, train, val, test, report.fairif);
    report.realized_gaps = {
        MetricDiscrepancy(result.fair_model, val, RateKind::kTpr, cfg.soft),
        MetricDiscrepancy(result.fair_model, val, RateKind::kTnr, cfg.soft)};
    return 0;
  });
  return result;
}

std::vector<SweepEntry> ValidationSizeSweep(const Dataset& train,
                                            const Dataset& val,
                                            const FairIFConfig& cfg,
                                            const std::vector<double>& fractions,
                                            std::uint64_t seed,
                                            const Dataset* test, int jobs) {
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw Error(ErrorKind::kConfig, "validation fractions must be in (0, 1]");
    }
  }
  auto run_one = [&](double fraction) {
    SweepEntry entry;
    entry.fraction = fraction;
    SubsampleResult sub = SubsampleValidation(val, fraction, seed);
    entry.warnings = sub.warnings;
    if (!sub.warnings.empty()) {
      entry.skipped = true;
      entry.warnings.push_back("run skipped: validation subsample has an empty cell");
      return entry;
    }
    entry.report = FairIFTrain(train, sub.data, cfg, test).report;
    return entry;
  };

  std::vector<SweepEntry> out;
  out.reserve(fractions.size());
  if (jobs <= 1) {
    for (double f : fractions) out.push_back(run_one(f));
    return out;
  }
  for (std::size_t start = 0; start < fractions.size();
       start += static_cast<std::size_t>(jobs)) {
    std::vector<std::future<SweepEntry>> pending;
    const std::size_t stop =
        std::min(fractions.size(), start + static_cast<std::size_t>(jobs));
    for (std::size_t k = start; k < stop; ++k) {
      pending.push_back(std::async(std::launch::async, run_one, fractions[k]));
    }
    for (auto& f : pending) out.push_back(f.get());
  }
  return out;
}

nlohmann::json ToJson(const RunReport& report, bool include_timings) {
  nlohmann::json erm = nlohmann::json::object();
  nlohmann::json fair = nlohmann::json::object();
  for (const auto& [split, r] : report.erm) erm[split] = ToJson(r);
  for (const auto& [split, r] : report.fairif) fair[split] = ToJson(r);
  const EpsilonStats& es = report.epsilon_stats;
  nlohmann::json doc = {
      {"schema", 1},
      {"erm", erm},
      {"fairif", fair},
      {"a_tpr", report.a_tpr},
      {"a_tnr", report.a_tnr},
      {"lambda", report.lambda},
      {"objective_value", report.objective_value},
      {"solver", report.solver},
      {"epsilon_stats",
       {{"min", es.min},
        {"max", es.max},
        {"mean", es.mean},
        {"l2", es.l2},
        {"clamped_count", es.clamped_count}}},
      {"predicted_residuals",
       {report.predicted_residuals.first, report.predicted_residuals.second}},
      {"realized_gaps", {report.realized_gaps.first, report.realized_gaps.second}},
      {"top_upweighted", RankedJson(report.top_upweighted)},
      {"top_downweighted", RankedJson(report.top_downweighted)},
      {"stage1", {{"grad_norm", report.stage1_grad_norm},
                  {"converged", report.stage1_converged}}},
      {"stage2", {{"grad_norm", report.stage2_grad_norm},
                  {"converged", report.stage2_converged}}},
      {"warnings", report.warnings},
  };
  if (include_timings) {
    doc["timings"] = {{"stage1_seconds", report.timings.stage1_seconds},
                      {"influence_seconds", report.timings.influence_seconds},
                      {"solve_seconds", report.timings.solve_seconds},
                      {"stage2_seconds", report.timings.stage2_seconds}};
  }
  return doc;
}

std::string RunCsvHeader() {
  return "run,split,erm_accuracy,erm_ad,erm_aod,erm_eod,fairif_accuracy,"
         "fairif_ad,fairif_aod,fairif_eod,eps_l2,clamped";
}

std::string RunCsvRow(const std::string& run_name, const RunReport& report) {
  const std::string split = report.erm.count("test") ? "test" : "val";
  const auto& e = report.erm.at(split);
  std::ostringstream row;
  row << run_name << ',' << split << ',' << FormatDouble(e.accuracy) << ','
      << FormatDouble(e.ad) << ',' << FormatDouble(e.aod) << ','
      << FormatDouble(e.eod) << ',';
  // ERM-only runs leave the FairIF columns empty.
  const auto fair = report.fairif.find(split);
  if (fair == report.fairif.end()) {
    row << ",,,,,";
    return row.str();
  }
  const auto& f = fair->second;
  row << FormatDouble(f.accuracy) << ',' << FormatDouble(f.ad) << ','
      << FormatDouble(f.aod) << ',' << FormatDouble(f.eod) << ','
      << FormatDouble(report.epsilon_stats.l2) << ','
      << report.epsilon_stats.clamped_count;
  return row.str();
}

}  // namespace fairweight
