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

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fairweight/cli.hpp"
#include "fairweight/datamodel.hpp"
#include "fairweight/error.hpp"
#include "fairweight/metrics.hpp"
#include "fairweight/oracle.hpp"
#include "fairweight/pipeline.hpp"
#include "fairweight/reweight.hpp"

namespace py = pybind11;
using namespace fairweight;

namespace {

py::object ToPython(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

FairIFConfig MakeConfig(double lam, double temperature, const std::string& model,
                        Eigen::Index hidden, const std::string& solver, double damping,
                        const std::string& weight_policy, std::uint64_t seed) {
  FairIFConfig cfg;
  cfg.lambda = lam;
  cfg.soft.temperature = temperature;
  cfg.model.kind = ParseModelKind(model);
  cfg.model.hidden = hidden;
  cfg.solver.method = ParseSolverMethod(solver);
  cfg.solver.damping = damping;
  cfg.weight_policy = ParseWeightPolicy(weight_policy);
  cfg.init_seed = seed;
  cfg.stage2_init_seed = seed;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Influence-function sample reweighting for group fairness";

  py::register_exception<Error>(m, "FairweightError", PyExc_RuntimeError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const FeatureMatrix& x, std::vector<int> y,
                       std::optional<std::vector<int>> s) {
             return Dataset(x, std::move(y), std::move(s));
           }),
           py::arg("features"), py::arg("labels"), py::arg("groups") = py::none())
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("dim", &Dataset::dim)
      .def_property_readonly("has_groups", &Dataset::has_groups)
      .def_property_readonly("features", [](const Dataset& d) { return d.features(); })
      .def_property_readonly("labels", &Dataset::labels)
      .def_property_readonly("groups",
                             [](const Dataset& d) -> std::optional<std::vector<int>> {
                               if (!d.has_groups()) return std::nullopt;
                               return d.groups();
                             })
      .def_static(
          "load_csv",
          [](const std::string& path, const std::string& label_column,
             std::optional<std::string> group_column) {
            CsvSchema schema;
            schema.label_column = label_column;
            schema.group_column = std::move(group_column);
            return LoadCsv(path, schema);
          },
          py::arg("path"), py::arg("label_column") = "label",
          py::arg("group_column") = "group")
      .def("write_csv", [](const Dataset& d, const std::string& path) { WriteCsv(path, d); },
           py::arg("path"));

  m.def(
      "generate_scenario",
      [](const std::string& kind, const CellTable& cells, std::uint64_t seed, double val_ratio,
         double test_ratio) {
        ScenarioFile f;
        f.scenario.kind = ParseBiasKind(kind);
        f.scenario.cell_counts = cells;
        f.scenario.seed = seed;
        f.scenario.feature_spec = MakeFeatureSpec(f.geometry);
        f.val_ratio = val_ratio;
        f.test_ratio = test_ratio;
        const ScenarioSplits sp = GenerateScenarioSplits(f);
        return py::make_tuple(sp.train, sp.val, sp.test);
      },
      py::arg("kind"), py::arg("cells"), py::arg("seed") = 0, py::arg("val_ratio") = 0.2,
      py::arg("test_ratio") = 0.2,
      "Train/val/test splits; cells[y][s] are the training cell counts.");

  m.def(
      "generate_scenario_file",
      [](const std::string& path) {
        const ScenarioSplits sp = GenerateScenarioSplits(ParseScenarioFile(path));
        return py::make_tuple(sp.train, sp.val, sp.test);
      },
      py::arg("path"));

  m.def(
      "fairif_train",
      [](const Dataset& train, const Dataset& val, std::optional<Dataset> test, double lam,
         double temperature, const std::string& model, Eigen::Index hidden,
         const std::string& solver, double damping, const std::string& weight_policy,
         std::uint64_t seed) {
        const FairIFConfig cfg =
            MakeConfig(lam, temperature, model, hidden, solver, damping, weight_policy, seed);
        FairIFResult r;
        {
          py::gil_scoped_release release;
          r = FairIFTrain(train, val, cfg, test ? &*test : nullptr);
        }
        py::dict out;
        out["report"] = ToPython(ToJson(r.report));
        out["eps"] = r.eps.eps;
        out["weights"] = r.weights.w;
        out["a_tpr"] = r.coefficients.a_tpr;
        out["a_tnr"] = r.coefficients.a_tnr;
        out["c_tpr"] = r.coefficients.c_tpr;
        out["c_tnr"] = r.coefficients.c_tnr;
        out["erm_params"] = r.erm_model.params();
        out["fair_params"] = r.fair_model.params();
        return out;
      },
      py::arg("train"), py::arg("val"), py::arg("test") = py::none(), py::kw_only(),
      py::arg("lam") = 0.1, py::arg("temperature") = 0.1, py::arg("model") = "logistic",
      py::arg("hidden") = 64, py::arg("solver") = "cg", py::arg("damping") = 0.01,
      py::arg("weight_policy") = "clamp", py::arg("seed") = 0);

  m.def(
      "erm_train",
      [](const Dataset& train, const Dataset& val, std::optional<Dataset> test,
         const std::string& model, Eigen::Index hidden, std::uint64_t seed) {
        const FairIFConfig cfg = MakeConfig(0.1, 0.1, model, hidden, "cg", 0.01, "clamp", seed);
        ErmRunResult r;
        {
          py::gil_scoped_release release;
          r = ErmTrain(train, val, cfg, test ? &*test : nullptr);
        }
        py::dict out;
        out["report"] = ToPython(ToJson(r.report));
        out["params"] = r.model.params();
        return out;
      },
      py::arg("train"), py::arg("val"), py::arg("test") = py::none(), py::kw_only(),
      py::arg("model") = "logistic", py::arg("hidden") = 64, py::arg("seed") = 0);

  m.def(
      "solve_epsilon",
      [](double a_tpr, const Eigen::VectorXd& c_tpr, double a_tnr, const Eigen::VectorXd& c_tnr,
         double lam) { return SolveEpsilon(a_tpr, c_tpr, a_tnr, c_tnr, lam).eps; },
      py::arg("a_tpr"), py::arg("c_tpr"), py::arg("a_tnr"), py::arg("c_tnr"), py::arg("lam"));

  m.def(
      "epsilon_objective",
      [](const Eigen::VectorXd& eps, double a_tpr, const Eigen::VectorXd& c_tpr, double a_tnr,
         const Eigen::VectorXd& c_tnr, double lam) {
        return EpsilonObjective(eps, a_tpr, c_tpr, a_tnr, c_tnr, lam);
      },
      py::arg("eps"), py::arg("a_tpr"), py::arg("c_tpr"), py::arg("a_tnr"), py::arg("c_tnr"),
      py::arg("lam"));

  m.def(
      "apply_weights",
      [](const Eigen::VectorXd& eps, const std::string& policy) {
        EpsilonVector e;
        e.eps = eps;
        return ApplyWeights(e, eps.size(), ParseWeightPolicy(policy)).w;
      },
      py::arg("eps"), py::arg("policy") = "clamp");

  m.def(
      "fairness_report",
      [](const std::vector<int>& predictions, const std::vector<int>& labels,
         const std::vector<int>& groups) {
        return ToPython(ToJson(MakeFairnessReport(predictions, labels, groups)));
      },
      py::arg("predictions"), py::arg("labels"), py::arg("groups"));

  m.def(
      "proposition_check",
      [](const std::string& kind, double alpha, double beta, double tpr0, double tpr1,
         double tnr0, double tnr1) {
        return ToPython(ToJson(PropositionCheck(ParseBiasKind(kind), alpha, beta,
                                                GroupRates::FromValues(tpr0, tpr1, tnr0, tnr1))));
      },
      py::arg("kind"), py::arg("alpha"), py::arg("beta"), py::arg("tpr0"), py::arg("tpr1"),
      py::arg("tnr0"), py::arg("tnr1"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"fairweight"};
        for (const std::string& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process; returns (code, stdout, stderr).");
}
