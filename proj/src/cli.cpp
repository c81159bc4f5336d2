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

#include "fairweight/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "fairweight/error.hpp"
#include "fairweight/text.hpp"

namespace fairweight {
namespace {

namespace fs = std::filesystem;

using Setter = std::function<void(const std::string&)>;

std::string Qualified(const ConfigEntry& e) {
  return e.section.empty() ? e.key : e.section + "." + e.key;
}

double NumberValue(const std::string& key, const std::string& value) {
  const auto v = ParseDouble(value);
  if (!v) throw Error(ErrorKind::kConfig, "key '" + key + "' expects a number, got '" + value + "'");
  return *v;
}

std::int64_t IntValue(const std::string& key, const std::string& value) {
  const auto v = ParseInt(value);
  if (!v) throw Error(ErrorKind::kConfig, "key '" + key + "' expects an integer, got '" + value + "'");
  return *v;
}

std::uint64_t SeedValue(const std::string& key, const std::string& value) {
  const auto v = IntValue(key, value);
  if (v < 0) throw Error(ErrorKind::kConfig, "key '" + key + "' expects a nonnegative seed");
  return static_cast<std::uint64_t>(v);
}

bool BoolValue(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw Error(ErrorKind::kConfig, "key '" + key + "' expects true or false, got '" + value + "'");
}

std::string ResolvePath(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

void RequireFile(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorKind::kIo, what + " not found: " + path);
  }
}

void AddTrainKeys(std::map<std::string, Setter>& keys, const std::string& section,
                  TrainConfig& cfg) {
  keys[section + ".learning_rate"] = [&cfg, section](const std::string& v) {
    cfg.learning_rate = NumberValue(section + ".learning_rate", v);
  };
  keys[section + ".epochs"] = [&cfg, section](const std::string& v) {
    cfg.epochs = static_cast<int>(IntValue(section + ".epochs", v));
  };
  keys[section + ".batch_size"] = [&cfg, section](const std::string& v) {
    cfg.batch_size = static_cast<int>(IntValue(section + ".batch_size", v));
  };
  keys[section + ".convergence_tol"] = [&cfg, section](const std::string& v) {
    cfg.convergence_tol = NumberValue(section + ".convergence_tol", v);
  };
}

struct LoadedData {
  Dataset train;
  Dataset val;
  std::optional<Dataset> test;
};

LoadedData LoadData(const RunConfig& cfg) {
  LoadedData data;
  if (!cfg.scenario_file.empty()) {
    ScenarioFile file = ParseScenarioFile(cfg.scenario_file);
    file.scenario.seed = cfg.seed;
    ScenarioSplits splits = GenerateScenarioSplits(file);
    data.train = std::move(splits.train);
    data.val = std::move(splits.val);
    data.test = std::move(splits.test);
    return data;
  }
  data.train = LoadCsv(cfg.train_csv, cfg.schema);
  data.val = LoadCsv(cfg.val_csv, cfg.schema);
  if (!cfg.test_csv.empty()) data.test = LoadCsv(cfg.test_csv, cfg.schema);
  return data;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "cannot write " + path);
  f << text;
  if (!f) throw Error(ErrorKind::kIo, "write failed for " + path);
}

std::string OutputPath(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  return (fs::path(cfg.output_dir) / name).string();
}

int ExitCodeFor(const Error& e) {
  if (const auto* stage = dynamic_cast<const StageError*>(&e)) {
    return stage->stage() == "input" && IsInputError(e.kind()) ? 2 : 3;
  }
  return IsInputError(e.kind()) ? 2 : 3;
}

int CmdGenerate(const std::string& scenario_path, const std::string& out_dir,
                std::ostream& out) {
  ScenarioFile file = ParseScenarioFile(scenario_path);
  if (const auto seed = SeedFromEnvironment()) file.scenario.seed = *seed;
  const ScenarioSplits splits = GenerateScenarioSplits(file);
  fs::create_directories(out_dir);
  const std::pair<const char*, const Dataset*> outputs[] = {
      {"train.csv", &splits.train}, {"val.csv", &splits.val}, {"test.csv", &splits.test}};
  for (const auto& [name, data] : outputs) {
    const std::string path = (fs::path(out_dir) / name).string();
    WriteCsv(path, *data);
    out << path << " rows=" << data->n() << '\n';
  }
  return 0;
}

int CmdTrain(const std::string& config_path, const std::string& mode,
             std::ostream& out) {
  const RunConfig cfg = LoadRunConfig(config_path, SeedFromEnvironment());
  const LoadedData data = LoadData(cfg);
  const Dataset* test = data.test ? &*data.test : nullptr;

  RunReport report;
  if (mode == "erm") {
    const ErmRunResult result = ErmTrain(data.train, data.val, cfg.fairif, test);
    SaveCheckpoint(OutputPath(cfg, "erm_model.ckpt"), result.model);
    report = result.report;
  } else {
    const FairIFResult result = FairIFTrain(data.train, data.val, cfg.fairif, test);
    SaveCheckpoint(OutputPath(cfg, "erm_model.ckpt"), result.erm_model);
    SaveCheckpoint(OutputPath(cfg, "fair_model.ckpt"), result.fair_model);
    WriteWeightsCsv(OutputPath(cfg, "weights.csv"), result.eps, result.weights);
    WriteCoefficientsCsv(OutputPath(cfg, "coefficients.csv"), result.coefficients);
    report = result.report;
  }
  WriteText(OutputPath(cfg, "run_report.json"), ToJson(report).dump(2) + "\n");
  const std::string table = RunCsvHeader() + "\n" + RunCsvRow(cfg.run_name, report) + "\n";
  WriteText(OutputPath(cfg, "runs.csv"), table);
  out << table;
  return 0;
}

int CmdEvaluate(const std::string& checkpoint, const std::string& data_csv,
                std::ostream& out) {
  const Model model = LoadCheckpoint(checkpoint);
  const Dataset data = LoadCsv(data_csv);
  if (!data.has_groups()) {
    throw Error(ErrorKind::kSchema, "evaluate requires a group column in " + data_csv);
  }
  if (data.dim() != model.input_dim()) {
    throw Error(ErrorKind::kShape, "data has " + std::to_string(data.dim()) +
                                       " features but the model expects " +
                                       std::to_string(model.input_dim()));
  }
  nlohmann::json doc = ToJson(Evaluate(model, data));
  doc["schema"] = 1;
  out << doc.dump(2) << '\n';
  return 0;
}

std::vector<double> ParseFractions(const std::string& list) {
  std::vector<double> fractions;
  for (const auto& field : SplitFields(list, ',')) {
    const auto v = ParseDouble(Trim(field));
    if (!v) throw Error(ErrorKind::kConfig, "bad validation fraction '" + field + "'");
    fractions.push_back(*v);
  }
  if (fractions.empty()) throw Error(ErrorKind::kConfig, "no validation fractions given");
  return fractions;
}

int CmdSweep(const std::string& config_path, const std::string& fraction_list,
             int jobs, std::ostream& out) {
  const std::vector<double> fractions = ParseFractions(fraction_list);
  const RunConfig cfg = LoadRunConfig(config_path, SeedFromEnvironment());
  const LoadedData data = LoadData(cfg);
  const Dataset* test = data.test ? &*data.test : nullptr;
  const auto entries = ValidationSizeSweep(data.train, data.val, cfg.fairif, fractions,
                                           cfg.sweep_seed, test, jobs);
  std::ostringstream table;
  table << "fraction,skipped," << RunCsvHeader() << '\n';
  for (const auto& entry : entries) {
    const std::string tag = FormatDouble(entry.fraction, 6);
    if (entry.skipped) {
      table << tag << ",true," << cfg.run_name << ",,,,,,,,,,,\n";
    } else {
      table << tag << ",false," << RunCsvRow(cfg.run_name, *entry.report) << '\n';
      WriteText(OutputPath(cfg, "sweep_" + tag + ".json"),
                ToJson(*entry.report).dump(2) + "\n");
    }
    for (const auto& w : entry.warnings) {
      out << "# fraction " << tag << ": " << w << '\n';
    }
  }
  WriteText(OutputPath(cfg, "sweep.csv"), table.str());
  out << table.str();
  return 0;
}

int CmdWeightsReport(const std::string& weights_csv, const std::string& train_csv,
                     int top, std::ostream& out) {
  if (top < 0) throw Error(ErrorKind::kConfig, "--top must be nonnegative");
  const WeightFile file = ReadWeightsCsv(weights_csv);
  const Dataset train = LoadCsv(train_csv);
  if (file.eps.eps.size() != train.n()) {
    throw Error(ErrorKind::kShape, "weights file has " +
                                       std::to_string(file.eps.eps.size()) +
                                       " rows but the training set has " +
                                       std::to_string(train.n()));
  }
  out << "direction,rank,index,epsilon,weight,label,group\n";
  for (const bool up : {true, false}) {
    const auto ranked = TopWeights(file.eps, file.weights, up, top);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      const auto& row = ranked[r];
      out << (up ? "up" : "down") << ',' << r + 1 << ',' << row.index << ','
          << FormatDouble(row.epsilon) << ',' << FormatDouble(row.weight) << ','
          << train.y(row.index) << ',';
      if (train.has_groups()) out << train.s(row.index);
      out << '\n';
    }
  }
  return 0;
}

}  // namespace

RunConfig ParseRunConfig(const std::string& text, const std::string& base_dir,
                         std::optional<std::uint64_t> seed_override) {
  RunConfig cfg;
  FairIFConfig& f = cfg.fairif;
  std::optional<std::uint64_t> init_seed, stage2_seed, train_seed, solver_seed,
      noise_seed, sweep_seed;
  std::optional<TrainConfig> stage2;
  TrainConfig stage2_cfg;
  bool stage2_seen = false;

  std::map<std::string, Setter> keys;
  keys["data.train"] = [&](const std::string& v) { cfg.train_csv = v; };
  keys["data.val"] = [&](const std::string& v) { cfg.val_csv = v; };
  keys["data.test"] = [&](const std::string& v) { cfg.test_csv = v; };
  keys["data.scenario"] = [&](const std::string& v) { cfg.scenario_file = v; };
  keys["data.label_column"] = [&](const std::string& v) { cfg.schema.label_column = v; };
  keys["data.group_column"] = [&](const std::string& v) { cfg.schema.group_column = v; };
  keys["model.kind"] = [&](const std::string& v) { f.model.kind = ParseModelKind(v); };
  keys["model.hidden"] = [&](const std::string& v) {
    f.model.hidden = IntValue("model.hidden", v);
  };
  AddTrainKeys(keys, "train", f.stage1);
  AddTrainKeys(keys, "stage2", stage2_cfg);
  keys["solver.method"] = [&](const std::string& v) {
    f.solver.method = ParseSolverMethod(v);
  };
  keys["solver.damping"] = [&](const std::string& v) {
    f.solver.damping = NumberValue("solver.damping", v);
  };
  keys["solver.hessian"] = [&](const std::string& v) {
    if (v == "exact") {
      f.solver.hessian = HessianKind::kExact;
    } else if (v == "gauss_newton") {
      f.solver.hessian = HessianKind::kGaussNewton;
    } else {
      throw Error(ErrorKind::kConfig, "solver.hessian must be exact or gauss_newton");
    }
  };
  keys["solver.lissa_depth"] = [&](const std::string& v) {
    f.solver.lissa.depth = static_cast<int>(IntValue("solver.lissa_depth", v));
  };
  keys["solver.lissa_repeats"] = [&](const std::string& v) {
    f.solver.lissa.repeats = static_cast<int>(IntValue("solver.lissa_repeats", v));
  };
  keys["solver.lissa_batch_size"] = [&](const std::string& v) {
    f.solver.lissa.batch_size = static_cast<int>(IntValue("solver.lissa_batch_size", v));
  };
  keys["solver.lissa_scale"] = [&](const std::string& v) {
    f.solver.lissa.scale = NumberValue("solver.lissa_scale", v);
  };
  keys["solver.cg_tol"] = [&](const std::string& v) {
    f.solver.cg_tol = NumberValue("solver.cg_tol", v);
  };
  keys["solver.cg_max_iter"] = [&](const std::string& v) {
    f.solver.cg_max_iter = static_cast<int>(IntValue("solver.cg_max_iter", v));
  };
  keys["fairif.lambda"] = [&](const std::string& v) { f.lambda = NumberValue("fairif.lambda", v); };
  keys["fairif.temperature"] = [&](const std::string& v) {
    f.soft.temperature = NumberValue("fairif.temperature", v);
  };
  keys["fairif.gumbel_noise"] = [&](const std::string& v) {
    f.soft.gumbel_noise = BoolValue("fairif.gumbel_noise", v);
  };
  keys["fairif.weight_policy"] = [&](const std::string& v) {
    f.weight_policy = ParseWeightPolicy(v);
  };
  keys["fairif.channel_weight_tpr"] = [&](const std::string& v) {
    f.channel_weights[0] = NumberValue("fairif.channel_weight_tpr", v);
  };
  keys["fairif.channel_weight_tnr"] = [&](const std::string& v) {
    f.channel_weights[1] = NumberValue("fairif.channel_weight_tnr", v);
  };
  keys["fairif.warm_start"] = [&](const std::string& v) {
    f.warm_start = BoolValue("fairif.warm_start", v);
  };
  keys["fairif.top_k"] = [&](const std::string& v) {
    f.top_k = static_cast<int>(IntValue("fairif.top_k", v));
  };
  keys["seeds.seed"] = [&](const std::string& v) { cfg.seed = SeedValue("seeds.seed", v); };
  keys["seeds.init"] = [&](const std::string& v) { init_seed = SeedValue("seeds.init", v); };
  keys["seeds.stage2_init"] = [&](const std::string& v) {
    stage2_seed = SeedValue("seeds.stage2_init", v);
  };
  keys["seeds.train"] = [&](const std::string& v) { train_seed = SeedValue("seeds.train", v); };
  keys["seeds.solver"] = [&](const std::string& v) {
    solver_seed = SeedValue("seeds.solver", v);
  };
  keys["seeds.noise"] = [&](const std::string& v) { noise_seed = SeedValue("seeds.noise", v); };
  keys["seeds.sweep"] = [&](const std::string& v) { sweep_seed = SeedValue("seeds.sweep", v); };
  keys["output.dir"] = [&](const std::string& v) { cfg.output_dir = v; };
  keys["output.run_name"] = [&](const std::string& v) { cfg.run_name = v; };

  for (const ConfigEntry& entry : ParseSectionedLines(text, ErrorKind::kConfig)) {
    const std::string name = Qualified(entry);
    const auto it = keys.find(name);
    if (it == keys.end()) {
      throw Error(ErrorKind::kConfig, "unknown key '" + name + "' at line " +
                                          std::to_string(entry.line));
    }
    if (entry.section == "stage2") stage2_seen = true;
    it->second(entry.value);
  }
  if (cfg.schema.group_column && cfg.schema.group_column->empty()) {
    cfg.schema.group_column.reset();
  }

  // Stage two inherits the stage-one settings unless [stage2] overrides them.
  if (stage2_seen) {
    TrainConfig merged = f.stage1;
    const TrainConfig defaults;
    if (stage2_cfg.learning_rate != defaults.learning_rate) merged.learning_rate = stage2_cfg.learning_rate;
    if (stage2_cfg.epochs != defaults.epochs) merged.epochs = stage2_cfg.epochs;
    if (stage2_cfg.batch_size != defaults.batch_size) merged.batch_size = stage2_cfg.batch_size;
    if (stage2_cfg.convergence_tol != defaults.convergence_tol) {
      merged.convergence_tol = stage2_cfg.convergence_tol;
    }
    f.stage2 = merged;
  } else {
    f.stage2 = f.stage1;
  }

  if (seed_override) {
    cfg.seed = *seed_override;
    init_seed = stage2_seed = train_seed = solver_seed = noise_seed = sweep_seed =
        std::nullopt;
  }
  f.init_seed = init_seed.value_or(cfg.seed);
  f.stage2_init_seed = stage2_seed.value_or(cfg.seed);
  f.stage1.seed = train_seed.value_or(cfg.seed);
  f.stage2.seed = f.stage1.seed;
  f.solver.lissa.seed = solver_seed.value_or(cfg.seed);
  f.soft.noise_seed = noise_seed.value_or(cfg.seed);
  cfg.sweep_seed = sweep_seed.value_or(cfg.seed);

  if (!(f.lambda > 0.0)) throw Error(ErrorKind::kConfig, "fairif.lambda must be positive");
  if (!(f.soft.temperature > 0.0)) {
    throw Error(ErrorKind::kConfig, "fairif.temperature must be positive");
  }
  if (f.solver.damping < 0.0) {
    throw Error(ErrorKind::kConfig, "solver.damping must be nonnegative");
  }
  if (f.model.hidden <= 0) throw Error(ErrorKind::kConfig, "model.hidden must be positive");

  if (!cfg.scenario_file.empty()) {
    if (!cfg.train_csv.empty() || !cfg.val_csv.empty() || !cfg.test_csv.empty()) {
      throw Error(ErrorKind::kConfig, "data.scenario excludes data.train/val/test");
    }
    cfg.scenario_file = ResolvePath(base_dir, cfg.scenario_file);
    RequireFile(cfg.scenario_file, "scenario file");
  } else {
    if (cfg.train_csv.empty()) throw Error(ErrorKind::kConfig, "missing key 'data.train'");
    if (cfg.val_csv.empty()) throw Error(ErrorKind::kConfig, "missing key 'data.val'");
    cfg.train_csv = ResolvePath(base_dir, cfg.train_csv);
    cfg.val_csv = ResolvePath(base_dir, cfg.val_csv);
    cfg.test_csv = ResolvePath(base_dir, cfg.test_csv);
    RequireFile(cfg.train_csv, "train CSV");
    RequireFile(cfg.val_csv, "validation CSV");
    if (!cfg.test_csv.empty()) RequireFile(cfg.test_csv, "test CSV");
  }
  cfg.output_dir = ResolvePath(base_dir, cfg.output_dir);
  return cfg;
}

RunConfig LoadRunConfig(const std::string& path,
                        std::optional<std::uint64_t> seed_override) {
  RequireFile(path, "config file");
  return ParseRunConfig(ReadFile(path), fs::path(path).parent_path().string(),
                        seed_override);
}

std::optional<std::uint64_t> SeedFromEnvironment() {
  const char* raw = std::getenv("FAIRWEIGHT_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const auto v = ParseInt(Trim(raw));
  if (!v || *v < 0) {
    throw Error(ErrorKind::kConfig,
                std::string("FAIRWEIGHT_SEED must be a nonnegative integer, got '") + raw + "'");
  }
  return static_cast<std::uint64_t>(*v);
}

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fairweight: influence-based sample reweighting for group fairness",
               "fairweight"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  auto* generate = app.add_subcommand("generate", "Write train/val/test CSVs from a scenario file");
  generate->add_option("scenario", scenario_path, "Scenario file")->required();
  generate->add_option("out_dir", out_dir, "Output directory")->required();

  std::string train_config, mode = "fairif";
  auto* train = app.add_subcommand("train", "Run ERM or the full FairIF pipeline");
  train->add_option("config", train_config, "Run config file")->required();
  train->add_option("--mode", mode, "erm or fairif")
      ->check(CLI::IsMember({"erm", "fairif"}));

  std::string checkpoint, data_csv;
  auto* evaluate = app.add_subcommand("evaluate", "Print fairness metrics of a checkpoint");
  evaluate->add_option("checkpoint", checkpoint, "Model checkpoint")->required();
  evaluate->add_option("data", data_csv, "CSV with label and group columns")->required();

  std::string sweep_config, fractions = "1.0,0.5,0.25,0.1";
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "FairIF over stratified validation subsamples");
  sweep->add_option("config", sweep_config, "Run config file")->required();
  sweep->add_option("--val-fractions", fractions, "Comma-separated fractions in (0, 1]");
  sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  std::string weights_csv, weights_train;
  int top = 10;
  auto* weights = app.add_subcommand("weights-report", "Top up- and down-weighted samples");
  weights->add_option("weights", weights_csv, "weights.csv from a FairIF run")->required();
  weights->add_option("train", weights_train, "Training CSV")->required();
  weights->add_option("--top", top, "Rows per direction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate) return CmdGenerate(scenario_path, out_dir, out);
    if (*train) return CmdTrain(train_config, mode, out);
    if (*evaluate) return CmdEvaluate(checkpoint, data_csv, out);
    if (*sweep) return CmdSweep(sweep_config, fractions, jobs, out);
    if (*weights) return CmdWeightsReport(weights_csv, weights_train, top, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return ExitCodeFor(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace fairweight
