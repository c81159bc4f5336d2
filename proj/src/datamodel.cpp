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

#include "fairweight/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

#include "fairweight/error.hpp"
#include "fairweight/text.hpp"

namespace fairweight {

Dataset::Dataset(FeatureMatrix features, std::vector<int> labels,
                 std::optional<std::vector<int>> groups)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      groups_(std::move(groups)),
      dim_(features_.cols()) {
  if (static_cast<Eigen::Index>(labels_.size()) != features_.rows()) {
    throw Error(ErrorKind::kShape, "label count " +
                                       std::to_string(labels_.size()) +
                                       " does not match feature rows " +
                                       std::to_string(features_.rows()));
  }
  if (groups_ && groups_->size() != labels_.size()) {
    throw Error(ErrorKind::kShape, "group count does not match label count");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 0 && labels_[i] != 1) {
      throw Error(ErrorKind::kParse,
                  "label at row " + std::to_string(i) + " is not in {0,1}");
    }
    if (groups_ && (*groups_)[i] != 0 && (*groups_)[i] != 1) {
      throw Error(ErrorKind::kParse,
                  "group at row " + std::to_string(i) + " is not in {0,1}");
    }
  }
  if (!features_.allFinite()) {
    throw Error(ErrorKind::kParse, "features contain NaN or Inf");
  }
}

Dataset Dataset::Empty(Eigen::Index dim, bool has_groups) {
  Dataset data(FeatureMatrix(0, dim), {},
               has_groups ? std::optional<std::vector<int>>(std::vector<int>{})
                          : std::nullopt);
  return data;
}

const std::vector<int>& Dataset::groups() const {
  if (!groups_) {
    throw Error(ErrorKind::kPrecondition, "dataset has no group attribute");
  }
  return *groups_;
}

int Dataset::s(Eigen::Index i) const {
  return groups()[static_cast<std::size_t>(i)];
}

Sample Dataset::sample(Eigen::Index i) const {
  return Sample{features_.row(i).transpose(), y(i)};
}

SensitiveSample Dataset::sensitive_sample(Eigen::Index i) const {
  return SensitiveSample{sample(i), s(i)};
}

Dataset Dataset::Subset(const std::vector<Eigen::Index>& indices) const {
  FeatureMatrix x(static_cast<Eigen::Index>(indices.size()), dim_);
  std::vector<int> y;
  y.reserve(indices.size());
  std::optional<std::vector<int>> g;
  if (groups_) g.emplace().reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Eigen::Index i = indices[k];
    if (i < 0 || i >= n()) {
      throw Error(ErrorKind::kShape, "subset index out of range");
    }
    x.row(static_cast<Eigen::Index>(k)) = features_.row(i);
    y.push_back(labels_[static_cast<std::size_t>(i)]);
    if (g) g->push_back((*groups_)[static_cast<std::size_t>(i)]);
  }
  return Dataset(std::move(x), std::move(y), std::move(g));
}

Dataset Dataset::GroupSlice(int group) const {
  const auto& gs = groups();
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < n(); ++i) {
    if (gs[static_cast<std::size_t>(i)] == group) idx.push_back(i);
  }
  return Subset(idx);
}

Dataset Dataset::Repeat(int times) const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < n(); ++i) {
    for (int t = 0; t < times; ++t) idx.push_back(i);
  }
  return Subset(idx);
}

CellTable Dataset::CellCounts() const {
  const auto& gs = groups();
  CellTable cells{};
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    ++cells[static_cast<std::size_t>(labels_[i])]
           [static_cast<std::size_t>(gs[i])];
  }
  return cells;
}

std::array<std::int64_t, 2> Dataset::ClassCounts() const {
  std::array<std::int64_t, 2> counts{};
  for (int label : labels_) ++counts[static_cast<std::size_t>(label)];
  return counts;
}

bool Dataset::operator==(const Dataset& other) const {
  return dim_ == other.dim_ && labels_ == other.labels_ &&
         groups_ == other.groups_ &&
         features_.rows() == other.features_.rows() &&
         (features_.array() == other.features_.array()).all();
}

// ---------------------------------------------------------------------------
// Bias scenarios

const char* BiasKindName(BiasKind kind) {
  switch (kind) {
    case BiasKind::kGroupSizeDiscrepancy:
      return "group_size_discrepancy";
    case BiasKind::kGroupDistributionShift:
      return "group_distribution_shift";
    case BiasKind::kClassSizeDiscrepancy:
      return "class_size_discrepancy";
  }
  return "unknown";
}

BiasKind ParseBiasKind(const std::string& name) {
  for (BiasKind kind :
       {BiasKind::kGroupSizeDiscrepancy, BiasKind::kGroupDistributionShift,
        BiasKind::kClassSizeDiscrepancy}) {
    if (name == BiasKindName(kind)) return kind;
  }
  throw Error(ErrorKind::kScenario, "unknown bias kind '" + name + "'");
}

FeatureSpec MakeFeatureSpec(const ClusterGeometry& geometry) {
  if (geometry.dim < 2) {
    throw Error(ErrorKind::kScenario, "feature dimension must be at least 2");
  }
  if (!(geometry.noise_scale > 0.0)) {
    throw Error(ErrorKind::kScenario, "noise_scale must be positive");
  }
  FeatureSpec spec;
  spec.noise_scale = geometry.noise_scale;
  for (int y = 0; y < 2; ++y) {
    for (int s = 0; s < 2; ++s) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(geometry.dim);
      mean(0) = (y == 1 ? 0.5 : -0.5) * geometry.class_separation +
                (s == 1 ? geometry.group_shift : 0.0);
      mean(1) = s == 1 ? geometry.group_offset : 0.0;
      spec.means[y][s] = std::move(mean);
    }
  }
  return spec;
}

GroupClassStats StatsFromCells(const CellTable& cells) {
  GroupClassStats stats;
  for (int s = 0; s < 2; ++s) {
    stats.group_sizes[s] = cells[0][s] + cells[1][s];
  }
  for (int y = 0; y < 2; ++y) {
    stats.class_sizes[y] = cells[y][0] + cells[y][1];
  }
  stats.alpha = stats.group_sizes[0] > 0
                    ? static_cast<double>(cells[1][0]) / stats.group_sizes[0]
                    : 0.0;
  stats.beta = stats.group_sizes[1] > 0
                   ? static_cast<double>(cells[1][1]) / stats.group_sizes[1]
                   : 0.0;
  return stats;
}

namespace {

bool SizesEqual(std::int64_t a, std::int64_t b, double tolerance) {
  const auto hi = static_cast<double>(std::max(a, b));
  return std::abs(static_cast<double>(a - b)) <= tolerance * hi;
}

// Empty string when the table satisfies `kind`, else the violated constraint.
std::string Violation(BiasKind kind, const CellTable& cells, double tol) {
  for (int y = 0; y < 2; ++y) {
    for (int s = 0; s < 2; ++s) {
      if (cells[y][s] < 0) return "cell counts must be nonnegative";
    }
  }
  const GroupClassStats st = StatsFromCells(cells);
  if (st.group_sizes[0] == 0 || st.group_sizes[1] == 0) {
    return "both groups must be nonempty";
  }
  const bool equal_groups = SizesEqual(st.group_sizes[0], st.group_sizes[1], tol);
  const bool equal_classes = SizesEqual(st.class_sizes[0], st.class_sizes[1], tol);
  const bool equal_dists = std::abs(st.alpha - st.beta) <= tol;
  switch (kind) {
    case BiasKind::kGroupSizeDiscrepancy:
      if (!equal_classes) return "group_size_discrepancy requires equal class sizes";
      if (!equal_dists) {
        return "group_size_discrepancy requires equal per-group class "
               "distributions (alpha == beta)";
      }
      return {};
    case BiasKind::kGroupDistributionShift:
      if (!equal_groups) return "group_distribution_shift requires equal group sizes";
      if (!equal_classes) return "group_distribution_shift requires equal class sizes";
      if (std::abs(st.alpha + st.beta - 1.0) > tol) {
        return "group_distribution_shift requires alpha == 1 - beta";
      }
      return {};
    case BiasKind::kClassSizeDiscrepancy:
      if (!equal_groups) return "class_size_discrepancy requires equal group sizes";
      if (!equal_dists) {
        return "class_size_discrepancy requires equal per-group class "
               "distributions (alpha == beta)";
      }
      if (equal_classes) return "class_size_discrepancy requires unequal class sizes";
      return {};
  }
  return "unknown bias kind";
}

}  // namespace

std::optional<BiasKind> ClassifyCells(const CellTable& cells, double tolerance) {
  for (BiasKind kind :
       {BiasKind::kGroupSizeDiscrepancy, BiasKind::kGroupDistributionShift,
        BiasKind::kClassSizeDiscrepancy}) {
    if (Violation(kind, cells, tolerance).empty()) return kind;
  }
  return std::nullopt;
}

BiasScenario ValidateScenario(const BiasScenario& scenario, double tolerance) {
  const std::string violation =
      Violation(scenario.kind, scenario.cell_counts, tolerance);
  if (!violation.empty()) throw Error(ErrorKind::kScenario, violation);
  return scenario;
}

Dataset GenerateSynthetic(const BiasScenario& scenario) {
  const FeatureSpec& spec = scenario.feature_spec;
  const Eigen::Index d = spec.dim();
  if (d <= 0) throw Error(ErrorKind::kScenario, "feature spec has no means");
  if ((spec.means[1][0] - spec.means[0][0]).squaredNorm() == 0.0 ||
      (spec.means[1][1] - spec.means[0][1]).squaredNorm() == 0.0) {
    throw Error(ErrorKind::kScenario, "class means must differ within each group");
  }
  std::int64_t total = 0;
  for (const auto& row : scenario.cell_counts) {
    for (std::int64_t c : row) {
      if (c < 0) throw Error(ErrorKind::kScenario, "negative cell count");
      total += c;
    }
  }

  std::mt19937_64 rng(scenario.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureMatrix x(total, d);
  std::vector<int> labels;
  std::vector<int> groups;
  labels.reserve(static_cast<std::size_t>(total));
  groups.reserve(static_cast<std::size_t>(total));
  Eigen::Index row = 0;
  for (int y = 0; y < 2; ++y) {
    for (int s = 0; s < 2; ++s) {
      const Eigen::VectorXd& mean = spec.means[y][s];
      for (std::int64_t k = 0; k < scenario.cell_counts[y][s]; ++k, ++row) {
        for (Eigen::Index j = 0; j < d; ++j) {
          x(row, j) = mean(j) + spec.noise_scale * normal(rng);
        }
        labels.push_back(y);
        groups.push_back(s);
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  Dataset ordered(std::move(x), std::move(labels), std::move(groups));
  return ordered.Subset(order);
}

CellTable ScaleCells(const CellTable& cells, double ratio) {
  CellTable out{};
  for (int y = 0; y < 2; ++y) {
    for (int s = 0; s < 2; ++s) {
      out[y][s] = std::llround(static_cast<double>(cells[y][s]) * ratio);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

namespace {

// Indices grouped by stratum: (label, group) cell when groups exist, label
// otherwise. Strata keep ascending index order.
std::vector<std::vector<Eigen::Index>> Strata(const Dataset& data) {
  std::vector<std::vector<Eigen::Index>> strata(data.has_groups() ? 4 : 2);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const int key = data.has_groups() ? 2 * data.y(i) + data.s(i) : data.y(i);
    strata[static_cast<std::size_t>(key)].push_back(i);
  }
  return strata;
}

}  // namespace

SplitResult Split(const Dataset& data, const SplitFractions& fractions,
                  std::uint64_t seed) {
  if (!(fractions.train > 0 && fractions.val > 0 && fractions.test > 0)) {
    throw Error(ErrorKind::kConfig, "split fractions must be positive");
  }
  if (std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw Error(ErrorKind::kConfig, "split fractions must sum to 1");
  }
  std::mt19937_64 rng(seed);
  SplitResult result;
  // Boundaries are rounded on the running offset across strata, so per-split
  // totals equal round(fraction * n) while each stratum stays within one
  // sample of its exact share.
  const double cut1 = fractions.train;
  const double cut2 = fractions.train + fractions.val;
  Eigen::Index offset = 0;
  for (auto& stratum : Strata(data)) {
    std::shuffle(stratum.begin(), stratum.end(), rng);
    const auto m = static_cast<Eigen::Index>(stratum.size());
    const auto b1 = [&](Eigen::Index pos) {
      return static_cast<Eigen::Index>(std::llround(cut1 * static_cast<double>(pos)));
    };
    const auto b2 = [&](Eigen::Index pos) {
      return static_cast<Eigen::Index>(std::llround(cut2 * static_cast<double>(pos)));
    };
    const Eigen::Index n_train = b1(offset + m) - b1(offset);
    const Eigen::Index n_val = (b2(offset + m) - b2(offset)) - n_train;
    for (Eigen::Index k = 0; k < m; ++k) {
      const int which = k < n_train ? 0 : (k < n_train + n_val ? 1 : 2);
      result.indices[static_cast<std::size_t>(which)].push_back(
          stratum[static_cast<std::size_t>(k)]);
    }
    offset += m;
  }
  for (auto& idx : result.indices) std::sort(idx.begin(), idx.end());
  result.train = data.Subset(result.indices[0]);
  result.val = data.Subset(result.indices[1]);
  result.test = data.Subset(result.indices[2]);
  return result;
}

SubsampleResult SubsampleValidation(const Dataset& val, double fraction,
                                    std::uint64_t seed) {
  if (!val.has_groups()) {
    throw Error(ErrorKind::kPrecondition,
                "validation subsampling requires group annotations");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::kConfig, "subsample fraction must be in (0, 1]");
  }
  std::mt19937_64 rng(seed);
  SubsampleResult result;
  int cell = 0;
  for (auto& stratum : Strata(val)) {
    const int y = cell / 2;
    const int s = cell % 2;
    ++cell;
    std::shuffle(stratum.begin(), stratum.end(), rng);
    const auto keep = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(stratum.size())));
    if (!stratum.empty() && keep == 0) {
      result.warnings.push_back("cell (label=" + std::to_string(y) +
                                ", group=" + std::to_string(s) +
                                ") emptied by subsampling");
    }
    result.indices.insert(result.indices.end(), stratum.begin(),
                          stratum.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::sort(result.indices.begin(), result.indices.end());
  result.data = val.Subset(result.indices);
  return result;
}

// ---------------------------------------------------------------------------
// CSV

Dataset LoadCsv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::kFormat, "'" + path + "' has no header row");
  }
  const std::vector<std::string> header = SplitFields(StripCr(line), ',');

  auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (Trim(header[c]) == name) return c;
    }
    return std::nullopt;
  };

  const auto label_col = find_column(schema.label_column);
  if (!label_col) {
    throw Error(ErrorKind::kSchema,
                "missing label column '" + schema.label_column + "'");
  }
  std::optional<std::size_t> group_col;
  if (schema.group_column) {
    group_col = find_column(*schema.group_column);
    if (!group_col && !schema.group_optional) {
      throw Error(ErrorKind::kSchema,
                  "missing group column '" + *schema.group_column + "'");
    }
  }
  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != *label_col && (!group_col || c != *group_col)) {
        feature_cols.push_back(c);
      }
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      const auto col = find_column(name);
      if (!col) throw Error(ErrorKind::kSchema, "missing feature column '" + name + "'");
      feature_cols.push_back(*col);
    }
  }

  auto parse_binary = [&](std::string_view field, std::size_t row,
                          const char* what) {
    const std::string_view v = Trim(field);
    if (v == "0") return 0;
    if (v == "1") return 1;
    throw Error(ErrorKind::kParse, std::string(what) + " at row " +
                                       std::to_string(row) + " is '" +
                                       std::string(v) + "', expected 0 or 1");
  };

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<int> groups;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = StripCr(line);
    if (line.empty()) continue;
    ++row;
    const std::vector<std::string> fields = SplitFields(line, ',');
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::kFormat,
                  "row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    for (std::size_t c : feature_cols) {
      const auto v = ParseDouble(fields[c]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorKind::kParse, "feature '" + header[c] + "' at row " +
                                           std::to_string(row) +
                                           " is not a finite number");
      }
      values.push_back(*v);
    }
    labels.push_back(parse_binary(fields[*label_col], row, "label"));
    if (group_col) groups.push_back(parse_binary(fields[*group_col], row, "group"));
  }

  const auto d = static_cast<Eigen::Index>(feature_cols.size());
  FeatureMatrix x(static_cast<Eigen::Index>(labels.size()), d);
  if (!values.empty()) {
    x = Eigen::Map<const FeatureMatrix>(values.data(), x.rows(), d);
  }
  std::optional<std::vector<int>> g;
  if (group_col) g = std::move(groups);
  return Dataset(std::move(x), std::move(labels), std::move(g));
}

void WriteCsv(const std::string& path, const Dataset& data, int precision) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  for (Eigen::Index j = 0; j < data.dim(); ++j) out << 'x' << j << ',';
  out << "label";
  if (data.has_groups()) out << ",group";
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      out << FormatDouble(data.features()(i, j), precision) << ',';
    }
    out << data.y(i);
    if (data.has_groups()) out << ',' << data.s(i);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Scenario files

ScenarioFile ParseScenarioText(const std::string& text) {
  ScenarioFile file;
  std::optional<BiasKind> kind;
  std::array<std::array<bool, 2>, 2> have_count{};
  const auto entries = ParseKeyValueLines(text, ErrorKind::kScenario);
  for (const auto& [key, value] : entries) {
    auto number = [&, &key = key, &value = value]() {
      const auto v = ParseDouble(value);
      if (!v) {
        throw Error(ErrorKind::kScenario,
                    "key '" + key + "' has non-numeric value '" + value + "'");
      }
      return *v;
    };
    auto integer = [&, &key = key, &value = value]() {
      const auto v = ParseInt(value);
      if (!v || *v < 0) {
        throw Error(ErrorKind::kScenario, "key '" + key +
                                              "' needs a nonnegative integer, got '" +
                                              value + "'");
      }
      return *v;
    };
    if (key == "kind") {
      kind = ParseBiasKind(value);
    } else if (key.size() == 11 && key.rfind("count_y", 0) == 0 &&
               key.substr(8, 2) == "_s" && (key[7] == '0' || key[7] == '1') &&
               (key[10] == '0' || key[10] == '1')) {
      const int y = key[7] - '0';
      const int s = key[10] - '0';
      file.scenario.cell_counts[y][s] = integer();
      have_count[y][s] = true;
    } else if (key == "seed") {
      file.scenario.seed = static_cast<std::uint64_t>(integer());
    } else if (key == "dim") {
      file.geometry.dim = integer();
    } else if (key == "class_separation") {
      file.geometry.class_separation = number();
    } else if (key == "group_offset") {
      file.geometry.group_offset = number();
    } else if (key == "group_shift") {
      file.geometry.group_shift = number();
    } else if (key == "noise_scale") {
      file.geometry.noise_scale = number();
    } else if (key == "val_ratio") {
      file.val_ratio = number();
    } else if (key == "test_ratio") {
      file.test_ratio = number();
    } else {
      throw Error(ErrorKind::kScenario, "unknown key '" + key + "'");
    }
  }
  if (!kind) throw Error(ErrorKind::kScenario, "missing key 'kind'");
  for (int y = 0; y < 2; ++y) {
    for (int s = 0; s < 2; ++s) {
      if (!have_count[y][s]) {
        throw Error(ErrorKind::kScenario, "missing key 'count_y" +
                                              std::to_string(y) + "_s" +
                                              std::to_string(s) + "'");
      }
    }
  }
  if (!(file.val_ratio > 0.0) || !(file.test_ratio > 0.0)) {
    throw Error(ErrorKind::kScenario, "val_ratio and test_ratio must be positive");
  }
  file.scenario.kind = *kind;
  file.scenario.feature_spec = MakeFeatureSpec(file.geometry);
  return file;
}

ScenarioFile ParseScenarioFile(const std::string& path) {
  return ParseScenarioText(ReadFile(path));
}

ScenarioSplits GenerateScenarioSplits(const ScenarioFile& file) {
  const BiasScenario train = ValidateScenario(file.scenario);
  BiasScenario val = train;
  val.cell_counts = ScaleCells(train.cell_counts, file.val_ratio);
  val.seed = train.seed + 0x9e3779b97f4a7c15ULL;
  BiasScenario test = train;
  test.cell_counts = ScaleCells(train.cell_counts, file.test_ratio);
  test.seed = train.seed + 2 * 0x9e3779b97f4a7c15ULL;
  return {GenerateSynthetic(train), GenerateSynthetic(val), GenerateSynthetic(test)};
}

}  // namespace fairweight
