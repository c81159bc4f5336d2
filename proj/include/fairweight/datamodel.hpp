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

#ifndef FAIRWEIGHT_DATAMODEL_HPP_
#define FAIRWEIGHT_DATAMODEL_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fairweight {

using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Sample {
  Eigen::VectorXd features;
  int label = 0;
};

struct SensitiveSample {
  Sample base;
  int group = 0;
};

// Counts indexed as cells[label][group].
using CellTable = std::array<std::array<std::int64_t, 2>, 2>;

// Immutable collection of samples sharing one feature dimension. Groups are
// either present for every sample or for none.
class Dataset {
 public:
  Dataset() = default;
  Dataset(FeatureMatrix features, std::vector<int> labels,
          std::optional<std::vector<int>> groups = std::nullopt);
  // Empty dataset that still knows its feature dimension.
  static Dataset Empty(Eigen::Index dim, bool has_groups);

  Eigen::Index n() const { return features_.rows(); }
  Eigen::Index dim() const { return dim_; }
  bool has_groups() const { return groups_.has_value(); }

  const FeatureMatrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  // Throws kPrecondition when the dataset carries no groups.
  const std::vector<int>& groups() const;

  auto x(Eigen::Index i) const { return features_.row(i); }
  int y(Eigen::Index i) const { return labels_[static_cast<std::size_t>(i)]; }
  int s(Eigen::Index i) const;

  Sample sample(Eigen::Index i) const;
  SensitiveSample sensitive_sample(Eigen::Index i) const;

  Dataset Subset(const std::vector<Eigen::Index>& indices) const;
  // Samples of one sensitive group, in original order.
  Dataset GroupSlice(int group) const;
  // Dataset with every row repeated `times` times, in order.
  Dataset Repeat(int times) const;

  CellTable CellCounts() const;
  std::array<std::int64_t, 2> ClassCounts() const;

  bool operator==(const Dataset& other) const;

 private:
  FeatureMatrix features_;
  std::vector<int> labels_;
  std::optional<std::vector<int>> groups_;
  Eigen::Index dim_ = 0;
};

enum class BiasKind {
  kGroupSizeDiscrepancy,
  kGroupDistributionShift,
  kClassSizeDiscrepancy,
};

const char* BiasKindName(BiasKind kind);
BiasKind ParseBiasKind(const std::string& name);

// Per-cell Gaussian means (indexed [label][group]) with isotropic noise.
struct FeatureSpec {
  std::array<std::array<Eigen::VectorXd, 2>, 2> means;
  double noise_scale = 1.0;

  Eigen::Index dim() const { return means[0][0].size(); }
};

// Geometry knobs for the default per-cell feature clusters.
struct ClusterGeometry {
  Eigen::Index dim = 20;
  // Distance between class means along coordinate 0.
  double class_separation = 2.5;
  // Offset of group 1 on coordinate 1; makes group membership learnable.
  double group_offset = 5.0;
  // Shift of group 1 toward the positive class along coordinate 0.
  double group_shift = 1.6;
  double noise_scale = 1.0;
};

FeatureSpec MakeFeatureSpec(const ClusterGeometry& geometry);

struct BiasScenario {
  BiasKind kind = BiasKind::kGroupSizeDiscrepancy;
  CellTable cell_counts{};
  FeatureSpec feature_spec;
  std::uint64_t seed = 0;
};

struct GroupClassStats {
  double alpha = 0.0;  // P(y=1 | s=0)
  double beta = 0.0;   // P(y=1 | s=1)
  std::array<std::int64_t, 2> group_sizes{};
  std::array<std::int64_t, 2> class_sizes{};
};

GroupClassStats StatsFromCells(const CellTable& cells);

// Relative tolerance used when comparing sizes, and absolute tolerance used
// when comparing conditional class proportions.
inline constexpr double kDefaultScenarioTolerance = 0.05;

// Which bias structure a cell table satisfies, if any. Checked in the order
// group size, distribution shift, class size.
std::optional<BiasKind> ClassifyCells(const CellTable& cells,
                                      double tolerance = kDefaultScenarioTolerance);

// Returns `scenario` unchanged or throws kScenario naming the violated
// constraint of the declared kind.
BiasScenario ValidateScenario(const BiasScenario& scenario,
                              double tolerance = kDefaultScenarioTolerance);

// Draws exactly cell_counts[y][s] samples per cell. Rows are ordered by cell
// then shuffled with the scenario seed.
Dataset GenerateSynthetic(const BiasScenario& scenario);

// Scales every cell of `cells` by `ratio`, rounding to nearest.
CellTable ScaleCells(const CellTable& cells, double ratio);

struct SplitFractions {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
  std::array<std::vector<Eigen::Index>, 3> indices;
};

// Disjoint partition of `data`, stratified by (label, group) cell when groups
// are present and by label otherwise.
SplitResult Split(const Dataset& data, const SplitFractions& fractions,
                  std::uint64_t seed);

struct SubsampleResult {
  Dataset data;
  std::vector<Eigen::Index> indices;
  std::vector<std::string> warnings;
};

SubsampleResult SubsampleValidation(const Dataset& val, double fraction,
                                    std::uint64_t seed);

struct CsvSchema {
  std::string label_column = "label";
  std::optional<std::string> group_column = "group";
  // Empty means every column other than label/group, in file order.
  std::vector<std::string> feature_columns;
  // When true a missing group column is tolerated and has_groups stays false.
  bool group_optional = true;
};

Dataset LoadCsv(const std::string& path, const CsvSchema& schema = {});
// Header "x0,...,x{d-1},label[,group]"; features at 9 significant digits
// unless `precision` says otherwise.
void WriteCsv(const std::string& path, const Dataset& data, int precision = 9);

// Flat key=value scenario file (see README for keys).
struct ScenarioFile {
  BiasScenario scenario;
  ClusterGeometry geometry;
  double val_ratio = 0.2;
  double test_ratio = 0.2;
};

ScenarioFile ParseScenarioFile(const std::string& path);
ScenarioFile ParseScenarioText(const std::string& text);

struct ScenarioSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Validates the scenario, then draws train from its cells and val/test from
// the cells scaled by val_ratio/test_ratio, each with its own derived seed.
ScenarioSplits GenerateScenarioSplits(const ScenarioFile& file);

}  // namespace fairweight

#endif  // FAIRWEIGHT_DATAMODEL_HPP_
