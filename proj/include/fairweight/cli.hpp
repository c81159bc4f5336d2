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

#ifndef FAIRWEIGHT_CLI_HPP_
#define FAIRWEIGHT_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "fairweight/datamodel.hpp"
#include "fairweight/pipeline.hpp"

namespace fairweight {

// Parsed run configuration. Paths are resolved against the directory of the
// config file.
struct RunConfig {
  std::string train_csv;
  std::string val_csv;
  std::string test_csv;      // optional
  std::string scenario_file;  // alternative to the CSV paths
  CsvSchema schema;
  FairIFConfig fairif;
  std::uint64_t seed = 0;
  std::uint64_t sweep_seed = 0;
  std::string output_dir = "out";
  std::string run_name = "run";
};

// Sections: [data], [model], [train], [stage2], [solver], [fairif], [seeds],
// [output]. Unknown sections or keys raise kConfig. `seed_override` replaces
// every seed in the file (and the scenario seed).
RunConfig ParseRunConfig(const std::string& text, const std::string& base_dir,
                         std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig LoadRunConfig(const std::string& path,
                        std::optional<std::uint64_t> seed_override = std::nullopt);

// Reads FAIRWEIGHT_SEED; throws kConfig when it is set but not an integer.
std::optional<std::uint64_t> SeedFromEnvironment();

// Entry point for the fairweight executable. Returns 0 on success, 2 on
// input or configuration errors and 3 on pipeline errors.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fairweight

#endif  // FAIRWEIGHT_CLI_HPP_
