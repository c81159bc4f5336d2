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

#include "fairweight/error.hpp"

namespace fairweight {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSchema: return "schema error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kScenario: return "scenario error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kPrecondition: return "precondition error";
    case ErrorKind::kUndefinedMetric: return "undefined metric";
    case ErrorKind::kDivergence: return "divergence error";
    case ErrorKind::kConvergence: return "convergence error";
    case ErrorKind::kDegenerateWeights: return "degenerate weights";
    case ErrorKind::kClassification: return "classification error";
    case ErrorKind::kOracle: return "oracle error";
    case ErrorKind::kIo: return "io error";
  }
  return "error";
}

bool IsInputError(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSchema:
    case ErrorKind::kParse:
    case ErrorKind::kFormat:
    case ErrorKind::kScenario:
    case ErrorKind::kConfig:
    case ErrorKind::kShape:
    case ErrorKind::kPrecondition:
    case ErrorKind::kIo:
      return true;
    default:
      return false;
  }
}

}  // namespace fairweight
