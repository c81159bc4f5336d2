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

#ifndef FAIRWEIGHT_ERROR_HPP_
#define FAIRWEIGHT_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairweight {

enum class ErrorKind {
  kSchema,
  kParse,
  kFormat,
  kScenario,
  kConfig,
  kShape,
  kPrecondition,
  kUndefinedMetric,
  kDivergence,
  kConvergence,
  kDegenerateWeights,
  kClassification,
  kOracle,
  kIo,
};

std::string_view ErrorKindName(ErrorKind kind);

// True for errors caused by bad input files or configuration (CLI exit 2).
bool IsInputError(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 protected:
  struct Verbatim {};
  Error(ErrorKind kind, const std::string& message, Verbatim)
      : std::runtime_error(message), kind_(kind) {}

 private:
  ErrorKind kind_;
};

// Raised by the pipeline; carries the stage in which the inner error occurred.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& inner)
      : Error(inner.kind(), "[" + stage + "] " + inner.what(), Verbatim{}),
        stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace fairweight

#endif  // FAIRWEIGHT_ERROR_HPP_
