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

#ifndef FAIRWEIGHT_TEXT_HPP_
#define FAIRWEIGHT_TEXT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairweight/error.hpp"

namespace fairweight {

std::string_view Trim(std::string_view s);
std::string StripCr(std::string s);
std::vector<std::string> SplitFields(std::string_view line, char sep);

std::optional<double> ParseDouble(std::string_view s);
std::optional<std::int64_t> ParseInt(std::string_view s);

// printf("%.{precision}g"); precision 17 round-trips a double exactly.
std::string FormatDouble(double value, int precision = 17);

std::string ReadFile(const std::string& path);

struct ConfigEntry {
  std::string section;  // empty for keys before the first [section]
  std::string key;
  std::string value;
  int line = 0;
};

// Parses "key = value" lines with optional "[section]" headers. '#' starts a
// comment. Malformed lines throw `kind`.
std::vector<ConfigEntry> ParseSectionedLines(const std::string& text,
                                             ErrorKind kind);

// Same as above but rejects sections; returns (key, value) pairs.
std::vector<std::pair<std::string, std::string>> ParseKeyValueLines(
    const std::string& text, ErrorKind kind);

}  // namespace fairweight

#endif  // FAIRWEIGHT_TEXT_HPP_
