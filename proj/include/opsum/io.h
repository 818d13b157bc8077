// Copyright 2026 The opsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OPSUM_IO_H_
#define OPSUM_IO_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace opsum {

// Writes through a temporary file in the same directory and renames it over
// the destination, so readers never observe a partial artifact.
void WriteFileAtomic(const std::string &path,
                     const std::function<void(std::ostream &)> &write,
                     bool binary = false);

std::string ReadFileToString(const std::string &path);

// 64-bit FNV-1a, chainable through `basis`.
uint64_t HashBytes(std::string_view bytes, uint64_t basis = 14695981039346656037ull);
std::string HexDigest(uint64_t hash);

// Line-delimited JSON helpers. Blank lines are skipped.
std::vector<nlohmann::json> ReadJsonLines(const std::string &path);
void WriteJsonLines(const std::string &path, const std::vector<nlohmann::json> &rows);

}  // namespace opsum

#endif  // OPSUM_IO_H_
