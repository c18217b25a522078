// Copyright 2026 The Kivi Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KIVI_COMMON_HPP_
#define KIVI_COMMON_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace kivi {

using Tick = int64_t;        // model time, 1 tick = 1 second
using Millicores = int64_t;  // CPU quantities in millicores
using Count = int32_t;

using SymbolId = int32_t;
constexpr SymbolId kNoSymbol = -1;

using NodeId = int32_t;
using PodId = int32_t;
using DeploymentId = int32_t;
constexpr int32_t kNoId = -1;

// Upper bound of a count range; empty max() means unbounded.
struct CountBounds {
  Count lower = 0;
  std::optional<Count> upper;  // nullopt = unbounded

  bool contains(Count c) const {
    return c >= lower && (!upper.has_value() || c <= *upper);
  }
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class SyntaxError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class SemanticError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class UnknownCheckError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class ScaleError : public Error {
 public:
  using Error::Error;
};

class ArityMismatchError : public Error {
 public:
  using Error::Error;
};

class EmptyLibraryError : public Error {
 public:
  using Error::Error;
};

class SchemaVersionError : public Error {
 public:
  using Error::Error;
};

inline Count ceil_div(int64_t num, int64_t den) {
  return static_cast<Count>((num + den - 1) / den);
}

}  // namespace kivi

#endif  // KIVI_COMMON_HPP_
