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

#ifndef KIVI_SYMBOLS_HPP_
#define KIVI_SYMBOLS_HPP_

#include <string>
#include <unordered_map>
#include <vector>

#include "kivi/common.hpp"

namespace kivi {

// Bidirectional string interner. Ids are dense and stable within a run;
// all label keys/values and object names referenced by the model resolve
// through one of these.
class SymbolTable {
 public:
  SymbolId intern(const std::string& s) {
    auto it = ids_.find(s);
    if (it != ids_.end()) return it->second;
    SymbolId id = static_cast<SymbolId>(strings_.size());
    strings_.push_back(s);
    ids_.emplace(s, id);
    return id;
  }

  SymbolId lookup(const std::string& s) const {
    auto it = ids_.find(s);
    return it == ids_.end() ? kNoSymbol : it->second;
  }

  const std::string& name(SymbolId id) const { return strings_.at(static_cast<size_t>(id)); }

  size_t size() const { return strings_.size(); }

 private:
  std::vector<std::string> strings_;
  std::unordered_map<std::string, SymbolId> ids_;
};

}  // namespace kivi

#endif  // KIVI_SYMBOLS_HPP_
