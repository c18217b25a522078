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

#ifndef KIVI_SCALE_HPP_
#define KIVI_SCALE_HPP_

#include <compare>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "kivi/common.hpp"

namespace kivi {

// Per-type object counts of one concrete topology: one entry per node type
// followed by one entry per deployment type.
struct ScaleVector {
  std::vector<Count> node_counts;
  std::vector<Count> pod_counts;

  bool operator==(const ScaleVector&) const = default;

  std::string str() const {
    std::ostringstream os;
    os << "<";
    for (size_t i = 0; i < node_counts.size(); ++i) os << (i ? "," : "") << node_counts[i];
    os << ";";
    for (size_t i = 0; i < pod_counts.size(); ++i) os << (i ? "," : "") << pod_counts[i];
    os << ">";
    return os.str();
  }
};

inline Count scale_node_total(const ScaleVector& s) {
  return std::accumulate(s.node_counts.begin(), s.node_counts.end(), Count{0});
}

inline Count scale_pod_total(const ScaleVector& s) {
  return std::accumulate(s.pod_counts.begin(), s.pod_counts.end(), Count{0});
}

// Theta(s) = ceil(pod total / node total). Zero-node scales are trivial and
// must have been filtered before this is called.
inline Count pod_node_ratio(const ScaleVector& s) {
  Count nodes = scale_node_total(s);
  if (nodes <= 0) throw Error("pod_node_ratio: zero node total (trivial scale)");
  return ceil_div(scale_pod_total(s), nodes);
}

// Orders scales by node total, then pod total. Equal (N, P) pairs are
// tie-broken lexicographically with earlier-declared types weighing more,
// which reproduces the enumeration order <1,0;1>, <0,1;1>, ...
inline std::strong_ordering compare_scale(const ScaleVector& a, const ScaleVector& b) {
  if (a.node_counts.size() != b.node_counts.size() ||
      a.pod_counts.size() != b.pod_counts.size()) {
    throw ArityMismatchError("compare_scale: type arity mismatch");
  }
  if (auto c = scale_node_total(a) <=> scale_node_total(b); c != 0) return c;
  if (auto c = scale_pod_total(a) <=> scale_pod_total(b); c != 0) return c;
  // Heavier leading node type sorts first.
  for (size_t i = 0; i < a.node_counts.size(); ++i) {
    if (auto c = b.node_counts[i] <=> a.node_counts[i]; c != 0) return c;
  }
  for (size_t i = 0; i < a.pod_counts.size(); ++i) {
    if (auto c = b.pod_counts[i] <=> a.pod_counts[i]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

inline bool scale_less(const ScaleVector& a, const ScaleVector& b) {
  return compare_scale(a, b) == std::strong_ordering::less;
}

}  // namespace kivi

#endif  // KIVI_SCALE_HPP_
