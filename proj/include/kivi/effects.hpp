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

#ifndef KIVI_EFFECTS_HPP_
#define KIVI_EFFECTS_HPP_

#include <cstdint>
#include <vector>

#include "kivi/common.hpp"

namespace kivi {

// Compact record of what one atomic step did, for trace rendering and replay
// verification. `a`/`b` are object ids whose meaning depends on the kind.
enum class EffectKind : int8_t {
  kBind,            // a=pod, b=node
  kPark,            // a=pod
  kCreatePod,       // a=pod, b=deployment
  kDeletePod,       // a=pod (scale-down)
  kStartPod,        // a=pod, b=node
  kFailPod,         // a=pod, b=node
  kCompletePod,     // a=pod
  kEvictDuplicate,  // a=pod, b=node
  kEvictSpread,     // a=pod, b=node
  kTaintEvict,      // a=pod, b=node
  kHpaScale,        // a=deployment, v packs old*1000+new... v=new desired, b=old
  kApplySpec,       // a=deployment, v=new spec replicas
  kScaleSpec,       // a=deployment, v=new spec replicas
  kNodeFail,        // a=node
  kNodePanic,       // a=node
  kNodeMaintenance, // a=node
  kNodeRestore,     // a=node
  kCpuChange,       // a=deployment, v=level (millicores)
  kCpuPattern,      // a=deployment, v=usage
  kAdvanceClock,    // v=new now
};

struct Effect {
  EffectKind kind;
  int32_t a = kNoId;
  int32_t b = kNoId;
  int64_t v = 0;
};

using EffectLog = std::vector<Effect>;

}  // namespace kivi

#endif  // KIVI_EFFECTS_HPP_
