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

#ifndef KIVI_SETUP_HPP_
#define KIVI_SETUP_HPP_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kivi/common.hpp"
#include "kivi/scale.hpp"
#include "kivi/symbols.hpp"

namespace kivi {

enum class TaintEffect : int8_t { kNoSchedule, kNoExecute };

struct Taint {
  SymbolId key = kNoSymbol;
  SymbolId value = kNoSymbol;
  TaintEffect effect = TaintEffect::kNoSchedule;

  bool operator==(const Taint&) const = default;
};

struct Toleration {
  SymbolId key = kNoSymbol;                 // kNoSymbol tolerates every key
  std::optional<SymbolId> value;            // nullopt = any value (Exists)
  std::optional<TaintEffect> effect;        // nullopt = any effect

  bool tolerates(const Taint& t) const {
    if (key != kNoSymbol && key != t.key) return false;
    if (value.has_value() && *value != t.value) return false;
    if (effect.has_value() && *effect != t.effect) return false;
    return true;
  }
};

struct NodeTemplate {
  std::map<SymbolId, SymbolId> labels;
  std::vector<Taint> taints;
  Millicores cpu_capacity = 0;
};

struct NodeType {
  SymbolId name = kNoSymbol;
  NodeTemplate tmpl;
  CountBounds count_bounds;
};

// A CPU usage profile for pods of a deployment. Steps are relative to the
// pod's start tick; a pod holds each step's usage until the next one is due.
struct CpuProfile {
  struct Step {
    Tick from_tick = 0;
    Millicores usage = 0;
  };
  std::vector<Step> steps;          // sorted by from_tick; empty = flat zero
  std::vector<Millicores> levels;   // random-change level set (events)

  Millicores usage_at(Tick age) const {
    Millicores u = 0;
    for (const auto& s : steps) {
      if (s.from_tick <= age) u = s.usage;
    }
    return u;
  }
};

struct LabelRequirement {
  SymbolId key = kNoSymbol;
  std::vector<SymbolId> values;  // In-operator semantics

  bool matches(const std::map<SymbolId, SymbolId>& labels) const {
    auto it = labels.find(key);
    if (it == labels.end()) return false;
    for (SymbolId v : values) {
      if (v == it->second) return true;
    }
    return false;
  }
};

struct LabelSelector {
  std::vector<LabelRequirement> requirements;  // conjunction

  bool matches(const std::map<SymbolId, SymbolId>& labels) const {
    for (const auto& r : requirements) {
      if (!r.matches(labels)) return false;
    }
    return true;
  }
};

enum class WhenUnsatisfiable : int8_t { kDoNotSchedule, kScheduleAnyway };

struct SpreadConstraint {
  SymbolId topology_key = kNoSymbol;
  Count max_skew = 1;
  WhenUnsatisfiable when_unsatisfiable = WhenUnsatisfiable::kDoNotSchedule;
};

enum class SchedulerPlugin : uint8_t {
  kNodeName = 1 << 0,
  kNodeAffinity = 1 << 1,
  kTaintToleration = 1 << 2,
  kNodeResourcesFit = 1 << 3,
  kPodTopologySpread = 1 << 4,
};

enum class FitStrategy : int8_t { kLeastAllocated, kMostAllocated };

struct PreferredAffinity {
  LabelSelector selector;
  int32_t weight = 1;
};

struct SchedulingConfig {
  uint8_t enabled_plugins = static_cast<uint8_t>(SchedulerPlugin::kNodeName) |
                            static_cast<uint8_t>(SchedulerPlugin::kNodeAffinity) |
                            static_cast<uint8_t>(SchedulerPlugin::kTaintToleration) |
                            static_cast<uint8_t>(SchedulerPlugin::kNodeResourcesFit) |
                            static_cast<uint8_t>(SchedulerPlugin::kPodTopologySpread);
  LabelSelector required_affinity;                  // empty = match all
  std::vector<PreferredAffinity> preferred_affinity;
  std::vector<SpreadConstraint> spread_constraints;
  FitStrategy fit_strategy = FitStrategy::kLeastAllocated;
  int32_t weight_node_affinity = 1;
  int32_t weight_spread = 1;
  int32_t weight_fit = 1;

  bool enabled(SchedulerPlugin p) const {
    return (enabled_plugins & static_cast<uint8_t>(p)) != 0;
  }
};

struct PodTemplate {
  std::map<SymbolId, SymbolId> labels;
  Millicores cpu_request = 0;
  SymbolId node_name = kNoSymbol;  // pin to a concrete node instance name
  std::vector<Toleration> tolerations;
  CpuProfile cpu_profile;
};

enum class DeployStrategy : int8_t { kReCreate, kRollingUpdate };

struct HpaSpec {
  Count min_replicas = 1;
  std::optional<Count> max_replicas;  // nullopt = bounded only by scale
  bool utilization_metric = true;     // false = Value metric
  int64_t target = 50;                // percent*? stored x100-discretized for Utilization,
                                      // millicores for Value
  Tick interval = 15;
};

struct DeploymentType {
  SymbolId name = kNoSymbol;
  PodTemplate tmpl;
  CountBounds count_bounds{1, std::nullopt};
  Count spec_replicas = 1;
  DeployStrategy strategy = DeployStrategy::kRollingUpdate;
  Count max_surge = 1;
  Count max_unavailable = 0;
  SchedulingConfig scheduling;
  std::optional<HpaSpec> hpa;
  bool create_on_apply = false;  // pods materialize only via an ApplyDeployment event
};

enum class DeschedulerPlugin : uint8_t {
  kRemoveDuplicates = 1 << 0,
  kRemovePodsViolatingTopologySpread = 1 << 1,
};

struct DeschedulerConfig {
  uint8_t enabled_plugins = 0;
  Tick interval = 60;
  bool include_soft_constraints = false;

  bool enabled(DeschedulerPlugin p) const {
    return (enabled_plugins & static_cast<uint8_t>(p)) != 0;
  }
};

enum class EventKind : int8_t {
  kCpuChange,         // random per-level change across the deployment's pods
  kCpuPatternChange,  // pods follow their template CpuProfile steps
  kKernelPanic,
  kNodeFailure,
  kApplyDeployment,
  kScaleDeployment,
  kMaintenance,
};

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::kCpuChange: return "CpuChange";
    case EventKind::kCpuPatternChange: return "CpuPatternChange";
    case EventKind::kKernelPanic: return "KernelPanic";
    case EventKind::kNodeFailure: return "NodeFailure";
    case EventKind::kApplyDeployment: return "ApplyDeployment";
    case EventKind::kScaleDeployment: return "ScaleDeployment";
    case EventKind::kMaintenance: return "Maintenance";
  }
  return "?";
}

// How an ApplyDeployment event treats the replica count of the new spec.
enum class ApplyReplicas : int8_t { kDefault, kUnchanged, kExplicit };

struct EventSpec {
  EventKind kind = EventKind::kNodeFailure;
  Tick interval = 1;
  Count max_occurrences = 2;
  int32_t target_deployment = 0;          // deployment type index, where applicable
  Millicores panic_threshold = 0;         // 0 = node cpu capacity
  ApplyReplicas apply_replicas = ApplyReplicas::kDefault;
  Count explicit_replicas = 1;
  bool apply_bumps_template = false;      // template change triggers strategy
  Count scale_to = 1;                     // ScaleDeployment target
  Tick maintenance_duration = 30;
};

enum class CheckKind : int8_t {
  kBalanceNode,       // checkBalanceNode(k)
  kExpReplicas,       // checkExpReplicas(k)
  kMaxReplicas,       // checkMaxReplicas(k)
  kOscillation,       // checkOscillation()
  kNoPendingBeyond,   // checkNoPendingBeyond(d)
  kNoFailedPods,      // checkNoFailedPods()
  kPlacement,         // checkPlacement(key=value)
};

inline const char* check_kind_name(CheckKind k) {
  switch (k) {
    case CheckKind::kBalanceNode: return "checkBalanceNode";
    case CheckKind::kExpReplicas: return "checkExpReplicas";
    case CheckKind::kMaxReplicas: return "checkMaxReplicas";
    case CheckKind::kOscillation: return "checkOscillation";
    case CheckKind::kNoPendingBeyond: return "checkNoPendingBeyond";
    case CheckKind::kNoFailedPods: return "checkNoFailedPods";
    case CheckKind::kPlacement: return "checkPlacement";
  }
  return "?";
}

struct IntentSpec {
  CheckKind check = CheckKind::kExpReplicas;
  std::vector<int64_t> params;
  int32_t target_deployment = 0;          // deployment type index
  SymbolId selector_key = kNoSymbol;      // checkPlacement
  SymbolId selector_value = kNoSymbol;
};

struct ControlSetup {
  SchedulingConfig default_scheduling;    // used when a deployment omits its own
  DeschedulerConfig descheduler;
  Tick hpa_interval = 15;
  std::vector<EventSpec> events;
  std::vector<IntentSpec> intents;
  bool faithful_bugs = true;
};

struct VerifierOptions {
  std::optional<Count> ratio_bound;       // max pods per node before a scale is trivial
  std::optional<Count> queue_capacity;
  std::optional<int64_t> depth_bound;
  std::optional<Count> conf_nodes;
  std::optional<Count> conf_theta;
};

struct ObjectSetup {
  std::vector<NodeType> node_types;
  std::vector<DeploymentType> deployment_types;
};

// The parsed, validated, interned configuration everything else runs on.
struct ClusterSetup {
  std::shared_ptr<SymbolTable> symbols = std::make_shared<SymbolTable>();
  ObjectSetup objects;
  ControlSetup control;
  VerifierOptions options;

  SymbolId hostname_key = kNoSymbol;  // auto label applied to every node

  size_t node_type_count() const { return objects.node_types.size(); }
  size_t deployment_type_count() const { return objects.deployment_types.size(); }
};

struct ScaledSetup {
  const ClusterSetup* setup = nullptr;
  ScaleVector scale;
};

}  // namespace kivi

#endif  // KIVI_SETUP_HPP_
