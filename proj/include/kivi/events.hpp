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

#ifndef KIVI_EVENTS_HPP_
#define KIVI_EVENTS_HPP_

#include <algorithm>
#include <optional>
#include <vector>

#include "kivi/controllers.hpp"
#include "kivi/effects.hpp"
#include "kivi/state.hpp"

namespace kivi {

// One alternative next action of an event process. The meaning of `value`
// depends on the event kind (node id, cpu level, pattern step index).
struct EventBranch {
  int64_t value = 0;
};

constexpr int32_t kMaintenanceIdle = 0;
constexpr int32_t kMaintenanceActive = 1;

namespace detail {

inline const EventSpec& event_spec(const GlobalState& g, int32_t proc) {
  return g.setup->control.events[static_cast<size_t>(g.stable.process_event[static_cast<size_t>(proc)])];
}

inline std::vector<Millicores> cpu_levels(const GlobalState& g, const EventSpec& ev) {
  const DeploymentType& dt = g.deployment_type(ev.target_deployment);
  if (!dt.tmpl.cpu_profile.levels.empty()) return dt.tmpl.cpu_profile.levels;
  Millicores r = dt.tmpl.cpu_request;
  return {0, r / 2, r};
}

// Distinct due pattern-step indexes across the deployment's running pods.
inline std::vector<int32_t> due_pattern_steps(const GlobalState& g, const EventSpec& ev) {
  const DeploymentType& dt = g.deployment_type(ev.target_deployment);
  const auto& steps = dt.tmpl.cpu_profile.steps;
  std::vector<int32_t> due;
  for (size_t p = 0; p < g.mut.pods.size(); ++p) {
    const PodDyn& pd = g.mut.pods[p];
    if (pd.type != ev.target_deployment || pd.status != PodStatus::kRunning) continue;
    int32_t next = pd.profile_step + 1;
    if (next >= static_cast<int32_t>(steps.size())) continue;
    Tick age = g.mut.now - pd.started_at;
    if (age >= steps[static_cast<size_t>(next)].from_tick &&
        std::find(due.begin(), due.end(), next) == due.end()) {
      due.push_back(next);
    }
  }
  std::sort(due.begin(), due.end());
  return due;
}

}  // namespace detail

// The finite set of alternative next actions of an eligible event process.
inline std::vector<EventBranch> enabled_branches(const GlobalState& g, int32_t proc) {
  const EventSpec& ev = detail::event_spec(g, proc);
  const ProcDyn& pr = g.mut.procs[static_cast<size_t>(proc)];
  std::vector<EventBranch> out;

  switch (ev.kind) {
    case EventKind::kNodeFailure:
      for (NodeId n = 0; n < static_cast<NodeId>(g.mut.nodes.size()); ++n) {
        if (g.mut.nodes[static_cast<size_t>(n)].status == NodeStatus::kReady) out.push_back({n});
      }
      break;
    case EventKind::kKernelPanic:
      for (NodeId n = 0; n < static_cast<NodeId>(g.mut.nodes.size()); ++n) {
        if (g.mut.nodes[static_cast<size_t>(n)].status != NodeStatus::kReady) continue;
        Millicores threshold = ev.panic_threshold > 0
                                   ? ev.panic_threshold
                                   : g.stable.nodes[static_cast<size_t>(n)].cpu_capacity;
        if (node_cpu_usage(g, n) >= threshold) out.push_back({n});
      }
      break;
    case EventKind::kMaintenance:
      if (pr.phase == kMaintenanceActive) {
        if (g.mut.now >= pr.phase_until) out.push_back({pr.phase_node});
      } else {
        for (NodeId n = 0; n < static_cast<NodeId>(g.mut.nodes.size()); ++n) {
          if (g.mut.nodes[static_cast<size_t>(n)].status == NodeStatus::kReady) out.push_back({n});
        }
      }
      break;
    case EventKind::kCpuChange:
      for (Millicores level : detail::cpu_levels(g, ev)) {
        bool differs = false;
        for (const auto& pd : g.mut.pods) {
          if (pd.type == ev.target_deployment && pd.status == PodStatus::kRunning &&
              pd.cpu_usage != level) {
            differs = true;
          }
        }
        if (differs) out.push_back({level});
      }
      break;
    case EventKind::kCpuPatternChange:
      for (int32_t step : detail::due_pattern_steps(g, ev)) out.push_back({step});
      break;
    case EventKind::kApplyDeployment:
    case EventKind::kScaleDeployment:
      out.push_back({0});
      break;
  }
  return out;
}

// Applies one branch: mutates state and enqueues the affected controllers.
// Multi-pod CPU updates land in a single step (back-to-back merge).
inline void apply_event_branch(World& w, int32_t proc, const EventBranch& br, EffectLog& fx) {
  GlobalState& g = w.state();
  const EventSpec& ev = detail::event_spec(g, proc);
  const ProcDyn& pr = g.mut.procs[static_cast<size_t>(proc)];

  switch (ev.kind) {
    case EventKind::kNodeFailure:
    case EventKind::kKernelPanic: {
      NodeId n = static_cast<NodeId>(br.value);
      w.set_node_status(n, NodeStatus::kNotReady);
      w.enqueue(kQueueNodeController, n);
      for (PodId p = 0; p < static_cast<PodId>(g.mut.pods.size()); ++p) {
        const PodDyn& pd = g.mut.pods[static_cast<size_t>(p)];
        if (pd.bound_node == n && pod_placed(pd.status)) w.enqueue(kQueueKubelet, p);
      }
      w.bump_proc_occurrences(proc);
      fx.push_back({ev.kind == EventKind::kNodeFailure ? EffectKind::kNodeFail : EffectKind::kNodePanic,
                    n, kNoId, 0});
      break;
    }
    case EventKind::kMaintenance: {
      NodeId n = static_cast<NodeId>(br.value);
      if (pr.phase == kMaintenanceActive) {
        w.set_node_status(n, NodeStatus::kReady);
        w.enqueue(kQueueNodeController, n);
        w.set_proc_phase(proc, kMaintenanceIdle, kNoId, 0);
        fx.push_back({EffectKind::kNodeRestore, n, kNoId, 0});
      } else {
        w.set_node_status(n, NodeStatus::kMaintenance);
        w.enqueue(kQueueNodeController, n);
        w.set_proc_phase(proc, kMaintenanceActive, n, g.mut.now + ev.maintenance_duration);
        w.bump_proc_occurrences(proc);
        fx.push_back({EffectKind::kNodeMaintenance, n, kNoId, 0});
      }
      break;
    }
    case EventKind::kCpuChange: {
      Millicores level = br.value;
      for (PodId p = 0; p < static_cast<PodId>(g.mut.pods.size()); ++p) {
        const PodDyn& pd = g.mut.pods[static_cast<size_t>(p)];
        if (pd.type == ev.target_deployment && pd.status == PodStatus::kRunning &&
            pd.cpu_usage != level) {
          w.set_pod_usage(p, level);
        }
      }
      w.bump_proc_occurrences(proc);
      fx.push_back({EffectKind::kCpuChange, ev.target_deployment, kNoId, level});
      break;
    }
    case EventKind::kCpuPatternChange: {
      int32_t step = static_cast<int32_t>(br.value);
      const DeploymentType& dt = g.deployment_type(ev.target_deployment);
      const auto& st = dt.tmpl.cpu_profile.steps[static_cast<size_t>(step)];
      for (PodId p = 0; p < static_cast<PodId>(g.mut.pods.size()); ++p) {
        const PodDyn& pd = g.mut.pods[static_cast<size_t>(p)];
        if (pd.type != ev.target_deployment || pd.status != PodStatus::kRunning) continue;
        if (pd.profile_step + 1 != step) continue;
        if (g.mut.now - pd.started_at < st.from_tick) continue;
        w.set_pod_usage(p, st.usage);
        w.set_pod_profile_step(p, step);
      }
      w.bump_proc_occurrences(proc);
      fx.push_back({EffectKind::kCpuPattern, ev.target_deployment, kNoId, st.usage});
      break;
    }
    case EventKind::kApplyDeployment: {
      DeploymentId d = ev.target_deployment;
      const DeploymentDyn& dd = g.mut.deployments[static_cast<size_t>(d)];
      Count replicas = dd.spec_replicas;
      if (ev.apply_replicas == ApplyReplicas::kDefault) replicas = 1;
      if (ev.apply_replicas == ApplyReplicas::kExplicit) replicas = ev.explicit_replicas;
      w.set_dep_spec_replicas(d, replicas);
      if (!g.deployment_type(d).hpa.has_value()) w.set_dep_desired(d, replicas);
      if (ev.apply_bumps_template) w.set_dep_template_rev(d, dd.template_rev + 1);
      w.enqueue(kQueueDeployment, d);
      w.bump_proc_occurrences(proc);
      fx.push_back({EffectKind::kApplySpec, d, kNoId, replicas});
      break;
    }
    case EventKind::kScaleDeployment: {
      DeploymentId d = ev.target_deployment;
      w.set_dep_spec_replicas(d, ev.scale_to);
      if (!g.deployment_type(d).hpa.has_value()) w.set_dep_desired(d, ev.scale_to);
      w.enqueue(kQueueDeployment, d);
      w.bump_proc_occurrences(proc);
      fx.push_back({EffectKind::kScaleSpec, d, kNoId, ev.scale_to});
      break;
    }
  }
}

// Earliest tick at which the event process could act, or nullopt if it never
// will again (given no interference from other processes).
inline std::optional<Tick> event_next_ready(const GlobalState& g, int32_t proc) {
  const EventSpec& ev = detail::event_spec(g, proc);
  const ProcDyn& pr = g.mut.procs[static_cast<size_t>(proc)];

  if (ev.kind == EventKind::kMaintenance && pr.phase == kMaintenanceActive) {
    return std::max(g.mut.now, pr.phase_until);  // restore is owed regardless of occurrences
  }
  if (pr.occurrences >= ev.max_occurrences) return std::nullopt;
  Tick gate = std::max(g.mut.now, pr.last_run + ev.interval);

  switch (ev.kind) {
    case EventKind::kCpuPatternChange: {
      const auto& steps = g.deployment_type(ev.target_deployment).tmpl.cpu_profile.steps;
      std::optional<Tick> best;
      for (const auto& pd : g.mut.pods) {
        if (pd.type != ev.target_deployment || pd.status != PodStatus::kRunning) continue;
        int32_t next = pd.profile_step + 1;
        if (next >= static_cast<int32_t>(steps.size())) continue;
        Tick due = pd.started_at + steps[static_cast<size_t>(next)].from_tick;
        Tick t = std::max(gate, due);
        if (!best || t < *best) best = t;
      }
      return best;
    }
    default:
      // Other guards do not depend on time; ready at the gate iff satisfied now.
      return enabled_branches(g, proc).empty() ? std::nullopt : std::make_optional(gate);
  }
}

}  // namespace kivi

#endif  // KIVI_EVENTS_HPP_
