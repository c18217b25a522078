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

#ifndef KIVI_CONTROLLERS_HPP_
#define KIVI_CONTROLLERS_HPP_

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "kivi/effects.hpp"
#include "kivi/state.hpp"

namespace kivi {

// ---------------------------------------------------------------------------
// Shared helpers.
// ---------------------------------------------------------------------------

inline bool pod_live(PodStatus s) {
  return s == PodStatus::kPending || s == PodStatus::kScheduled || s == PodStatus::kRunning;
}

inline bool pod_placed(PodStatus s) {
  return s == PodStatus::kScheduled || s == PodStatus::kRunning;
}

inline Millicores node_cpu_usage(const GlobalState& g, NodeId n) {
  Millicores total = 0;
  for (size_t p = 0; p < g.mut.pods.size(); ++p) {
    const PodDyn& pd = g.mut.pods[p];
    if (pd.bound_node == n && pod_placed(pd.status)) total += pd.cpu_usage;
  }
  return total;
}

// All NoExecute/NoSchedule taints currently on a node: static template taints
// plus the auto taints managed by the node controller.
inline void collect_taints(const GlobalState& g, NodeId n, std::vector<Taint>& out) {
  out = g.stable.nodes[static_cast<size_t>(n)].taints;
  uint8_t autos = g.mut.nodes[static_cast<size_t>(n)].auto_taints;
  SymbolTable& sym = *g.setup->symbols;
  if (autos & kAutoTaintNotReady) {
    out.push_back({sym.intern("node.kivi/not-ready"), sym.intern("true"), TaintEffect::kNoExecute});
  }
  if (autos & kAutoTaintMaintenance) {
    out.push_back({sym.intern("node.kivi/maintenance"), sym.intern("true"), TaintEffect::kNoExecute});
  }
}

inline bool tolerates_all(const PodTemplate& tmpl, const std::vector<Taint>& taints,
                          bool no_execute_only = false) {
  for (const Taint& t : taints) {
    if (no_execute_only && t.effect != TaintEffect::kNoExecute) continue;
    bool ok = false;
    for (const Toleration& tol : tmpl.tolerations) {
      if (tol.tolerates(t)) {
        ok = true;
        break;
      }
    }
    if (!ok) return false;
  }
  return true;
}

// Spread bookkeeping. The candidate domain of a deployment's constraints is
// the set of Ready nodes carrying every constraint's topology key.
struct SpreadDomain {
  std::vector<NodeId> nodes;
  // per constraint: group value per domain node, and pod count per group
  std::vector<std::vector<SymbolId>> node_group;
  std::vector<std::map<SymbolId, Count>> group_counts;
};

inline SpreadDomain build_spread_domain(const GlobalState& g, DeploymentId d,
                                        const std::vector<SpreadConstraint>& constraints) {
  SpreadDomain dom;
  for (NodeId n = 0; n < static_cast<NodeId>(g.mut.nodes.size()); ++n) {
    if (g.mut.nodes[static_cast<size_t>(n)].status != NodeStatus::kReady) continue;
    const auto& labels = g.stable.nodes[static_cast<size_t>(n)].labels;
    bool has_all = true;
    for (const auto& c : constraints) {
      if (labels.find(c.topology_key) == labels.end()) {
        has_all = false;
        break;
      }
    }
    if (has_all) dom.nodes.push_back(n);
  }
  dom.node_group.resize(constraints.size());
  dom.group_counts.resize(constraints.size());
  for (size_t ci = 0; ci < constraints.size(); ++ci) {
    for (NodeId n : dom.nodes) {
      SymbolId v = g.stable.nodes[static_cast<size_t>(n)].labels.at(constraints[ci].topology_key);
      dom.node_group[ci].push_back(v);
      dom.group_counts[ci].emplace(v, 0);
    }
  }
  for (size_t p = 0; p < g.mut.pods.size(); ++p) {
    const PodDyn& pd = g.mut.pods[p];
    if (pd.type != d || !pod_placed(pd.status)) continue;
    for (size_t ci = 0; ci < constraints.size(); ++ci) {
      for (size_t i = 0; i < dom.nodes.size(); ++i) {
        if (dom.nodes[i] == pd.bound_node) {
          dom.group_counts[ci][dom.node_group[ci][i]]++;
          break;
        }
      }
    }
  }
  return dom;
}

// Skew of constraint ci if one more pod lands on domain node index `idx`
// (idx < 0 evaluates the current placement).
inline Count skew_after(const SpreadDomain& dom, size_t ci, int idx) {
  Count mx = 0, mn = std::numeric_limits<Count>::max();
  SymbolId bump = idx >= 0 ? dom.node_group[ci][static_cast<size_t>(idx)] : kNoSymbol;
  for (const auto& [v, c] : dom.group_counts[ci]) {
    Count cc = c + (v == bump ? 1 : 0);
    mx = std::max(mx, cc);
    mn = std::min(mn, cc);
  }
  if (mn == std::numeric_limits<Count>::max()) return 0;
  return mx - mn;
}

// ---------------------------------------------------------------------------
// Scheduler.
// ---------------------------------------------------------------------------

// Filter pipeline: every enabled plugin must accept the node. A nodeName pin
// short-circuits to that node (kubelet-style placement that bypasses the
// taint filter but still respects readiness and resources).
inline std::vector<NodeId> filter_nodes(const GlobalState& g, PodId pod) {
  const PodDyn& pd = g.mut.pods[static_cast<size_t>(pod)];
  const DeploymentType& dt = g.deployment_type(pd.type);
  const SchedulingConfig& sc = dt.scheduling;
  const PodTemplate& tmpl = dt.tmpl;
  std::vector<NodeId> out;

  if (sc.enabled(SchedulerPlugin::kNodeName) && tmpl.node_name != kNoSymbol) {
    for (NodeId n = 0; n < static_cast<NodeId>(g.mut.nodes.size()); ++n) {
      if (g.stable.nodes[static_cast<size_t>(n)].name != tmpl.node_name) continue;
      const NodeDyn& nd = g.mut.nodes[static_cast<size_t>(n)];
      bool fit = !sc.enabled(SchedulerPlugin::kNodeResourcesFit) || nd.cpu_left >= tmpl.cpu_request;
      if (nd.status == NodeStatus::kReady && fit) out.push_back(n);
    }
    return out;
  }

  SpreadDomain dom;
  bool use_spread = sc.enabled(SchedulerPlugin::kPodTopologySpread) && !sc.spread_constraints.empty();
  if (use_spread) dom = build_spread_domain(g, pd.type, sc.spread_constraints);

  std::vector<Taint> taints;
  for (NodeId n = 0; n < static_cast<NodeId>(g.mut.nodes.size()); ++n) {
    const NodeDyn& nd = g.mut.nodes[static_cast<size_t>(n)];
    if (nd.status != NodeStatus::kReady) continue;
    const StableNode& sn = g.stable.nodes[static_cast<size_t>(n)];

    if (sc.enabled(SchedulerPlugin::kNodeAffinity) && !sc.required_affinity.requirements.empty() &&
        !sc.required_affinity.matches(sn.labels)) {
      continue;
    }
    if (sc.enabled(SchedulerPlugin::kTaintToleration)) {
      collect_taints(g, n, taints);
      if (!tolerates_all(tmpl, taints)) continue;
    }
    if (sc.enabled(SchedulerPlugin::kNodeResourcesFit) && nd.cpu_left < tmpl.cpu_request) continue;

    if (use_spread) {
      // Node must carry every constraint key to be a candidate at all.
      int idx = -1;
      for (size_t i = 0; i < dom.nodes.size(); ++i) {
        if (dom.nodes[i] == n) {
          idx = static_cast<int>(i);
          break;
        }
      }
      if (idx < 0) continue;
      bool ok = true;
      for (size_t ci = 0; ci < sc.spread_constraints.size(); ++ci) {
        const auto& c = sc.spread_constraints[ci];
        if (c.when_unsatisfiable == WhenUnsatisfiable::kDoNotSchedule &&
            skew_after(dom, ci, idx) > c.max_skew) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
    }
    out.push_back(n);
  }
  return out;
}

// Scoring: each plugin contributes a 0..100-normalized score, weighted per
// config; soft spread constraints score inversely to the resulting skew.
// Ties break toward the lowest node id.
inline NodeId score_nodes(const GlobalState& g, PodId pod, const std::vector<NodeId>& feasible) {
  const PodDyn& pd = g.mut.pods[static_cast<size_t>(pod)];
  const DeploymentType& dt = g.deployment_type(pd.type);
  const SchedulingConfig& sc = dt.scheduling;
  const size_t n = feasible.size();
  std::vector<int64_t> score(n, 0);

  if (sc.enabled(SchedulerPlugin::kNodeAffinity) && !sc.preferred_affinity.empty()) {
    std::vector<int64_t> raw(n, 0);
    int64_t mx = 0;
    for (size_t i = 0; i < n; ++i) {
      const auto& labels = g.stable.nodes[static_cast<size_t>(feasible[i])].labels;
      for (const auto& pref : sc.preferred_affinity) {
        if (pref.selector.matches(labels)) raw[i] += pref.weight;
      }
      mx = std::max(mx, raw[i]);
    }
    if (mx > 0) {
      for (size_t i = 0; i < n; ++i) score[i] += sc.weight_node_affinity * (raw[i] * 100 / mx);
    }
  }

  if (sc.enabled(SchedulerPlugin::kNodeResourcesFit)) {
    for (size_t i = 0; i < n; ++i) {
      const NodeDyn& nd = g.mut.nodes[static_cast<size_t>(feasible[i])];
      Millicores cap = g.stable.nodes[static_cast<size_t>(feasible[i])].cpu_capacity;
      Millicores left_after = nd.cpu_left - dt.tmpl.cpu_request;
      int64_t fit = cap > 0 ? left_after * 100 / cap : 0;
      if (sc.fit_strategy == FitStrategy::kMostAllocated) fit = 100 - fit;
      score[i] += sc.weight_fit * fit;
    }
  }

  if (sc.enabled(SchedulerPlugin::kPodTopologySpread) && !sc.spread_constraints.empty()) {
    SpreadDomain dom = build_spread_domain(g, pd.type, sc.spread_constraints);
    std::vector<int> dom_idx(n, -1);
    for (size_t i = 0; i < n; ++i) {
      for (size_t k = 0; k < dom.nodes.size(); ++k) {
        if (dom.nodes[k] == feasible[i]) dom_idx[i] = static_cast<int>(k);
      }
    }
    for (size_t ci = 0; ci < sc.spread_constraints.size(); ++ci) {
      if (sc.spread_constraints[ci].when_unsatisfiable != WhenUnsatisfiable::kScheduleAnyway) continue;
      std::vector<int64_t> raw(n, 0);
      Count worst = 0;
      std::vector<Count> sk(n, 0);
      for (size_t i = 0; i < n; ++i) {
        sk[i] = dom_idx[i] >= 0 ? skew_after(dom, ci, dom_idx[i]) : 0;
        worst = std::max(worst, sk[i]);
      }
      int64_t mx = 0;
      for (size_t i = 0; i < n; ++i) {
        raw[i] = worst - sk[i];
        mx = std::max(mx, raw[i]);
      }
      if (mx > 0) {
        for (size_t i = 0; i < n; ++i) score[i] += sc.weight_spread * (raw[i] * 100 / mx);
      }
    }
  }

  size_t best = 0;
  for (size_t i = 1; i < n; ++i) {
    if (score[i] > score[best]) best = i;
  }
  return feasible[best];
}

// Hard-filter recheck used by the soundness property tests.
inline bool placement_satisfies_filters(const GlobalState& g, PodId pod, NodeId node) {
  auto feasible = filter_nodes(g, pod);
  return std::find(feasible.begin(), feasible.end(), node) != feasible.end();
}

inline bool node_has_untolerated_no_execute(const GlobalState& g, NodeId n, const PodTemplate& tmpl) {
  std::vector<Taint> taints;
  collect_taints(g, n, taints);
  return !tolerates_all(tmpl, taints, /*no_execute_only=*/true);
}

// Dequeues one Pending pod, binds it to the best feasible node, or parks it
// as unschedulable until the cluster changes.
inline void scheduler_step(World& w, EffectLog& fx) {
  GlobalState& g = w.state();
  PodId pod = w.dequeue(kQueueScheduler);
  const PodDyn& pd = g.mut.pods[static_cast<size_t>(pod)];
  if (pd.status != PodStatus::kPending) return;  // deleted while queued

  auto feasible = filter_nodes(g, pod);
  if (feasible.empty()) {
    w.set_pod_parked(pod, true);
    fx.push_back({EffectKind::kPark, pod, kNoId, 0});
    return;
  }
  NodeId n = score_nodes(g, pod, feasible);
  const DeploymentType& dt = g.deployment_type(pd.type);
  const NodeDyn& nd = g.mut.nodes[static_cast<size_t>(n)];
  w.set_pod_status(pod, PodStatus::kScheduled);
  w.set_pod_bound_node(pod, n);
  w.set_node_cpu_left(n, nd.cpu_left - dt.tmpl.cpu_request);
  w.set_node_num_pods(n, nd.num_pods + 1);
  w.enqueue(kQueueKubelet, pod);
  if (node_has_untolerated_no_execute(g, n, dt.tmpl)) {
    w.enqueue(kQueueNodeController, n);
  }
  fx.push_back({EffectKind::kBind, pod, n, 0});
}

// ---------------------------------------------------------------------------
// Kubelet (one folded process for all nodes).
// ---------------------------------------------------------------------------

inline void free_pod_resources(World& w, PodId pod) {
  GlobalState& g = w.state();
  const PodDyn& pd = g.mut.pods[static_cast<size_t>(pod)];
  if (pd.bound_node == kNoId) return;
  NodeId n = pd.bound_node;
  const DeploymentType& dt = g.deployment_type(pd.type);
  const NodeDyn& nd = g.mut.nodes[static_cast<size_t>(n)];
  w.set_node_cpu_left(n, nd.cpu_left + dt.tmpl.cpu_request);
  w.set_node_num_pods(n, nd.num_pods - 1);
  w.set_pod_bound_node(pod, kNoId);
}

// Whether the deployment is mid template rollout; kubelet progress then has
// to retrigger reconciliation.
inline bool rollout_in_progress(const GlobalState& g, DeploymentId d) {
  int32_t rev = g.mut.deployments[static_cast<size_t>(d)].template_rev;
  for (const auto& pd : g.mut.pods) {
    if (pd.type == d && pod_live(pd.status) && pd.template_rev != rev) return true;
  }
  return false;
}

inline void kubelet_step(World& w, EffectLog& fx) {
  GlobalState& g = w.state();
  PodId pod = w.dequeue(kQueueKubelet);
  const PodDyn& pd = g.mut.pods[static_cast<size_t>(pod)];
  if (pd.bound_node == kNoId) return;  // stale trigger
  NodeId n = pd.bound_node;
  NodeStatus ns = g.mut.nodes[static_cast<size_t>(n)].status;

  if ((pd.status == PodStatus::kScheduled || pd.status == PodStatus::kRunning) &&
      ns == NodeStatus::kNotReady) {
    free_pod_resources(w, pod);
    w.set_pod_status(pod, PodStatus::kFailed);
    w.enqueue(kQueueDeployment, pd.type);
    fx.push_back({EffectKind::kFailPod, pod, n, 0});
    return;
  }
  if (pd.status == PodStatus::kScheduled && ns == NodeStatus::kReady) {
    const DeploymentType& dt = g.deployment_type(pd.type);
    w.set_pod_status(pod, PodStatus::kRunning);
    w.set_pod_started_at(pod, g.mut.now);
    w.set_pod_usage(pod, dt.tmpl.cpu_profile.usage_at(0));
    int32_t applied = -1;
    for (size_t i = 0; i < dt.tmpl.cpu_profile.steps.size(); ++i) {
      if (dt.tmpl.cpu_profile.steps[i].from_tick <= 0) applied = static_cast<int32_t>(i);
    }
    if (applied >= 0) w.set_pod_profile_step(pod, applied);
    if (rollout_in_progress(g, pd.type)) w.enqueue(kQueueDeployment, pd.type);
    fx.push_back({EffectKind::kStartPod, pod, n, 0});
    return;
  }
  if (pd.status == PodStatus::kTerminating) {
    free_pod_resources(w, pod);
    w.set_pod_status(pod, PodStatus::kDeleted);
    w.set_pod_parked(pod, false);
    w.enqueue(kQueueDeployment, pd.type);
    fx.push_back({EffectKind::kCompletePod, pod, n, 0});
    return;
  }
}

// ---------------------------------------------------------------------------
// Deployment/ReplicaSet controller.
// ---------------------------------------------------------------------------

inline void delete_pod(World& w, PodId pod, EffectLog& fx, EffectKind kind) {
  GlobalState& g = w.state();
  const PodDyn& pd = g.mut.pods[static_cast<size_t>(pod)];
  if (pd.status == PodStatus::kPending) {
    w.queue_erase(kQueueScheduler, pod);
    w.set_pod_parked(pod, false);
    w.set_pod_status(pod, PodStatus::kDeleted);
  } else {
    w.set_pod_status(pod, PodStatus::kTerminating);
    w.enqueue(kQueueKubelet, pod);
  }
  fx.push_back({kind, pod, pd.bound_node, 0});
}

inline void create_pods(World& w, DeploymentId d, Count k, EffectLog& fx) {
  GlobalState& g = w.state();
  int32_t rev = g.mut.deployments[static_cast<size_t>(d)].template_rev;
  for (Count i = 0; i < k; ++i) {
    PodId p = w.create_pod(d, rev);
    w.enqueue(kQueueScheduler, p);
    fx.push_back({EffectKind::kCreatePod, p, d, 0});
  }
  if (k > 0) w.bump_deploy_count(d);
}

// Reconciles one deployment: replace missing pods, trim surplus (highest ids
// first), and advance template rollouts per the configured strategy.
inline void deployment_step(World& w, EffectLog& fx) {
  GlobalState& g = w.state();
  DeploymentId d = w.dequeue(kQueueDeployment);
  const DeploymentDyn& dd = g.mut.deployments[static_cast<size_t>(d)];
  const DeploymentType& dt = g.deployment_type(d);

  std::vector<PodId> live, old_rev;
  Count running = 0;
  for (PodId p = 0; p < static_cast<PodId>(g.mut.pods.size()); ++p) {
    const PodDyn& pd = g.mut.pods[static_cast<size_t>(p)];
    if (pd.type != d || !pod_live(pd.status)) continue;
    live.push_back(p);
    if (pd.status == PodStatus::kRunning) running++;
    if (pd.template_rev != dd.template_rev) old_rev.push_back(p);
  }

  if (!old_rev.empty()) {
    if (dt.strategy == DeployStrategy::kReCreate) {
      for (PodId p : old_rev) delete_pod(w, p, fx, EffectKind::kDeletePod);
      return;  // replacements created once the old generation is gone
    }
    // RollingUpdate: one wave per loop within the surge/unavailability budget.
    Count total = static_cast<Count>(live.size());
    Count fresh = total - static_cast<Count>(old_rev.size());
    Count create = std::min<Count>(dd.desired + dt.max_surge - total, dd.desired - fresh);
    if (create > 0) create_pods(w, d, create, fx);
    Count unavailable = dd.desired - std::min(dd.desired, running);
    Count can_remove = dt.max_unavailable - std::min(dt.max_unavailable, unavailable);
    if (dt.max_surge > 0 && total > dd.desired) {
      // surged replacements are live; retire the same number of old pods
      can_remove = std::max(can_remove, std::min<Count>(total - dd.desired, static_cast<Count>(old_rev.size())));
    }
    std::sort(old_rev.begin(), old_rev.end(), std::greater<PodId>());
    for (Count i = 0; i < can_remove && i < static_cast<Count>(old_rev.size()); ++i) {
      delete_pod(w, old_rev[static_cast<size_t>(i)], fx, EffectKind::kDeletePod);
    }
    return;
  }

  Count total = static_cast<Count>(live.size());
  if (total < dd.desired) {
    create_pods(w, d, dd.desired - total, fx);
  } else if (total > dd.desired) {
    std::sort(live.begin(), live.end(), std::greater<PodId>());
    for (Count i = 0; i < total - dd.desired; ++i) {
      delete_pod(w, live[static_cast<size_t>(i)], fx, EffectKind::kDeletePod);
    }
  }
}

// ---------------------------------------------------------------------------
// Horizontal pod autoscaler (one folded process for all deployments).
// ---------------------------------------------------------------------------

inline void hpa_step(World& w, EffectLog& fx) {
  GlobalState& g = w.state();
  for (DeploymentId d = 0; d < static_cast<DeploymentId>(g.mut.deployments.size()); ++d) {
    const DeploymentType& dt = g.deployment_type(d);
    if (!dt.hpa.has_value()) continue;
    const DeploymentDyn& dd = g.mut.deployments[static_cast<size_t>(d)];

    int64_t sum = 0;
    Count n = 0;
    for (const auto& pd : g.mut.pods) {
      if (pd.type != d || pd.status != PodStatus::kRunning) continue;
      if (dt.hpa->utilization_metric) {
        if (dt.tmpl.cpu_request > 0) sum += pd.cpu_usage * 100 / dt.tmpl.cpu_request;
      } else {
        sum += pd.cpu_usage;
      }
      n++;
    }
    if (n == 0) continue;
    int64_t metric = sum / n;
    auto [lo, hi] = hpa_window(dt, g.scale.pod_counts[static_cast<size_t>(d)]);
    Count proposed = ceil_div(static_cast<int64_t>(dd.desired) * metric,
                              std::max<int64_t>(1, dt.hpa->target));
    Count desired = std::clamp(proposed, lo, hi);
    if (desired != dd.desired) {
      fx.push_back({EffectKind::kHpaScale, d, dd.desired, desired});
      w.set_dep_desired(d, desired);
      w.enqueue(kQueueDeployment, d);
    }
  }
}

// ---------------------------------------------------------------------------
// Descheduler.
// ---------------------------------------------------------------------------

inline void evict_pod(World& w, PodId pod, EffectLog& fx, EffectKind kind) {
  GlobalState& g = w.state();
  const PodDyn& pd = g.mut.pods[static_cast<size_t>(pod)];
  w.set_pod_status(pod, PodStatus::kTerminating);
  w.enqueue(kQueueKubelet, pod);
  w.bump_evict_count(pd.type);
  w.enqueue(kQueueDeployment, pd.type);
  fx.push_back({kind, pod, pd.bound_node, 0});
}

// RemoveDuplicates: per node, pods of one deployment beyond the first are
// duplicates; how many get evicted is limited by the available target nodes.
// The faithful mode reproduces the upstream counting bug: any other Ready
// node counts as available regardless of its free resources. The fixed mode
// counts only nodes that could actually absorb a replacement (enough free
// cpu and no pod of the deployment yet).
inline void desched_remove_duplicates(World& w, EffectLog& fx) {
  GlobalState& g = w.state();
  bool faithful = g.setup->control.faithful_bugs;
  for (NodeId n = 0; n < static_cast<NodeId>(g.mut.nodes.size()); ++n) {
    if (g.mut.nodes[static_cast<size_t>(n)].status != NodeStatus::kReady) continue;
    for (DeploymentId d = 0; d < static_cast<DeploymentId>(g.mut.deployments.size()); ++d) {
      std::vector<PodId> on_node;
      for (PodId p = 0; p < static_cast<PodId>(g.mut.pods.size()); ++p) {
        const PodDyn& pd = g.mut.pods[static_cast<size_t>(p)];
        if (pd.type == d && pd.bound_node == n && pod_placed(pd.status)) on_node.push_back(p);
      }
      if (on_node.size() < 2) continue;
      const DeploymentType& dt = g.deployment_type(d);

      Count targets = 0;
      for (NodeId m = 0; m < static_cast<NodeId>(g.mut.nodes.size()); ++m) {
        if (m == n || g.mut.nodes[static_cast<size_t>(m)].status != NodeStatus::kReady) continue;
        if (faithful) {
          targets++;
          continue;
        }
        if (g.mut.nodes[static_cast<size_t>(m)].cpu_left < dt.tmpl.cpu_request) continue;
        bool hosts_deployment = false;
        for (const auto& pd : g.mut.pods) {
          if (pd.type == d && pd.bound_node == m && pod_placed(pd.status)) hosts_deployment = true;
        }
        if (!hosts_deployment) targets++;
      }

      Count dups = static_cast<Count>(on_node.size()) - 1;
      Count evict = std::min(dups, targets);
      std::sort(on_node.begin(), on_node.end(), std::greater<PodId>());
      for (Count i = 0; i < evict; ++i) {
        evict_pod(w, on_node[static_cast<size_t>(i)], fx, EffectKind::kEvictDuplicate);
      }
    }
  }
}

// Exhaustive feasibility check: can `total` pods be packed onto the domain
// nodes (capacity permitting) with every constraint's skew within bounds?
// Domains beyond this size are treated as unknown and no eviction happens.
constexpr size_t kJointSolverMaxNodes = 16;

inline bool joint_spread_satisfiable(const GlobalState& g, DeploymentId d,
                                     const std::vector<SpreadConstraint>& constraints,
                                     const SpreadDomain& dom, Count total) {
  if (dom.nodes.size() > kJointSolverMaxNodes) return false;
  const DeploymentType& dt = g.deployment_type(d);
  std::vector<Count> slots(dom.nodes.size(), 0);
  for (size_t i = 0; i < dom.nodes.size(); ++i) {
    NodeId n = dom.nodes[i];
    Millicores free_for_d = g.mut.nodes[static_cast<size_t>(n)].cpu_left;
    for (const auto& pd : g.mut.pods) {
      if (pd.type == d && pd.bound_node == n && pod_placed(pd.status)) {
        free_for_d += dt.tmpl.cpu_request;
      }
    }
    slots[i] = dt.tmpl.cpu_request > 0
                   ? static_cast<Count>(free_for_d / dt.tmpl.cpu_request)
                   : total;
  }

  std::vector<std::map<SymbolId, Count>> counts(constraints.size());
  for (size_t ci = 0; ci < constraints.size(); ++ci) {
    for (size_t i = 0; i < dom.nodes.size(); ++i) counts[ci][dom.node_group[ci][i]] = 0;
  }

  std::function<bool(size_t, Count)> rec = [&](size_t i, Count left) -> bool {
    if (i == dom.nodes.size()) {
      if (left != 0) return false;
      for (size_t ci = 0; ci < constraints.size(); ++ci) {
        Count mx = 0, mn = std::numeric_limits<Count>::max();
        for (const auto& [v, c] : counts[ci]) {
          mx = std::max(mx, c);
          mn = std::min(mn, c);
        }
        if (mx - mn > constraints[ci].max_skew) return false;
      }
      return true;
    }
    Count remaining_slots = 0;
    for (size_t k = i; k < dom.nodes.size(); ++k) remaining_slots += slots[k];
    if (remaining_slots < left) return false;
    for (Count x = std::min(slots[i], left); x >= 0; --x) {
      for (size_t ci = 0; ci < constraints.size(); ++ci) {
        counts[ci][dom.node_group[ci][i]] += x;
      }
      bool ok = rec(i + 1, left - x);
      for (size_t ci = 0; ci < constraints.size(); ++ci) {
        counts[ci][dom.node_group[ci][i]] -= x;
      }
      if (ok) return true;
    }
    return false;
  };
  return rec(0, total);
}

// RemovePodsViolatingTopologySpread. Faithful mode decides per constraint in
// isolation (the upstream issue); fixed mode evicts only when some placement
// satisfying all constraints jointly exists.
inline void desched_remove_spread_violations(World& w, EffectLog& fx) {
  GlobalState& g = w.state();
  bool faithful = g.setup->control.faithful_bugs;
  const DeschedulerConfig& cfg = g.setup->control.descheduler;

  for (DeploymentId d = 0; d < static_cast<DeploymentId>(g.mut.deployments.size()); ++d) {
    const SchedulingConfig& sc = g.deployment_type(d).scheduling;
    std::vector<SpreadConstraint> constraints;
    for (const auto& c : sc.spread_constraints) {
      if (c.when_unsatisfiable == WhenUnsatisfiable::kDoNotSchedule || cfg.include_soft_constraints) {
        constraints.push_back(c);
      }
    }
    if (constraints.empty()) continue;
    SpreadDomain dom = build_spread_domain(g, d, constraints);
    if (dom.nodes.empty()) continue;

    if (!faithful) {
      Count placed = 0;
      for (const auto& pd : g.mut.pods) {
        if (pd.type == d && pod_placed(pd.status)) placed++;
      }
      if (!joint_spread_satisfiable(g, d, constraints, dom, placed)) continue;
    }

    for (size_t ci = 0; ci < constraints.size(); ++ci) {
      if (skew_after(dom, ci, -1) <= constraints[ci].max_skew) continue;
      // Evict one pod from the most loaded node of the largest group.
      SymbolId top_group = kNoSymbol;
      Count top_count = -1;
      for (const auto& [v, c] : dom.group_counts[ci]) {
        if (c > top_count) {
          top_count = c;
          top_group = v;
        }
      }
      NodeId victim_node = kNoId;
      Count victim_pods = -1;
      for (size_t i = 0; i < dom.nodes.size(); ++i) {
        if (dom.node_group[ci][i] != top_group) continue;
        Count cnt = 0;
        for (const auto& pd : g.mut.pods) {
          if (pd.type == d && pd.bound_node == dom.nodes[i] && pod_placed(pd.status)) cnt++;
        }
        if (cnt > victim_pods) {
          victim_pods = cnt;
          victim_node = dom.nodes[i];
        }
      }
      if (victim_node == kNoId || victim_pods <= 0) continue;
      PodId victim = kNoId;
      for (PodId p = 0; p < static_cast<PodId>(g.mut.pods.size()); ++p) {
        const PodDyn& pd = g.mut.pods[static_cast<size_t>(p)];
        if (pd.type == d && pd.bound_node == victim_node && pod_placed(pd.status)) victim = p;
      }
      evict_pod(w, victim, fx, EffectKind::kEvictSpread);
      return;  // one eviction per loop
    }
  }
}

inline void descheduler_step(World& w, EffectLog& fx) {
  const DeschedulerConfig& cfg = w.state().setup->control.descheduler;
  for (DeschedulerPlugin p : {DeschedulerPlugin::kRemoveDuplicates,
                              DeschedulerPlugin::kRemovePodsViolatingTopologySpread}) {
    if (!cfg.enabled(p)) continue;
    if (p == DeschedulerPlugin::kRemoveDuplicates) {
      desched_remove_duplicates(w, fx);
    } else {
      desched_remove_spread_violations(w, fx);
    }
  }
}

// ---------------------------------------------------------------------------
// Node controller (taint manager).
// ---------------------------------------------------------------------------

inline void node_controller_step(World& w, EffectLog& fx) {
  GlobalState& g = w.state();
  NodeId n = w.dequeue(kQueueNodeController);
  const NodeDyn& nd = g.mut.nodes[static_cast<size_t>(n)];

  uint8_t want = 0;
  if (nd.status == NodeStatus::kNotReady) want |= kAutoTaintNotReady;
  if (nd.status == NodeStatus::kMaintenance) want |= kAutoTaintMaintenance;
  if (nd.auto_taints != want) w.set_node_auto_taints(n, want);

  // NotReady nodes are handled by the kubelet failure path; the taint
  // manager drains Maintenance nodes and enforces static NoExecute taints.
  if (nd.status == NodeStatus::kNotReady) return;

  std::vector<Taint> taints;
  collect_taints(g, n, taints);
  bool any_no_execute = false;
  for (const auto& t : taints) any_no_execute |= (t.effect == TaintEffect::kNoExecute);
  if (!any_no_execute) return;

  for (PodId p = 0; p < static_cast<PodId>(g.mut.pods.size()); ++p) {
    const PodDyn& pd = g.mut.pods[static_cast<size_t>(p)];
    if (pd.bound_node != n || !pod_placed(pd.status)) continue;
    if (tolerates_all(g.deployment_type(pd.type).tmpl, taints, /*no_execute_only=*/true)) continue;
    evict_pod(w, p, fx, EffectKind::kTaintEvict);
  }
}

}  // namespace kivi

#endif  // KIVI_CONTROLLERS_HPP_
