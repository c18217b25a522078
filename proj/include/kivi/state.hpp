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

#ifndef KIVI_STATE_HPP_
#define KIVI_STATE_HPP_

#include <algorithm>
#include <array>
#include <cassert>
#include <cstring>
#include <string>
#include <vector>

#include "kivi/setup.hpp"

namespace kivi {

enum class PodStatus : int8_t { kPending, kScheduled, kRunning, kTerminating, kFailed, kDeleted };
enum class NodeStatus : int8_t { kReady, kNotReady, kMaintenance };

inline const char* pod_status_name(PodStatus s) {
  switch (s) {
    case PodStatus::kPending: return "Pending";
    case PodStatus::kScheduled: return "Scheduled";
    case PodStatus::kRunning: return "Running";
    case PodStatus::kTerminating: return "Terminating";
    case PodStatus::kFailed: return "Failed";
    case PodStatus::kDeleted: return "Deleted";
  }
  return "?";
}

inline const char* node_status_name(NodeStatus s) {
  switch (s) {
    case NodeStatus::kReady: return "Ready";
    case NodeStatus::kNotReady: return "NotReady";
    case NodeStatus::kMaintenance: return "Maintenance";
  }
  return "?";
}

// Dynamic taints applied by the node controller on status changes.
constexpr uint8_t kAutoTaintNotReady = 1 << 0;     // NoExecute
constexpr uint8_t kAutoTaintMaintenance = 1 << 1;  // NoExecute

// Controller queue slots. HPA and the descheduler are timer+trigger driven
// and have no queue.
enum ControllerQueue : int32_t {
  kQueueScheduler = 0,
  kQueueKubelet = 1,
  kQueueDeployment = 2,
  kQueueNodeController = 3,
  kNumQueues = 4,
};

enum ProcessId : int32_t {
  kProcScheduler = 0,
  kProcKubelet = 1,
  kProcDeployment = 2,
  kProcNodeController = 3,
  kProcHpa = 4,
  kProcDescheduler = 5,
  kNumControllerProcs = 6,
  // event processes follow, one per EventSpec
};

struct StableNode {
  int32_t type = 0;
  SymbolId name = kNoSymbol;
  std::map<SymbolId, SymbolId> labels;  // includes the auto hostname label
  std::vector<Taint> taints;
  Millicores cpu_capacity = 0;
};

// Immutable after instantiate_topology; shared by reference during search.
struct StableState {
  std::vector<StableNode> nodes;
  std::vector<int32_t> process_event;  // per process: event-spec index or -1
  std::vector<Tick> process_interval;
  std::vector<std::string> process_name;
};

struct NodeDyn {
  NodeStatus status = NodeStatus::kReady;
  Millicores cpu_left = 0;
  Count num_pods = 0;
  uint8_t auto_taints = 0;
};

struct PodDyn {
  int32_t type = 0;
  PodStatus status = PodStatus::kPending;
  NodeId bound_node = kNoId;
  Millicores cpu_usage = 0;
  Tick created_at = 0;
  Tick started_at = -1;
  int32_t template_rev = 0;
  int32_t profile_step = -1;  // last applied CpuProfile step
  bool parked = false;  // Pending but recorded unschedulable
};

struct DeploymentDyn {
  Count desired = 0;
  Count spec_replicas = 0;  // mutable via Apply/Scale events
  int32_t template_rev = 0;
  int64_t evict_count = 0;  // bumped per policy eviction, for oscillation monitors
  int64_t deploy_count = 0; // bumped per reconcile that creates pods
};

struct ProcDyn {
  Tick last_run = 0;
  Count occurrences = 0;
  bool dirty = false;   // trigger flag for timer-driven processes
  int32_t phase = 0;    // event-private (e.g. maintenance active)
  int32_t phase_node = kNoId;
  Tick phase_until = 0;
};

struct BoundedQueue {
  std::vector<int32_t> buf;
  size_t head = 0;
  Count capacity = 4;

  size_t size() const { return buf.size() - head; }
  bool empty() const { return head == buf.size(); }
  int32_t front() const { return buf[head]; }
  bool contains(int32_t id) const {
    for (size_t i = head; i < buf.size(); ++i) {
      if (buf[i] == id) return true;
    }
    return false;
  }
};

struct MutatingState {
  Tick now = 0;
  std::vector<ProcDyn> procs;
  std::vector<NodeDyn> nodes;
  std::vector<PodDyn> pods;
  std::vector<DeploymentDyn> deployments;
  std::array<BoundedQueue, kNumQueues> queues;
  std::vector<int64_t> monitor_words;
  bool queue_overflow = false;
};

struct GlobalState {
  const ClusterSetup* setup = nullptr;
  ScaleVector scale;
  StableState stable;
  MutatingState mut;

  const DeploymentType& deployment_type(int32_t d) const {
    return setup->objects.deployment_types[static_cast<size_t>(d)];
  }
  const NodeType& node_type_of(NodeId n) const {
    return setup->objects.node_types[static_cast<size_t>(stable.nodes[static_cast<size_t>(n)].type)];
  }
  std::string node_name(NodeId n) const { return setup->symbols->name(stable.nodes[static_cast<size_t>(n)].name); }
  std::string deployment_name(int32_t d) const { return setup->symbols->name(deployment_type(d).name); }
  std::string pod_name(PodId p) const {
    return deployment_name(mut.pods[static_cast<size_t>(p)].type) + "-" + std::to_string(p);
  }
};

// ---------------------------------------------------------------------------
// Undo journal: every mutation of the mutating section is recorded so the
// DFS can rewind to any earlier mark without full state copies.
// ---------------------------------------------------------------------------

struct UndoEntry {
  enum class Kind : uint8_t {
    kNodeField, kPodField, kDepField, kProcField,
    kQueuePush, kQueuePop, kQueueErase,
    kPodCreate, kNow, kMonitorWord, kOverflow,
  };
  Kind kind;
  uint8_t field;
  int32_t index;
  int64_t a;  // old value / erase position
  int64_t b;  // erased value
};

enum NodeField : uint8_t { kNfStatus, kNfCpuLeft, kNfNumPods, kNfAutoTaints };
enum PodField : uint8_t {
  kPfStatus, kPfBoundNode, kPfCpuUsage, kPfCreatedAt, kPfStartedAt, kPfTemplateRev,
  kPfProfileStep, kPfParked
};
enum DepField : uint8_t { kDfDesired, kDfSpecReplicas, kDfTemplateRev, kDfEvictCount, kDfDeployCount };
enum ProcField : uint8_t { kPrLastRun, kPrOccurrences, kPrDirty, kPrPhase, kPrPhaseNode, kPrPhaseUntil };

class UndoJournal {
 public:
  size_t mark() const { return entries_.size(); }

  void push(UndoEntry e) { entries_.push_back(e); }

  void revert_to(size_t mark, MutatingState& m) {
    while (entries_.size() > mark) {
      const UndoEntry& e = entries_.back();
      switch (e.kind) {
        case UndoEntry::Kind::kNodeField: {
          NodeDyn& n = m.nodes[static_cast<size_t>(e.index)];
          switch (e.field) {
            case kNfStatus: n.status = static_cast<NodeStatus>(e.a); break;
            case kNfCpuLeft: n.cpu_left = e.a; break;
            case kNfNumPods: n.num_pods = static_cast<Count>(e.a); break;
            case kNfAutoTaints: n.auto_taints = static_cast<uint8_t>(e.a); break;
          }
          break;
        }
        case UndoEntry::Kind::kPodField: {
          PodDyn& p = m.pods[static_cast<size_t>(e.index)];
          switch (e.field) {
            case kPfStatus: p.status = static_cast<PodStatus>(e.a); break;
            case kPfBoundNode: p.bound_node = static_cast<NodeId>(e.a); break;
            case kPfCpuUsage: p.cpu_usage = e.a; break;
            case kPfCreatedAt: p.created_at = e.a; break;
            case kPfStartedAt: p.started_at = e.a; break;
            case kPfTemplateRev: p.template_rev = static_cast<int32_t>(e.a); break;
            case kPfProfileStep: p.profile_step = static_cast<int32_t>(e.a); break;
            case kPfParked: p.parked = (e.a != 0); break;
          }
          break;
        }
        case UndoEntry::Kind::kDepField: {
          DeploymentDyn& d = m.deployments[static_cast<size_t>(e.index)];
          switch (e.field) {
            case kDfDesired: d.desired = static_cast<Count>(e.a); break;
            case kDfSpecReplicas: d.spec_replicas = static_cast<Count>(e.a); break;
            case kDfTemplateRev: d.template_rev = static_cast<int32_t>(e.a); break;
            case kDfEvictCount: d.evict_count = e.a; break;
            case kDfDeployCount: d.deploy_count = e.a; break;
          }
          break;
        }
        case UndoEntry::Kind::kProcField: {
          ProcDyn& p = m.procs[static_cast<size_t>(e.index)];
          switch (e.field) {
            case kPrLastRun: p.last_run = e.a; break;
            case kPrOccurrences: p.occurrences = static_cast<Count>(e.a); break;
            case kPrDirty: p.dirty = (e.a != 0); break;
            case kPrPhase: p.phase = static_cast<int32_t>(e.a); break;
            case kPrPhaseNode: p.phase_node = static_cast<int32_t>(e.a); break;
            case kPrPhaseUntil: p.phase_until = e.a; break;
          }
          break;
        }
        case UndoEntry::Kind::kQueuePush:
          m.queues[static_cast<size_t>(e.index)].buf.pop_back();
          break;
        case UndoEntry::Kind::kQueuePop:
          m.queues[static_cast<size_t>(e.index)].head--;
          break;
        case UndoEntry::Kind::kQueueErase: {
          auto& q = m.queues[static_cast<size_t>(e.index)];
          q.buf.insert(q.buf.begin() + static_cast<long>(e.a), static_cast<int32_t>(e.b));
          break;
        }
        case UndoEntry::Kind::kPodCreate:
          m.pods.pop_back();
          break;
        case UndoEntry::Kind::kNow:
          m.now = e.a;
          break;
        case UndoEntry::Kind::kMonitorWord:
          m.monitor_words[static_cast<size_t>(e.index)] = e.a;
          break;
        case UndoEntry::Kind::kOverflow:
          m.queue_overflow = (e.a != 0);
          break;
      }
      entries_.pop_back();
    }
  }

  size_t size() const { return entries_.size(); }

 private:
  std::vector<UndoEntry> entries_;
};

// ---------------------------------------------------------------------------
// World: the only way controllers, events and the engine mutate state.
// Raises the retrigger flags that drive event-driven controller eligibility.
// ---------------------------------------------------------------------------

class World {
 public:
  World(GlobalState& g, UndoJournal& j) : g_(g), j_(j) {}

  GlobalState& state() { return g_; }
  const GlobalState& state() const { return g_; }
  MutatingState& mut() { return g_.mut; }
  const MutatingState& mut() const { return g_.mut; }

  bool unpark_pending() const { return unpark_pending_; }
  void clear_unpark_pending() { unpark_pending_ = false; }

  // -- node fields --
  void set_node_status(NodeId n, NodeStatus s) {
    auto& nd = g_.mut.nodes[static_cast<size_t>(n)];
    j_.push({UndoEntry::Kind::kNodeField, kNfStatus, n, static_cast<int64_t>(nd.status), 0});
    nd.status = s;
    touched_cluster();
  }
  void set_node_cpu_left(NodeId n, Millicores v) {
    auto& nd = g_.mut.nodes[static_cast<size_t>(n)];
    j_.push({UndoEntry::Kind::kNodeField, kNfCpuLeft, n, nd.cpu_left, 0});
    nd.cpu_left = v;
    touched_cluster();
  }
  void set_node_num_pods(NodeId n, Count v) {
    auto& nd = g_.mut.nodes[static_cast<size_t>(n)];
    j_.push({UndoEntry::Kind::kNodeField, kNfNumPods, n, nd.num_pods, 0});
    nd.num_pods = v;
    touched_cluster();
  }
  void set_node_auto_taints(NodeId n, uint8_t v) {
    auto& nd = g_.mut.nodes[static_cast<size_t>(n)];
    j_.push({UndoEntry::Kind::kNodeField, kNfAutoTaints, n, nd.auto_taints, 0});
    nd.auto_taints = v;
    touched_cluster();
  }

  // -- pod fields --
  void set_pod_status(PodId p, PodStatus s) {
    auto& pd = g_.mut.pods[static_cast<size_t>(p)];
    j_.push({UndoEntry::Kind::kPodField, kPfStatus, p, static_cast<int64_t>(pd.status), 0});
    pd.status = s;
    touched_cluster();
    touch_hpa();
  }
  void set_pod_bound_node(PodId p, NodeId n) {
    auto& pd = g_.mut.pods[static_cast<size_t>(p)];
    j_.push({UndoEntry::Kind::kPodField, kPfBoundNode, p, pd.bound_node, 0});
    pd.bound_node = n;
    touched_cluster();
  }
  void set_pod_usage(PodId p, Millicores v) {
    auto& pd = g_.mut.pods[static_cast<size_t>(p)];
    j_.push({UndoEntry::Kind::kPodField, kPfCpuUsage, p, pd.cpu_usage, 0});
    pd.cpu_usage = v;
    touched_cluster();
    touch_hpa();
  }
  void set_pod_started_at(PodId p, Tick t) {
    auto& pd = g_.mut.pods[static_cast<size_t>(p)];
    j_.push({UndoEntry::Kind::kPodField, kPfStartedAt, p, pd.started_at, 0});
    pd.started_at = t;
    touched_cluster();
  }
  void set_pod_profile_step(PodId p, int32_t step) {
    auto& pd = g_.mut.pods[static_cast<size_t>(p)];
    j_.push({UndoEntry::Kind::kPodField, kPfProfileStep, p, pd.profile_step, 0});
    pd.profile_step = step;
    touched_cluster();
  }
  void set_pod_template_rev(PodId p, int32_t rev) {
    auto& pd = g_.mut.pods[static_cast<size_t>(p)];
    j_.push({UndoEntry::Kind::kPodField, kPfTemplateRev, p, pd.template_rev, 0});
    pd.template_rev = rev;
    touched_cluster();
  }
  // Parking does not count as a cluster change: it must not retrigger the
  // scheduler that just gave up on the pod.
  void set_pod_parked(PodId p, bool v) {
    auto& pd = g_.mut.pods[static_cast<size_t>(p)];
    j_.push({UndoEntry::Kind::kPodField, kPfParked, p, pd.parked ? 1 : 0, 0});
    pd.parked = v;
  }

  PodId create_pod(int32_t type, int32_t template_rev) {
    PodId id = static_cast<PodId>(g_.mut.pods.size());
    PodDyn pd;
    pd.type = type;
    pd.status = PodStatus::kPending;
    pd.created_at = g_.mut.now;
    pd.template_rev = template_rev;
    g_.mut.pods.push_back(pd);
    j_.push({UndoEntry::Kind::kPodCreate, 0, id, 0, 0});
    touched_cluster();
    touch_hpa();
    return id;
  }

  // -- deployment fields --
  void set_dep_desired(DeploymentId d, Count v) {
    auto& dd = g_.mut.deployments[static_cast<size_t>(d)];
    j_.push({UndoEntry::Kind::kDepField, kDfDesired, d, dd.desired, 0});
    dd.desired = v;
  }
  void set_dep_spec_replicas(DeploymentId d, Count v) {
    auto& dd = g_.mut.deployments[static_cast<size_t>(d)];
    j_.push({UndoEntry::Kind::kDepField, kDfSpecReplicas, d, dd.spec_replicas, 0});
    dd.spec_replicas = v;
  }
  void set_dep_template_rev(DeploymentId d, int32_t v) {
    auto& dd = g_.mut.deployments[static_cast<size_t>(d)];
    j_.push({UndoEntry::Kind::kDepField, kDfTemplateRev, d, dd.template_rev, 0});
    dd.template_rev = v;
  }
  void bump_evict_count(DeploymentId d) {
    auto& dd = g_.mut.deployments[static_cast<size_t>(d)];
    j_.push({UndoEntry::Kind::kDepField, kDfEvictCount, d, dd.evict_count, 0});
    dd.evict_count++;
  }
  void bump_deploy_count(DeploymentId d) {
    auto& dd = g_.mut.deployments[static_cast<size_t>(d)];
    j_.push({UndoEntry::Kind::kDepField, kDfDeployCount, d, dd.deploy_count, 0});
    dd.deploy_count++;
  }

  // -- process fields --
  void set_proc_last_run(int32_t p, Tick t) {
    auto& pr = g_.mut.procs[static_cast<size_t>(p)];
    j_.push({UndoEntry::Kind::kProcField, kPrLastRun, p, pr.last_run, 0});
    pr.last_run = t;
  }
  void bump_proc_occurrences(int32_t p) {
    auto& pr = g_.mut.procs[static_cast<size_t>(p)];
    j_.push({UndoEntry::Kind::kProcField, kPrOccurrences, p, pr.occurrences, 0});
    pr.occurrences++;
  }
  void set_proc_dirty(int32_t p, bool v) {
    auto& pr = g_.mut.procs[static_cast<size_t>(p)];
    if (pr.dirty == v) return;
    j_.push({UndoEntry::Kind::kProcField, kPrDirty, p, pr.dirty ? 1 : 0, 0});
    pr.dirty = v;
  }
  void set_proc_phase(int32_t p, int32_t phase, int32_t phase_node, Tick until) {
    auto& pr = g_.mut.procs[static_cast<size_t>(p)];
    j_.push({UndoEntry::Kind::kProcField, kPrPhase, p, pr.phase, 0});
    j_.push({UndoEntry::Kind::kProcField, kPrPhaseNode, p, pr.phase_node, 0});
    j_.push({UndoEntry::Kind::kProcField, kPrPhaseUntil, p, pr.phase_until, 0});
    pr.phase = phase;
    pr.phase_node = phase_node;
    pr.phase_until = until;
  }

  void set_now(Tick t) {
    j_.push({UndoEntry::Kind::kNow, 0, 0, g_.mut.now, 0});
    g_.mut.now = t;
  }

  void set_monitor_word(size_t idx, int64_t v) {
    auto& w = g_.mut.monitor_words[idx];
    if (w == v) return;
    j_.push({UndoEntry::Kind::kMonitorWord, 0, static_cast<int32_t>(idx), w, 0});
    w = v;
  }

  // -- queues; duplicate ids coalesce, a full queue flags overflow --
  bool enqueue(int32_t queue, int32_t id) {
    auto& q = g_.mut.queues[static_cast<size_t>(queue)];
    if (q.contains(id)) return true;
    if (static_cast<Count>(q.size()) >= q.capacity) {
      if (!g_.mut.queue_overflow) {
        j_.push({UndoEntry::Kind::kOverflow, 0, 0, 0, 0});
        g_.mut.queue_overflow = true;
      }
      return false;
    }
    q.buf.push_back(id);
    j_.push({UndoEntry::Kind::kQueuePush, 0, queue, 0, 0});
    return true;
  }

  int32_t dequeue(int32_t queue) {
    auto& q = g_.mut.queues[static_cast<size_t>(queue)];
    assert(!q.empty());
    int32_t id = q.buf[q.head];
    j_.push({UndoEntry::Kind::kQueuePop, 0, queue, 0, 0});
    q.head++;
    return id;
  }

  void queue_erase(int32_t queue, int32_t id) {
    auto& q = g_.mut.queues[static_cast<size_t>(queue)];
    for (size_t i = q.head; i < q.buf.size(); ++i) {
      if (q.buf[i] == id) {
        j_.push({UndoEntry::Kind::kQueueErase, 0, queue, static_cast<int64_t>(i), id});
        q.buf.erase(q.buf.begin() + static_cast<long>(i));
        return;
      }
    }
  }

 private:
  void touched_cluster() {
    unpark_pending_ = true;
    if (static_cast<size_t>(kProcDescheduler) < g_.mut.procs.size()) {
      set_proc_dirty(kProcDescheduler, true);
    }
  }
  void touch_hpa() {
    if (static_cast<size_t>(kProcHpa) < g_.mut.procs.size()) {
      set_proc_dirty(kProcHpa, true);
    }
  }

  GlobalState& g_;
  UndoJournal& j_;
  bool unpark_pending_ = false;
};

// ---------------------------------------------------------------------------
// Canonical serialization and digests of the mutating section.
// ---------------------------------------------------------------------------

namespace detail {

inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct HashAcc {
  uint64_t h = 0x12345678ULL;
  void add(int64_t v) { h = mix64(h ^ mix64(static_cast<uint64_t>(v))); }
};

}  // namespace detail

// Appends the cluster portion of the mutating section in canonical order.
inline void serialize_cluster(const MutatingState& m, std::vector<int64_t>& out) {
  out.push_back(m.now);
  for (const auto& p : m.procs) {
    out.push_back(p.last_run);
    out.push_back(p.occurrences);
    out.push_back(p.dirty ? 1 : 0);
    out.push_back(p.phase);
    out.push_back(p.phase_node);
    out.push_back(p.phase_until);
  }
  for (const auto& n : m.nodes) {
    out.push_back(static_cast<int64_t>(n.status));
    out.push_back(n.cpu_left);
    out.push_back(n.num_pods);
    out.push_back(n.auto_taints);
  }
  out.push_back(static_cast<int64_t>(m.pods.size()));
  for (const auto& p : m.pods) {
    out.push_back(p.type);
    out.push_back(static_cast<int64_t>(p.status));
    out.push_back(p.bound_node);
    out.push_back(p.cpu_usage);
    out.push_back(p.created_at);
    out.push_back(p.started_at);
    out.push_back(p.template_rev);
    out.push_back(p.profile_step);
    out.push_back(p.parked ? 1 : 0);
  }
  for (const auto& d : m.deployments) {
    out.push_back(d.desired);
    out.push_back(d.spec_replicas);
    out.push_back(d.template_rev);
    out.push_back(d.evict_count);
    out.push_back(d.deploy_count);
  }
  for (const auto& q : m.queues) {
    out.push_back(static_cast<int64_t>(q.size()));
    for (size_t i = q.head; i < q.buf.size(); ++i) out.push_back(q.buf[i]);
  }
}

inline void serialize_mutating(const MutatingState& m, std::vector<int64_t>& out) {
  serialize_cluster(m, out);
  for (int64_t w : m.monitor_words) out.push_back(w);
}

inline uint64_t hash_words(const std::vector<int64_t>& words) {
  detail::HashAcc acc;
  for (int64_t w : words) acc.add(w);
  acc.add(static_cast<int64_t>(words.size()));
  return acc.h;
}

// Digest of the full mutating section (visited-state pruning, traces).
inline uint64_t hash_mutating_state(const GlobalState& g) {
  std::vector<int64_t> words;
  serialize_mutating(g.mut, words);
  return hash_words(words);
}

// Digest excluding monitor records (monitor-purity checks).
inline uint64_t hash_cluster_state(const GlobalState& g) {
  std::vector<int64_t> words;
  serialize_cluster(g.mut, words);
  return hash_words(words);
}

// ---------------------------------------------------------------------------
// Topology instantiation.
// ---------------------------------------------------------------------------

// Effective HPA replica window of deployment type d at pod-scale `scale_pods`.
inline std::pair<Count, Count> hpa_window(const DeploymentType& dt, Count scale_pods) {
  Count max_eff = scale_pods;
  if (dt.hpa->max_replicas.has_value()) max_eff = std::min(max_eff, *dt.hpa->max_replicas);
  Count min_eff = std::min(dt.hpa->min_replicas, max_eff);
  return {min_eff, max_eff};
}

inline Count initial_replicas(const DeploymentType& dt, Count scale_pods) {
  if (dt.create_on_apply) return 0;
  if (dt.hpa.has_value()) {
    auto [lo, hi] = hpa_window(dt, scale_pods);
    return std::clamp(dt.spec_replicas, lo, hi);
  }
  return scale_pods;
}

inline void validate_scale(const ClusterSetup& setup, const ScaleVector& s) {
  if (s.node_counts.size() != setup.node_type_count() ||
      s.pod_counts.size() != setup.deployment_type_count()) {
    throw ArityMismatchError("scale arity does not match setup types");
  }
  for (size_t i = 0; i < s.node_counts.size(); ++i) {
    if (s.node_counts[i] < 0 || !setup.objects.node_types[i].count_bounds.contains(s.node_counts[i])) {
      throw ScaleError("node count " + std::to_string(s.node_counts[i]) +
                       " outside bounds for node type " +
                       setup.symbols->name(setup.objects.node_types[i].name));
    }
  }
  for (size_t i = 0; i < s.pod_counts.size(); ++i) {
    if (s.pod_counts[i] < 0 || !setup.objects.deployment_types[i].count_bounds.contains(s.pod_counts[i])) {
      throw ScaleError("pod count " + std::to_string(s.pod_counts[i]) +
                       " outside bounds for deployment " +
                       setup.symbols->name(setup.objects.deployment_types[i].name));
    }
  }
  if (scale_node_total(s) <= 0) throw ScaleError("scale has zero nodes");
}

// Builds the process table: the six controllers (HPA/descheduler only when
// configured) followed by one process per event assumption.
inline void build_process_table(const ClusterSetup& setup, StableState& st) {
  bool any_hpa = false;
  for (const auto& dt : setup.objects.deployment_types) any_hpa |= dt.hpa.has_value();
  bool has_desched = setup.control.descheduler.enabled_plugins != 0;

  const char* names[kNumControllerProcs] = {"scheduler", "kubelet", "deployment-controller",
                                            "node-controller", "hpa", "descheduler"};
  for (int i = 0; i < kNumControllerProcs; ++i) {
    st.process_event.push_back(-1);
    st.process_name.push_back(names[i]);
    Tick interval = 0;
    if (i == kProcHpa) interval = setup.control.hpa_interval;
    if (i == kProcDescheduler) interval = setup.control.descheduler.interval;
    st.process_interval.push_back(interval);
  }
  // Unconfigured processes never become eligible; mark them via interval -1.
  if (!any_hpa) st.process_interval[kProcHpa] = -1;
  if (!has_desched) st.process_interval[kProcDescheduler] = -1;

  for (size_t e = 0; e < setup.control.events.size(); ++e) {
    st.process_event.push_back(static_cast<int32_t>(e));
    st.process_interval.push_back(setup.control.events[e].interval);
    st.process_name.push_back(std::string("event:") +
                              event_kind_name(setup.control.events[e].kind) + "#" +
                              std::to_string(e));
  }
}

// Deterministically materializes the topology of one scaled setup: nodes per
// template in declaration order, initial pods Pending in the scheduler queue,
// clock at zero.
inline GlobalState instantiate_topology(const ScaledSetup& scaled, Count queue_capacity = 4) {
  const ClusterSetup& setup = *scaled.setup;
  validate_scale(setup, scaled.scale);

  GlobalState g;
  g.setup = &setup;
  g.scale = scaled.scale;

  SymbolTable& sym = *setup.symbols;
  SymbolId hostname_key = setup.hostname_key;

  for (size_t t = 0; t < setup.node_type_count(); ++t) {
    const NodeType& nt = setup.objects.node_types[t];
    for (Count k = 0; k < scaled.scale.node_counts[t]; ++k) {
      StableNode sn;
      sn.type = static_cast<int32_t>(t);
      sn.name = sym.intern(sym.name(nt.name) + "-" + std::to_string(k));
      sn.labels = nt.tmpl.labels;
      if (hostname_key != kNoSymbol) sn.labels[hostname_key] = sn.name;
      sn.taints = nt.tmpl.taints;
      sn.cpu_capacity = nt.tmpl.cpu_capacity;
      g.stable.nodes.push_back(std::move(sn));

      NodeDyn nd;
      nd.status = NodeStatus::kReady;
      nd.cpu_left = nt.tmpl.cpu_capacity;
      g.mut.nodes.push_back(nd);
    }
  }

  build_process_table(setup, g.stable);
  g.mut.procs.resize(g.stable.process_event.size());

  for (auto& q : g.mut.queues) q.capacity = queue_capacity;

  Millicores total_capacity = 0;
  for (const auto& n : g.stable.nodes) total_capacity += n.cpu_capacity;

  Millicores mandatory_request = 0;
  for (size_t d = 0; d < setup.deployment_type_count(); ++d) {
    const DeploymentType& dt = setup.objects.deployment_types[d];
    Count initial = initial_replicas(dt, scaled.scale.pod_counts[d]);
    DeploymentDyn dd;
    dd.desired = initial;
    dd.spec_replicas = initial;
    g.mut.deployments.push_back(dd);
    mandatory_request += static_cast<Millicores>(initial) * dt.tmpl.cpu_request;
  }

  bool can_rescale = !setup.control.events.empty() ||
                     setup.control.descheduler.enabled_plugins != 0;
  for (const auto& dt : setup.objects.deployment_types) can_rescale |= dt.hpa.has_value();
  if (mandatory_request > total_capacity && !can_rescale) {
    throw CapacityError("mandatory pod requests " + std::to_string(mandatory_request) +
                        "m exceed cluster capacity " + std::to_string(total_capacity) + "m");
  }

  UndoJournal scratch;
  World w(g, scratch);
  for (size_t d = 0; d < setup.deployment_type_count(); ++d) {
    const DeploymentType& dt = setup.objects.deployment_types[d];
    Count initial = initial_replicas(dt, scaled.scale.pod_counts[d]);
    for (Count k = 0; k < initial; ++k) {
      PodId p = w.create_pod(static_cast<int32_t>(d), 0);
      if (!w.enqueue(kQueueScheduler, p)) {
        // propagated as overflow; the orchestrator retries with a larger queue
      }
    }
  }
  // Freshly built states carry no retrigger residue.
  for (auto& p : g.mut.procs) p.dirty = false;

  return g;
}

// ---------------------------------------------------------------------------
// Structural invariants, used by tests and instrumented runs.
// ---------------------------------------------------------------------------

inline bool pod_holds_node_resources(PodStatus s) {
  return s == PodStatus::kScheduled || s == PodStatus::kRunning || s == PodStatus::kTerminating;
}

inline void check_state_invariants(const GlobalState& g) {
  const auto& m = g.mut;
  std::vector<Millicores> used(m.nodes.size(), 0);
  std::vector<Count> counts(m.nodes.size(), 0);
  for (size_t p = 0; p < m.pods.size(); ++p) {
    const PodDyn& pd = m.pods[p];
    bool bound = pd.bound_node != kNoId;
    if (bound != pod_holds_node_resources(pd.status)) {
      throw Error("invariant: pod " + std::to_string(p) + " bound/status mismatch (" +
                  pod_status_name(pd.status) + ")");
    }
    if (bound) {
      used[static_cast<size_t>(pd.bound_node)] +=
          g.deployment_type(pd.type).tmpl.cpu_request;
      counts[static_cast<size_t>(pd.bound_node)]++;
    }
  }
  for (size_t n = 0; n < m.nodes.size(); ++n) {
    if (m.nodes[n].cpu_left + used[n] != g.stable.nodes[n].cpu_capacity) {
      throw Error("invariant: resource conservation broken on node " + std::to_string(n));
    }
    if (m.nodes[n].cpu_left < 0) throw Error("invariant: negative cpuLeft");
    if (m.nodes[n].num_pods != counts[n]) {
      throw Error("invariant: numPods mismatch on node " + std::to_string(n));
    }
  }
  // Queue soundness: every Pending pod is queued exactly once or parked;
  // queues only reference live objects.
  const auto& sq = m.queues[kQueueScheduler];
  std::vector<int> seen(m.pods.size(), 0);
  for (size_t i = sq.head; i < sq.buf.size(); ++i) {
    int32_t id = sq.buf[i];
    if (id < 0 || static_cast<size_t>(id) >= m.pods.size()) throw Error("invariant: bad queue id");
    const PodDyn& pd = m.pods[static_cast<size_t>(id)];
    if (pd.status == PodStatus::kDeleted) throw Error("invariant: deleted pod in scheduler queue");
    if (pd.status != PodStatus::kPending) throw Error("invariant: non-pending pod in scheduler queue");
    if (++seen[static_cast<size_t>(id)] > 1) throw Error("invariant: pod queued twice");
  }
  for (size_t p = 0; p < m.pods.size(); ++p) {
    const PodDyn& pd = m.pods[p];
    if (pd.status == PodStatus::kPending) {
      bool queued = seen[p] == 1;
      if (queued == pd.parked) {
        throw Error("invariant: pending pod " + std::to_string(p) +
                    " must be queued xor parked");
      }
    }
  }
  for (int qi = 0; qi < kNumQueues; ++qi) {
    const auto& q = m.queues[static_cast<size_t>(qi)];
    for (size_t i = q.head; i < q.buf.size(); ++i) {
      if (q.buf[i] < 0) throw Error("invariant: negative id queued");
    }
  }
}

}  // namespace kivi

#endif  // KIVI_STATE_HPP_
