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

#ifndef KIVI_ENGINE_HPP_
#define KIVI_ENGINE_HPP_

#include <chrono>
#include <cstdlib>
#include <optional>
#include <random>
#include <unordered_set>
#include <vector>

#include "kivi/controllers.hpp"
#include "kivi/events.hpp"
#include "kivi/monitors.hpp"
#include "kivi/state.hpp"

namespace kivi {

constexpr int32_t kClockProc = -1;

struct Profile {
  const ClusterSetup* setup = nullptr;
  ScaleVector scale;
  Count queue_capacity = 4;
  std::vector<IntentSpec> intents;  // empty = all intents of the setup
  bool stop_at_first = true;
  int64_t depth_bound = 200000;
  double time_budget_s = 0;  // 0 = unlimited
  std::optional<uint64_t> random_seed;
  bool exact_state_mode = false;
  bool check_invariants = false;
  size_t mem_budget_mb = 0;  // 0 = read KIVI_MEM_BUDGET_MB, default 2048
};

enum class Outcome : int8_t {
  kNoViolation,
  kViolation,
  kBoundReached,
  kResourceExhausted,
  kQueueOverflow,
};

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kNoViolation: return "NoViolation";
    case Outcome::kViolation: return "Violation";
    case Outcome::kBoundReached: return "BoundReached";
    case Outcome::kResourceExhausted: return "ResourceExhausted";
    case Outcome::kQueueOverflow: return "QueueOverflow";
  }
  return "?";
}

struct ActionRec {
  int32_t proc = kClockProc;
  int32_t branch = 0;
  Tick tick = 0;  // clock value after the action
  EffectLog effects;
};

struct Trace {
  ScaleVector scale;
  std::vector<ActionRec> actions;
  uint64_t final_digest = 0;
};

struct Violation {
  ViolationInfo info;
  Trace trace;
};

struct Stats {
  int64_t states_visited = 0;
  int64_t max_depth = 0;
  double wall_ms = 0;
};

struct Verdict {
  Outcome outcome = Outcome::kNoViolation;
  std::vector<Violation> violations;
  Stats stats;
};

// ---------------------------------------------------------------------------
// Process eligibility and time.
// ---------------------------------------------------------------------------

inline bool queue_controller(int32_t proc) {
  return proc == kProcScheduler || proc == kProcKubelet || proc == kProcDeployment ||
         proc == kProcNodeController;
}

inline int32_t controller_queue_of(int32_t proc) {
  switch (proc) {
    case kProcScheduler: return kQueueScheduler;
    case kProcKubelet: return kQueueKubelet;
    case kProcDeployment: return kQueueDeployment;
    case kProcNodeController: return kQueueNodeController;
  }
  return -1;
}

inline bool timed_controller_exists(const GlobalState& g, int32_t proc) {
  return g.stable.process_interval[static_cast<size_t>(proc)] >= 0;
}

inline bool process_eligible(const GlobalState& g, int32_t proc) {
  if (proc < kNumControllerProcs) {
    if (queue_controller(proc)) {
      return !g.mut.queues[static_cast<size_t>(controller_queue_of(proc))].empty();
    }
    if (!timed_controller_exists(g, proc)) return false;
    const ProcDyn& pr = g.mut.procs[static_cast<size_t>(proc)];
    Tick interval = g.stable.process_interval[static_cast<size_t>(proc)];
    return pr.dirty && pr.last_run + interval <= g.mut.now;
  }
  auto ready = event_next_ready(g, proc);
  return ready.has_value() && *ready <= g.mut.now && !enabled_branches(g, proc).empty();
}

inline std::vector<int32_t> eligible_processes(const GlobalState& g) {
  std::vector<int32_t> out;
  for (int32_t p = 0; p < static_cast<int32_t>(g.mut.procs.size()); ++p) {
    if (process_eligible(g, p)) out.push_back(p);
  }
  return out;
}

// A controller still has work to do, regardless of its timer. Used both for
// quiescence-gated property evaluation and for trace-terminal detection.
inline bool controller_pending(const GlobalState& g, int32_t proc) {
  if (queue_controller(proc)) {
    return !g.mut.queues[static_cast<size_t>(controller_queue_of(proc))].empty();
  }
  if (!timed_controller_exists(g, proc)) return false;
  return g.mut.procs[static_cast<size_t>(proc)].dirty;
}

inline bool controller_quiescent(const GlobalState& g) {
  for (int32_t p = 0; p < kNumControllerProcs; ++p) {
    if (controller_pending(g, p)) return false;
  }
  return true;
}

// The next tick at which anything could run; nullopt means the state is a
// terminal quiescent state (normal, successful termination).
inline std::optional<Tick> advance_target(const GlobalState& g) {
  std::optional<Tick> best;
  auto consider = [&](Tick t) {
    if (!best || t < *best) best = t;
  };
  for (int32_t p = 0; p < static_cast<int32_t>(g.mut.procs.size()); ++p) {
    if (p < kNumControllerProcs) {
      if (!controller_pending(g, p)) continue;
      if (queue_controller(p)) {
        consider(g.mut.now);
        continue;
      }
      Tick interval = g.stable.process_interval[static_cast<size_t>(p)];
      consider(std::max(g.mut.now, g.mut.procs[static_cast<size_t>(p)].last_run + interval));
    } else {
      auto t = event_next_ready(g, p);
      if (t) consider(std::max(g.mut.now, *t));
    }
  }
  return best;
}

inline bool any_event_live(const GlobalState& g) {
  for (int32_t p = kNumControllerProcs; p < static_cast<int32_t>(g.mut.procs.size()); ++p) {
    if (event_next_ready(g, p).has_value()) return true;
  }
  return false;
}

// Partial-order reduction: with no event processes left alive, the scheduler
// and a kubelet start step touch disjoint state and commute, so only the
// canonical order is expanded. Anything wider interleaves fully.
inline bool collapse_to_scheduler(const GlobalState& g, const std::vector<int32_t>& eligible) {
  if (eligible.size() != 2 || eligible[0] != kProcScheduler || eligible[1] != kProcKubelet) {
    return false;
  }
  if (any_event_live(g)) return false;
  const auto& kq = g.mut.queues[kQueueKubelet];
  const PodDyn& q = g.mut.pods[static_cast<size_t>(kq.front())];
  if (q.status != PodStatus::kScheduled || q.bound_node == kNoId) return false;
  if (g.mut.nodes[static_cast<size_t>(q.bound_node)].status != NodeStatus::kReady) return false;
  const auto& sq = g.mut.queues[kQueueScheduler];
  const PodDyn& p = g.mut.pods[static_cast<size_t>(sq.front())];
  const SchedulingConfig& sc = g.deployment_type(p.type).scheduling;
  if (sc.enabled(SchedulerPlugin::kPodTopologySpread) && !sc.spread_constraints.empty()) {
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Atomic step application, shared by search and replay.
// ---------------------------------------------------------------------------

inline void unpark_if_needed(World& w) {
  if (!w.unpark_pending()) return;
  w.clear_unpark_pending();
  GlobalState& g = w.state();
  for (PodId p = 0; p < static_cast<PodId>(g.mut.pods.size()); ++p) {
    if (g.mut.pods[static_cast<size_t>(p)].parked &&
        g.mut.pods[static_cast<size_t>(p)].status == PodStatus::kPending) {
      w.set_pod_parked(p, false);
      w.enqueue(kQueueScheduler, p);
    }
  }
}

inline void apply_process_action(World& w, int32_t proc, int32_t branch, EffectLog& fx) {
  GlobalState& g = w.state();
  if (proc < kNumControllerProcs) {
    if (proc == kProcHpa || proc == kProcDescheduler) {
      w.set_proc_dirty(proc, false);
      w.set_proc_last_run(proc, g.mut.now);
    }
    switch (proc) {
      case kProcScheduler: scheduler_step(w, fx); break;
      case kProcKubelet: kubelet_step(w, fx); break;
      case kProcDeployment: deployment_step(w, fx); break;
      case kProcNodeController: node_controller_step(w, fx); break;
      case kProcHpa: hpa_step(w, fx); break;
      case kProcDescheduler: descheduler_step(w, fx); break;
    }
  } else {
    auto branches = enabled_branches(g, proc);
    w.set_proc_last_run(proc, g.mut.now);
    apply_event_branch(w, proc, branches.at(static_cast<size_t>(branch)), fx);
  }
  unpark_if_needed(w);
}

// ---------------------------------------------------------------------------
// The explorer.
// ---------------------------------------------------------------------------

namespace detail {

struct WordsHash {
  size_t operator()(const std::vector<int64_t>& v) const {
    return static_cast<size_t>(hash_words(v));
  }
};

class VisitedSet {
 public:
  explicit VisitedSet(bool exact) : exact_(exact) {}

  // Returns true when the state is new.
  bool insert(const GlobalState& g) {
    if (exact_) {
      std::vector<int64_t> words;
      serialize_mutating(g.mut, words);
      bytes_ += words.size() * sizeof(int64_t) + 48;
      return exact_set_.insert(std::move(words)).second;
    }
    bytes_ += 40;
    return hash_set_.insert(hash_mutating_state(g)).second;
  }

  size_t approx_bytes() const { return bytes_; }
  size_t size() const { return exact_ ? exact_set_.size() : hash_set_.size(); }

 private:
  bool exact_;
  std::unordered_set<uint64_t> hash_set_;
  std::unordered_set<std::vector<int64_t>, WordsHash> exact_set_;
  size_t bytes_ = 0;
};

inline size_t mem_budget_bytes(const Profile& profile) {
  size_t mb = profile.mem_budget_mb;
  if (mb == 0) {
    if (const char* env = std::getenv("KIVI_MEM_BUDGET_MB")) {
      mb = static_cast<size_t>(std::strtoull(env, nullptr, 10));
    }
  }
  if (mb == 0) mb = 2048;
  return mb * 1024 * 1024;
}

}  // namespace detail

// Exhaustive DFS over the interleavings of all eligible processes, pruning
// visited mutating-section states, with monitors evaluated after every step.
inline Verdict explore(const Profile& profile) {
  auto t_start = std::chrono::steady_clock::now();
  Verdict verdict;

  ScaledSetup scaled{profile.setup, profile.scale};
  GlobalState g = instantiate_topology(scaled, profile.queue_capacity);
  if (g.mut.queue_overflow) {
    verdict.outcome = Outcome::kQueueOverflow;
    return verdict;
  }

  MonitorSet monitors;
  monitors.build(profile.intents.empty() ? profile.setup->control.intents : profile.intents, g);

  UndoJournal journal;
  World w(g, journal);

  std::optional<std::mt19937_64> rng;
  if (profile.random_seed) rng.emplace(*profile.random_seed);

  detail::VisitedSet visited(profile.exact_state_mode);
  const size_t mem_budget = detail::mem_budget_bytes(profile);

  struct Action {
    int32_t proc;
    int32_t branch;
  };
  struct Frame {
    std::vector<Action> actions;
    size_t next = 0;
    size_t enter_mark = 0;
  };

  std::vector<ActionRec> path;
  std::vector<Frame> stack;
  bool bound_hit = false;
  bool out_of_memory = false;
  int64_t step_counter = 0;

  auto elapsed_s = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  auto successors = [&](void) -> std::vector<Action> {
    std::vector<Action> acts;
    auto eligible = eligible_processes(g);
    if (eligible.empty()) {
      auto target = advance_target(g);
      if (!target) return acts;  // terminal quiescent state
      acts.push_back({kClockProc, 0});
      return acts;
    }
    if (collapse_to_scheduler(g, eligible)) {
      acts.push_back({kProcScheduler, 0});
      return acts;
    }
    for (int32_t p : eligible) {
      if (p < kNumControllerProcs) {
        acts.push_back({p, 0});
      } else {
        size_t n = enabled_branches(g, p).size();
        for (size_t b = 0; b < n; ++b) acts.push_back({p, static_cast<int32_t>(b)});
      }
    }
    if (rng && acts.size() > 1) std::shuffle(acts.begin(), acts.end(), *rng);
    return acts;
  };

  auto record_violation = [&](const ViolationInfo& info) {
    Violation v;
    v.info = info;
    v.trace.scale = profile.scale;
    v.trace.actions = path;
    v.trace.final_digest = hash_mutating_state(g);
    verdict.violations.push_back(std::move(v));
  };

  auto check_state = [&](bool terminal) -> std::optional<ViolationInfo> {
    if (profile.check_invariants) check_state_invariants(g);
    return monitors.check(w, path.size(), controller_quiescent(g), terminal);
  };

  // Initial state.
  visited.insert(g);
  verdict.stats.states_visited = 1;
  if (auto v = check_state(false)) {
    record_violation(*v);
    if (profile.stop_at_first) {
      verdict.outcome = Outcome::kViolation;
      verdict.stats.wall_ms = elapsed_s() * 1000;
      return verdict;
    }
  }
  {
    auto first = successors();
    if (first.empty()) {
      if (auto v = check_state(true)) record_violation(*v);
    } else {
      stack.push_back({std::move(first), 0, journal.mark()});
    }
  }

  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next == f.actions.size()) {
      stack.pop_back();
      if (!stack.empty()) {
        journal.revert_to(stack.back().enter_mark, g.mut);
        path.pop_back();
      }
      continue;
    }
    if (++step_counter % 1024 == 0 && profile.time_budget_s > 0 &&
        elapsed_s() > profile.time_budget_s) {
      bound_hit = true;
      break;
    }

    Action a = f.actions[f.next++];
    size_t parent_mark = f.enter_mark;
    EffectLog fx;
    if (a.proc == kClockProc) {
      auto target = advance_target(g);
      w.set_now(*target);
      fx.push_back({EffectKind::kAdvanceClock, kNoId, kNoId, *target});
    } else {
      apply_process_action(w, a.proc, a.branch, fx);
    }
    path.push_back({a.proc, a.branch, g.mut.now, std::move(fx)});
    verdict.stats.max_depth = std::max<int64_t>(verdict.stats.max_depth,
                                                static_cast<int64_t>(path.size()));

    if (g.mut.queue_overflow) {
      verdict.outcome = Outcome::kQueueOverflow;
      verdict.stats.wall_ms = elapsed_s() * 1000;
      return verdict;
    }

    bool backtrack = false;
    if (auto v = check_state(false)) {
      record_violation(*v);
      if (profile.stop_at_first) {
        verdict.outcome = Outcome::kViolation;
        verdict.stats.wall_ms = elapsed_s() * 1000;
        return verdict;
      }
      backtrack = true;  // prune below a violating state
    } else if (!visited.insert(g)) {
      backtrack = true;
    } else {
      verdict.stats.states_visited++;
      if (visited.approx_bytes() > mem_budget) {
        out_of_memory = true;
        break;
      }
      if (static_cast<int64_t>(path.size()) >= profile.depth_bound) {
        bound_hit = true;
        backtrack = true;
      }
    }

    if (!backtrack) {
      auto succ = successors();
      if (succ.empty()) {
        if (auto v = check_state(true)) {
          record_violation(*v);
          if (profile.stop_at_first) {
            verdict.outcome = Outcome::kViolation;
            verdict.stats.wall_ms = elapsed_s() * 1000;
            return verdict;
          }
        }
        backtrack = true;
      } else {
        stack.push_back({std::move(succ), 0, journal.mark()});
        continue;
      }
    }
    journal.revert_to(parent_mark, g.mut);
    path.pop_back();
  }

  verdict.stats.wall_ms = elapsed_s() * 1000;
  if (out_of_memory) {
    verdict.outcome = Outcome::kResourceExhausted;
  } else if (!verdict.violations.empty()) {
    verdict.outcome = Outcome::kViolation;
  } else if (bound_hit) {
    verdict.outcome = Outcome::kBoundReached;
  } else {
    verdict.outcome = Outcome::kNoViolation;
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// Trace replay: re-executes a trace from the initial topology and verifies
// it deterministically reproduces the recorded final state digest.
// ---------------------------------------------------------------------------

class ReplayError : public Error {
 public:
  using Error::Error;
};

inline uint64_t replay_trace(const Profile& profile, const Trace& trace) {
  ScaledSetup scaled{profile.setup, profile.scale};
  GlobalState g = instantiate_topology(scaled, profile.queue_capacity);
  MonitorSet monitors;
  monitors.build(profile.intents.empty() ? profile.setup->control.intents : profile.intents, g);
  UndoJournal journal;
  World w(g, journal);
  monitors.check(w, 0, controller_quiescent(g), false);

  size_t step = 0;
  for (const ActionRec& a : trace.actions) {
    step++;
    if (a.proc == kClockProc) {
      auto target = advance_target(g);
      if (!target) throw ReplayError("step " + std::to_string(step) + ": no pending work to advance to");
      if (*target != a.tick) {
        throw ReplayError("step " + std::to_string(step) + ": clock advance mismatch (expected t=" +
                          std::to_string(*target) + ", trace says t=" + std::to_string(a.tick) + ")");
      }
      w.set_now(*target);
    } else {
      if (a.proc < 0 || static_cast<size_t>(a.proc) >= g.mut.procs.size()) {
        throw ReplayError("step " + std::to_string(step) + ": unknown process id");
      }
      if (!process_eligible(g, a.proc)) {
        throw ReplayError("step " + std::to_string(step) + ": process " +
                          g.stable.process_name[static_cast<size_t>(a.proc)] + " not eligible");
      }
      EffectLog fx;
      apply_process_action(w, a.proc, a.branch, fx);
    }
    monitors.check(w, step, controller_quiescent(g), false);
  }
  return hash_mutating_state(g);
}

}  // namespace kivi

#endif  // KIVI_ENGINE_HPP_
