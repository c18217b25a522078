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

#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "bfs_oracle.hpp"
#include "helpers.hpp"
#include "kivi/engine.hpp"

using namespace kivi;
using kivi::test::SetupBuilder;

namespace {

Profile make_profile(const ClusterSetup* setup, ScaleVector scale, Count queue = 16) {
  Profile p;
  p.setup = setup;
  p.scale = std::move(scale);
  p.queue_capacity = queue;
  p.check_invariants = true;
  return p;
}

}  // namespace

TEST_CASE("adequate capacity with no events reaches a quiescent fixpoint") {
  SetupBuilder b;
  b.node_type("worker", 4000);
  b.deployment("web", 500);
  b.intent(CheckKind::kExpReplicas, {1});
  auto setup = b.build();

  Verdict v = explore(make_profile(setup.get(), {{2}, {3}}));
  CHECK(v.outcome == Outcome::kNoViolation);
  CHECK(v.stats.states_visited > 3);
  CHECK(v.violations.empty());
}

namespace {
std::shared_ptr<ClusterSetup> c7_like_setup() {
  SetupBuilder b;
  b.node_type("gpu", 2000).taint_last_node_type("dedicated", "gpu", TaintEffect::kNoExecute);
  b.deployment("app", 500);
  b.last_deployment().tmpl.node_name = b.sym("gpu-0");
  b.intent(CheckKind::kOscillation);
  return b.build();
}
}  // namespace

TEST_CASE("taint versus nodeName pin oscillates at the smallest scale") {
  auto setup = c7_like_setup();
  Verdict v = explore(make_profile(setup.get(), {{1}, {1}}));
  REQUIRE(v.outcome == Outcome::kViolation);
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].info.check == CheckKind::kOscillation);
  CHECK(!v.violations[0].trace.actions.empty());

  int evicts = 0, deploys = 0;
  for (const auto& a : v.violations[0].trace.actions) {
    for (const auto& e : a.effects) {
      if (e.kind == EffectKind::kTaintEvict) evicts++;
      if (e.kind == EffectKind::kCreatePod) deploys++;
    }
  }
  CHECK(evicts >= 3);
  CHECK(deploys >= 2);
}

TEST_CASE("replaying a violation trace reproduces its final digest") {
  auto setup = c7_like_setup();
  Profile p = make_profile(setup.get(), {{1}, {1}});
  Verdict v = explore(p);
  REQUIRE(v.outcome == Outcome::kViolation);
  const Trace& t = v.violations[0].trace;
  CHECK(replay_trace(p, t) == t.final_digest);
}

TEST_CASE("a tampered trace fails replay") {
  auto setup = c7_like_setup();
  Profile p = make_profile(setup.get(), {{1}, {1}});
  Verdict v = explore(p);
  REQUIRE(v.outcome == Outcome::kViolation);

  Trace t = v.violations[0].trace;
  REQUIRE(t.actions.size() > 2);
  Trace dropped = t;
  dropped.actions.erase(dropped.actions.begin() + 1);
  bool mismatch = false;
  try {
    mismatch = replay_trace(p, dropped) != t.final_digest;
  } catch (const ReplayError&) {
    mismatch = true;
  }
  CHECK(mismatch);
}

TEST_CASE("depth bound one on a multi-step scenario reports BoundReached") {
  SetupBuilder b;
  b.node_type("worker", 4000);
  b.deployment("web", 500);
  b.intent(CheckKind::kExpReplicas, {1});
  auto setup = b.build();
  Profile p = make_profile(setup.get(), {{2}, {3}});
  p.depth_bound = 1;
  Verdict v = explore(p);
  CHECK(v.outcome == Outcome::kBoundReached);
}

TEST_CASE("time advances to the minimum pending deadline") {
  SetupBuilder b;
  b.node_type("worker", 4000);
  b.deployment("web", 500);
  HpaSpec hpa;
  hpa.min_replicas = 1;
  hpa.interval = 15;
  hpa.target = 50;
  b.last_deployment().hpa = hpa;
  b.build()->control.hpa_interval = 15;
  auto setup = b.build();
  setup->control.hpa_interval = 15;
  setup->control.descheduler.enabled_plugins =
      static_cast<uint8_t>(DeschedulerPlugin::kRemoveDuplicates);
  setup->control.descheduler.interval = 20;

  GlobalState g = instantiate_topology({setup.get(), {{1}, {1}}}, 8);
  kivi::test::settle(g);

  UndoJournal j;
  World w(g, j);
  w.set_now(7);
  w.set_proc_dirty(kProcHpa, true);
  w.set_proc_dirty(kProcDescheduler, false);
  auto t = advance_target(g);
  REQUIRE(t.has_value());
  CHECK(*t == 15);  // hpa pending at tau+delta=15, now=7

  // Two timers pending at 15 and 20: the jump is to 15 only.
  w.set_proc_dirty(kProcDescheduler, true);
  t = advance_target(g);
  REQUIRE(t.has_value());
  CHECK(*t == 15);

  // HPA gated: not eligible before its interval elapses.
  CHECK_FALSE(process_eligible(g, kProcHpa));
  w.set_now(15);
  CHECK(process_eligible(g, kProcHpa));

  // Nothing pending anywhere: terminal quiescence.
  w.set_proc_dirty(kProcHpa, false);
  w.set_proc_dirty(kProcDescheduler, false);
  CHECK(advance_target(g) == std::nullopt);
}

TEST_CASE("empty queues and no due events force a clock advance action") {
  SetupBuilder b;
  b.node_type("worker", 4000);
  b.deployment("web", 500);
  EventSpec ev;
  ev.kind = EventKind::kApplyDeployment;
  ev.interval = 10;
  ev.max_occurrences = 1;
  ev.apply_replicas = ApplyReplicas::kUnchanged;
  b.event(ev);
  b.intent(CheckKind::kExpReplicas, {1});
  auto setup = b.build();

  Verdict v = explore(make_profile(setup.get(), {{1}, {1}}));
  CHECK(v.outcome == Outcome::kNoViolation);
  // The trace space must include a clock jump to t=10 for the event.
  CHECK(v.stats.max_depth >= 4);
}

TEST_CASE("the verdict is independent of the successor shuffle seed") {
  SetupBuilder b;
  b.node_type("worker", 2000);
  b.deployment("web", 500);
  EventSpec ev;
  ev.kind = EventKind::kNodeFailure;
  ev.interval = 5;
  ev.max_occurrences = 1;
  b.event(ev);
  b.intent(CheckKind::kNoFailedPods);
  auto setup = b.build();

  std::optional<Outcome> first;
  for (uint64_t seed : {1ull, 7ull, 42ull, 1234ull}) {
    Profile p = make_profile(setup.get(), {{2}, {2}});
    p.random_seed = seed;
    p.stop_at_first = true;
    Verdict v = explore(p);
    if (!first) {
      first = v.outcome;
    } else {
      CHECK(v.outcome == *first);
    }
  }
  CHECK(*first == Outcome::kViolation);  // a failing node strands a pod
}

TEST_CASE("exact-state and hashed visited sets agree on small instances") {
  SetupBuilder b;
  b.node_type("worker", 2000);
  b.deployment("web", 500);
  EventSpec ev;
  ev.kind = EventKind::kNodeFailure;
  ev.interval = 5;
  ev.max_occurrences = 2;
  b.event(ev);
  b.intent(CheckKind::kBalanceNode, {1});
  auto setup = b.build();

  Profile p = make_profile(setup.get(), {{2}, {2}});
  p.stop_at_first = false;
  Verdict hashed = explore(p);
  p.exact_state_mode = true;
  Verdict exact = explore(p);
  CHECK(hashed.outcome == exact.outcome);
  CHECK(hashed.stats.states_visited == exact.stats.states_visited);
}

TEST_CASE("exploration is deterministic without a seed") {
  auto setup = c7_like_setup();
  Profile p = make_profile(setup.get(), {{1}, {1}});
  Verdict a = explore(p);
  Verdict b = explore(p);
  CHECK(a.outcome == b.outcome);
  CHECK(a.stats.states_visited == b.stats.states_visited);
  REQUIRE(a.violations.size() == b.violations.size());
  CHECK(a.violations[0].trace.final_digest == b.violations[0].trace.final_digest);
  CHECK(a.violations[0].trace.actions.size() == b.violations[0].trace.actions.size());
}

// ---------------------------------------------------------------------------
// Engine soundness against the brute-force breadth-first oracle.
// ---------------------------------------------------------------------------

namespace {

std::shared_ptr<ClusterSetup> random_small_setup(uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) {
    return static_cast<int>(std::uniform_int_distribution<>(lo, hi)(rng));
  };
  SetupBuilder b;
  Millicores cap = 500 * pick(2, 4);
  b.node_type("worker", cap);
  Millicores req = pick(0, 1) ? 500 : 300;
  b.deployment("app", req);
  if (pick(0, 2) == 0) {
    b.spread("hostname", 1,
             pick(0, 1) ? WhenUnsatisfiable::kScheduleAnyway : WhenUnsatisfiable::kDoNotSchedule);
  }
  if (pick(0, 2) == 0) {
    HpaSpec hpa;
    hpa.min_replicas = 1;
    hpa.target = 50;
    hpa.interval = 15;
    b.last_deployment().hpa = hpa;
    b.last_deployment().tmpl.cpu_profile.steps = {{0, req}, {20, req / 5}};
    EventSpec pat;
    pat.kind = EventKind::kCpuPatternChange;
    pat.interval = 0;
    pat.max_occurrences = 100;
    pat.target_deployment = 0;
    b.event(pat);
  }
  int n_events = pick(0, 2);
  for (int e = 0; e < n_events; ++e) {
    EventSpec ev;
    switch (pick(0, 2)) {
      case 0:
        ev.kind = EventKind::kNodeFailure;
        ev.interval = 5 * pick(1, 3);
        ev.max_occurrences = pick(1, 2);
        break;
      case 1:
        ev.kind = EventKind::kCpuChange;
        ev.interval = 5 * pick(1, 3);
        ev.max_occurrences = 1;
        ev.target_deployment = 0;
        break;
      default:
        ev.kind = EventKind::kMaintenance;
        ev.interval = 5 * pick(1, 3);
        ev.max_occurrences = 1;
        ev.maintenance_duration = 10 * pick(1, 2);
        break;
    }
    b.event(ev);
  }
  switch (pick(0, 4)) {
    case 0: b.intent(CheckKind::kExpReplicas, {pick(1, 2)}); break;
    case 1: b.intent(CheckKind::kMaxReplicas, {pick(1, 3)}); break;
    case 2: b.intent(CheckKind::kNoFailedPods); break;
    case 3: b.intent(CheckKind::kBalanceNode, {1}); break;
    default: b.intent(CheckKind::kNoPendingBeyond, {10}); break;
  }
  return b.build();
}

}  // namespace

TEST_CASE("exact-state exploration agrees with the BFS oracle on random setups") {
  int conclusive = 0;
  for (uint64_t seed = 1; seed <= 24 && conclusive < 6; ++seed) {
    auto setup = random_small_setup(seed);
    std::mt19937_64 rng(seed ^ 0x9e37ULL);
    Count nodes = static_cast<Count>(std::uniform_int_distribution<>(1, 2)(rng));
    Count pods = static_cast<Count>(std::uniform_int_distribution<>(1, 3)(rng));

    Profile p = make_profile(setup.get(), {{nodes}, {pods}}, 32);
    p.exact_state_mode = true;
    p.stop_at_first = true;
    p.depth_bound = 100000;

    Verdict dfs;
    try {
      dfs = explore(p);
    } catch (const CapacityError&) {
      continue;  // trivially rejected configuration, nothing to compare
    }
    if (dfs.outcome != Outcome::kViolation && dfs.outcome != Outcome::kNoViolation) continue;

    kivi::test::BfsResult bfs = kivi::test::bfs_explore(p);
    if (bfs.capped) continue;

    INFO("seed " << seed << " scale <" << nodes << "," << pods << ">");
    CHECK((dfs.outcome == Outcome::kViolation) == bfs.violation);
    conclusive++;
  }
  CHECK(conclusive >= 6);
}
