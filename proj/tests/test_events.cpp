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

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "kivi/engine.hpp"
#include "kivi/events.hpp"

using namespace kivi;
using kivi::test::SetupBuilder;
using kivi::test::settle;

namespace {

EventSpec node_failure(Count max_occ = 2, Tick interval = 5) {
  EventSpec ev;
  ev.kind = EventKind::kNodeFailure;
  ev.interval = interval;
  ev.max_occurrences = max_occ;
  return ev;
}

}  // namespace

TEST_CASE("node failure branches over every ready node") {
  SetupBuilder b;
  b.node_type("worker", 2000);
  b.deployment("app", 500, {0, std::nullopt});
  b.event(node_failure());
  auto setup = b.build();
  GlobalState g = instantiate_topology({setup.get(), {{2}, {0}}}, 8);

  int32_t proc = kNumControllerProcs;
  CHECK(enabled_branches(g, proc).size() == 2);

  UndoJournal j;
  World w(g, j);
  w.set_node_status(1, NodeStatus::kNotReady);
  CHECK(enabled_branches(g, proc).size() == 1);
}

TEST_CASE("pattern change is time gated") {
  SetupBuilder b;
  b.node_type("worker", 2000);
  b.deployment("app", 500);
  b.last_deployment().tmpl.cpu_profile.steps = {{0, 500}, {40, 50}};
  EventSpec ev;
  ev.kind = EventKind::kCpuPatternChange;
  ev.interval = 0;
  ev.max_occurrences = 1000;
  ev.target_deployment = 0;
  b.event(ev);
  auto setup = b.build();
  GlobalState g = instantiate_topology({setup.get(), {{1}, {1}}}, 8);
  settle(g);  // pod running at usage 500, started at t=0

  int32_t proc = kNumControllerProcs;
  CHECK(enabled_branches(g, proc).empty());  // drop step due at t=40
  auto ready = event_next_ready(g, proc);
  REQUIRE(ready.has_value());
  CHECK(*ready == 40);

  UndoJournal j;
  World w(g, j);
  w.set_now(40);
  auto branches = enabled_branches(g, proc);
  REQUIRE(branches.size() == 1);
  EffectLog fx;
  apply_event_branch(w, proc, branches[0], fx);
  CHECK(g.mut.pods[0].cpu_usage == 50);
  CHECK(event_next_ready(g, proc) == std::nullopt);  // profile exhausted
}

TEST_CASE("maintenance with no ready nodes has no branches") {
  SetupBuilder b;
  b.node_type("worker", 2000);
  b.deployment("app", 500, {0, std::nullopt});
  EventSpec ev;
  ev.kind = EventKind::kMaintenance;
  ev.interval = 10;
  ev.max_occurrences = 1;
  ev.maintenance_duration = 30;
  b.event(ev);
  auto setup = b.build();
  GlobalState g = instantiate_topology({setup.get(), {{1}, {0}}}, 8);
  UndoJournal j;
  World w(g, j);
  w.set_node_status(0, NodeStatus::kNotReady);
  w.set_now(10);
  CHECK(enabled_branches(g, kNumControllerProcs).empty());
  CHECK(event_next_ready(g, kNumControllerProcs) == std::nullopt);
}

TEST_CASE("maintenance drains the node and restores it after its duration") {
  SetupBuilder b;
  b.node_type("worker", 2000);
  b.deployment("app", 500);
  EventSpec ev;
  ev.kind = EventKind::kMaintenance;
  ev.interval = 20;
  ev.max_occurrences = 1;
  ev.maintenance_duration = 30;
  b.event(ev);
  auto setup = b.build();
  GlobalState g = instantiate_topology({setup.get(), {{2}, {2}}}, 8);
  settle(g);

  int32_t proc = kNumControllerProcs;
  UndoJournal j;
  World w(g, j);
  EffectLog fx;
  REQUIRE(event_next_ready(g, proc).has_value());
  CHECK(*event_next_ready(g, proc) == 20);
  w.set_now(20);
  auto branches = enabled_branches(g, proc);
  REQUIRE(branches.size() == 2);
  apply_event_branch(w, proc, branches[0], fx);  // take node 0 down
  CHECK(g.mut.nodes[0].status == NodeStatus::kMaintenance);
  settle(g);  // drain: taint manager evicts, deployment recreates on node 1

  CHECK(g.mut.nodes[1].num_pods == 2);
  auto restore_at = event_next_ready(g, proc);
  REQUIRE(restore_at.has_value());
  CHECK(*restore_at == 50);  // occurrences exhausted, but the restore is owed
  w.set_now(50);
  auto restore = enabled_branches(g, proc);
  REQUIRE(restore.size() == 1);
  fx.clear();
  apply_event_branch(w, proc, restore[0], fx);
  CHECK(g.mut.nodes[0].status == NodeStatus::kReady);
  CHECK(event_next_ready(g, proc) == std::nullopt);
  check_state_invariants(g);
}

TEST_CASE("merged cpu updates equal any sequential ordering") {
  SetupBuilder b;
  b.node_type("worker", 4000);
  b.deployment("app", 500);
  EventSpec ev;
  ev.kind = EventKind::kCpuChange;
  ev.interval = 1;
  ev.max_occurrences = 2;
  ev.target_deployment = 0;
  b.event(ev);
  auto setup = b.build();

  auto make_settled = [&] {
    GlobalState g = instantiate_topology({setup.get(), {{1}, {3}}}, 8);
    settle(g);
    return g;
  };

  GlobalState merged = make_settled();
  Millicores level = 0;
  {
    UndoJournal j;
    World w(merged, j);
    w.set_now(1);
    auto branches = enabled_branches(merged, kNumControllerProcs);
    REQUIRE(!branches.empty());
    level = branches[0].value;
    EffectLog fx;
    w.set_proc_last_run(kNumControllerProcs, 1);
    apply_event_branch(w, kNumControllerProcs, branches[0], fx);
  }

  // Brute force: apply the same level pod by pod, in both orders.
  for (bool reverse : {false, true}) {
    GlobalState seq = make_settled();
    UndoJournal j;
    World w(seq, j);
    w.set_now(1);
    std::vector<PodId> pods = {0, 1, 2};
    if (reverse) std::reverse(pods.begin(), pods.end());
    for (PodId p : pods) w.set_pod_usage(p, level);
    // Count the merged event exactly once, like the real branch does.
    w.bump_proc_occurrences(kNumControllerProcs);
    w.set_proc_last_run(kNumControllerProcs, 1);

    std::vector<int64_t> a, bwords;
    serialize_cluster(merged.mut, a);
    serialize_cluster(seq.mut, bwords);
    CHECK(a == bwords);
  }
}

TEST_CASE("events fire at most max_occurrences times") {
  SetupBuilder b;
  b.node_type("worker", 2000);
  b.deployment("app", 500, {0, std::nullopt});
  b.event(node_failure(2, 5));
  auto setup = b.build();
  GlobalState g = instantiate_topology({setup.get(), {{3}, {0}}}, 8);
  UndoJournal j;
  World w(g, j);
  EffectLog fx;

  int fired = 0;
  for (int i = 0; i < 10; ++i) {
    auto ready = event_next_ready(g, kNumControllerProcs);
    if (!ready) break;
    w.set_now(*ready);
    auto branches = enabled_branches(g, kNumControllerProcs);
    REQUIRE(!branches.empty());
    w.set_proc_last_run(kNumControllerProcs, g.mut.now);
    apply_event_branch(w, kNumControllerProcs, branches[0], fx);
    fired++;
  }
  CHECK(fired == 2);
  CHECK(event_next_ready(g, kNumControllerProcs) == std::nullopt);
}

TEST_CASE("event branches preserve the structural invariants") {
  SetupBuilder b;
  b.node_type("worker", 4000);
  b.deployment("app", 500);
  EventSpec apply;
  apply.kind = EventKind::kApplyDeployment;
  apply.interval = 10;
  apply.max_occurrences = 1;
  apply.apply_replicas = ApplyReplicas::kDefault;
  b.event(apply);
  b.event(node_failure(1, 15));
  auto setup = b.build();

  GlobalState g = instantiate_topology({setup.get(), {{2}, {3}}}, 16);
  settle(g);
  UndoJournal j;
  World w(g, j);
  EffectLog fx;
  for (int32_t proc = kNumControllerProcs; proc < static_cast<int32_t>(g.mut.procs.size());
       ++proc) {
    auto ready = event_next_ready(g, proc);
    if (!ready) continue;
    if (*ready > g.mut.now) w.set_now(*ready);
    auto branches = enabled_branches(g, proc);
    REQUIRE(!branches.empty());
    apply_event_branch(w, proc, branches[0], fx);
    check_state_invariants(g);
    settle(g);
    check_state_invariants(g);
  }
}
