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
#include "kivi/orchestrator.hpp"

using namespace kivi;
using kivi::test::SetupBuilder;

namespace {
ScaleVector sv(std::vector<Count> n, std::vector<Count> p) {
  return ScaleVector{std::move(n), std::move(p)};
}
}  // namespace

TEST_CASE("confident size doubles the worst minima over the library") {
  SECTION("the eight-case library yields (6,6)") {
    ViolationLibrary lib;
    lib.cases = {
        {"c1", sv({1}, {3})}, {"c2", sv({1}, {2})}, {"c3", sv({3}, {6})},
        {"c4", sv({2}, {5})}, {"c5", sv({2}, {4})}, {"c6", sv({2}, {2})},
        {"c7", sv({1}, {1})}, {"c8", sv({3}, {6})},
    };
    ConfidentSize conf = compute_confident_size(lib);
    CHECK(conf.n_conf == 6);
    CHECK(conf.theta_conf == 6);
  }
  SECTION("a single smallest case doubles to (2,2)") {
    ViolationLibrary lib;
    lib.cases = {{"x", sv({1}, {1})}};
    ConfidentSize conf = compute_confident_size(lib);
    CHECK(conf.n_conf == 2);
    CHECK(conf.theta_conf == 2);
  }
  SECTION("a lone <2,5> case gives n=4 and theta=6") {
    ViolationLibrary lib;
    lib.cases = {{"x", sv({2}, {5})}};
    ConfidentSize conf = compute_confident_size(lib);
    CHECK(conf.n_conf == 4);
    CHECK(conf.theta_conf == 6);  // 2 * ceil(5/2)
  }
  SECTION("an empty library is an error") {
    CHECK_THROWS_AS(compute_confident_size({}), EmptyLibraryError);
  }
}

TEST_CASE("scale bounds clamp user ranges by the confident size") {
  SetupBuilder b;
  b.node_type("a", 2000, {}, {0, std::nullopt});  // unbounded above
  b.node_type("b", 2000, {}, {0, 3});
  b.deployment("app", 500, {2, 10});
  auto setup = b.build();

  auto nb = node_scale_bounds(*setup, {6, 6});
  REQUIRE(nb.size() == 2);
  CHECK(nb[0].min == 0);
  CHECK(nb[0].max == 6);  // clamped by n_conf
  CHECK(nb[1].max == 3);  // clamped by the user bound

  auto pb = pod_scale_bounds(*setup, {6, 6}, /*node_total=*/1);
  REQUIRE(pb.size() == 1);
  CHECK(pb[0].min == 2);  // p_l
  CHECK(pb[0].max == 6);  // min(10, theta*|N|) = 6
  pb = pod_scale_bounds(*setup, {6, 6}, 2);
  CHECK(pb[0].max == 10);  // min(10, 12)
}

TEST_CASE("enumeration reproduces the two-node-type worked example exactly") {
  SetupBuilder b;
  b.node_type("t1", 2000, {}, {0, 1});
  b.node_type("t2", 2000, {}, {0, 1});
  b.deployment("app", 500, {1, std::nullopt});
  auto setup = b.build();

  auto scales = enumerate_scales(*setup, {6, 2});  // theta_conf = 2
  std::vector<ScaleVector> expect = {
      sv({1, 0}, {1}), sv({0, 1}, {1}), sv({1, 0}, {2}), sv({0, 1}, {2}),
      sv({1, 1}, {1}), sv({1, 1}, {2}), sv({1, 1}, {3}), sv({1, 1}, {4}),
  };
  CHECK(scales == expect);
}

TEST_CASE("zero-node scales are never emitted") {
  SetupBuilder b;
  b.node_type("t", 2000, {}, {0, 2});
  b.deployment("app", 500, {0, std::nullopt});
  auto setup = b.build();
  for (const auto& s : enumerate_scales(*setup, {2, 2})) {
    CHECK(scale_node_total(s) > 0);
  }
}

TEST_CASE("enumeration order matches a hand sort") {
  SetupBuilder b;
  b.node_type("t", 2000, {}, {1, 2});
  b.deployment("app", 500, {1, 2});
  auto setup = b.build();
  auto scales = enumerate_scales(*setup, {6, 6});
  std::vector<ScaleVector> expect = {sv({1}, {1}), sv({1}, {2}), sv({2}, {1}), sv({2}, {2})};
  CHECK(scales == expect);
}

TEST_CASE("enumeration is duplicate-free, ordered, and covers all combinations") {
  SetupBuilder b;
  b.node_type("a", 2000, {}, {0, 2});
  b.node_type("b", 2000, {}, {0, 2});
  b.deployment("x", 500, {1, std::nullopt});
  b.deployment("y", 500, {0, 2});
  auto setup = b.build();
  ConfidentSize conf{2, 2};
  auto scales = enumerate_scales(*setup, conf);

  for (size_t i = 1; i < scales.size(); ++i) {
    CHECK(compare_scale(scales[i - 1], scales[i]) == std::strong_ordering::less);
  }
  // Reference count: brute-force re-enumeration.
  Count ratio = effective_ratio_bound(*setup, conf);
  int expected = 0;
  for (Count a = 0; a <= 2; ++a) {
    for (Count bb = 0; bb <= 2; ++bb) {
      Count n = a + bb;
      if (n == 0) continue;
      for (Count x = 1; x <= 2 * n; ++x) {
        for (Count y = 0; y <= std::min(2, 2 * n); ++y) {
          if (x + y <= ratio * n) expected++;
        }
      }
    }
  }
  CHECK(static_cast<int>(scales.size()) == expected);
}

TEST_CASE("the ratio cut-off prefers the user bound, then the capacity estimate") {
  SetupBuilder b;
  b.node_type("t", 1000);
  b.deployment("app", 500);
  auto setup = b.build();
  CHECK(effective_ratio_bound(*setup, {6, 6}) == 2);  // 1000/500
  setup->options.ratio_bound = 4;
  CHECK(effective_ratio_bound(*setup, {6, 6}) == 4);
}

TEST_CASE("the scaling sweep finds the taint conflict at the smallest scale") {
  SetupBuilder b;
  b.node_type("gpu", 2000).taint_last_node_type("dedicated", "gpu", TaintEffect::kNoExecute);
  b.deployment("app", 500);
  b.last_deployment().tmpl.node_name = b.sym("gpu-0");
  b.intent(CheckKind::kOscillation);
  auto setup = b.build();

  ScalingOptions options;
  options.check_invariants = true;
  ScalingReport report = run_scaling(*setup, options);
  REQUIRE(report.first_violation.has_value());
  const ScaleResult& r = report.per_scale[*report.first_violation];
  CHECK(r.scale == sv({1}, {1}));
  REQUIRE(!r.violations.empty());
  CHECK(r.violations[0].info.check == CheckKind::kOscillation);
}

TEST_CASE("a clean sweep reports confidence-bounded completeness") {
  SetupBuilder b;
  b.node_type("worker", 2000, {}, {0, 2});
  b.deployment("app", 500, {1, 2});
  b.intent(CheckKind::kExpReplicas, {1});
  auto setup = b.build();

  ScalingOptions options;
  options.check_invariants = true;
  ScalingReport report = run_scaling(*setup, options);
  CHECK(!report.first_violation.has_value());
  CHECK(report.complete);
  for (const auto& r : report.per_scale) {
    CHECK(r.outcome == ScaleOutcome::kNoViolation);
  }
}

TEST_CASE("queue overflow escalates through the capacity ladder") {
  SetupBuilder b;
  b.node_type("worker", 8000);
  b.deployment("app", 500);
  b.intent(CheckKind::kExpReplicas, {1});
  auto setup = b.build();
  setup->options.queue_capacity = 4;

  // Six initial pods need more than the configured 4 slots; the ladder must
  // retry large enough to pass.
  ScalingOptions options;
  options.pinned_scale = sv({2}, {6});
  ScalingReport report = run_scaling(*setup, options);
  REQUIRE(report.per_scale.size() == 1);
  CHECK(report.per_scale[0].outcome == ScaleOutcome::kNoViolation);
  CHECK(report.per_scale[0].queue_capacity_used >= 6);
}

TEST_CASE("calibration recovers per-case minima and the derived confident size") {
  // Two cheap deterministic cases: the taint conflict (min <1,1>) and a
  // duplicates conflict (min <2,4>).
  SetupBuilder c7;
  c7.node_type("gpu", 2000).taint_last_node_type("dedicated", "gpu", TaintEffect::kNoExecute);
  c7.deployment("app", 500);
  c7.last_deployment().tmpl.node_name = c7.sym("gpu-0");
  c7.intent(CheckKind::kOscillation);
  auto c7s = c7.build();

  SetupBuilder c5;
  c5.node_type("worker", 1000);
  c5.deployment("app", 500, {4, std::nullopt});
  c5.descheduler(static_cast<uint8_t>(DeschedulerPlugin::kRemoveDuplicates), 60);
  c5.intent(CheckKind::kOscillation);
  auto c5s = c5.build();

  ScalingOptions base;
  CalibrationResult cal = calibrate({{"c7", c7s.get()}, {"c5", c5s.get()}}, base, {6, 6});
  REQUIRE(cal.library.cases.size() == 2);
  CHECK(cal.library.cases[0].min_violation_scale == sv({1}, {1}));
  CHECK(cal.library.cases[1].min_violation_scale == sv({2}, {4}));
  ConfidentSize conf = compute_confident_size(cal.library);
  CHECK(conf.n_conf == 4);
  CHECK(conf.theta_conf == 4);  // 2 * ceil(4/2)
}

TEST_CASE("calibration lists cases without violations instead of failing") {
  SetupBuilder b;
  b.node_type("worker", 2000, {}, {0, 2});
  b.deployment("app", 500, {1, 2});
  b.intent(CheckKind::kExpReplicas, {1});
  auto setup = b.build();
  CalibrationResult cal = calibrate({{"ok", setup.get()}}, {}, {2, 2});
  CHECK(cal.library.cases.empty());
  REQUIRE(cal.no_violation_cases.size() == 1);
  CHECK(cal.no_violation_cases[0] == "ok");
}
