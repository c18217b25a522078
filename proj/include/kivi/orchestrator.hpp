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

#ifndef KIVI_ORCHESTRATOR_HPP_
#define KIVI_ORCHESTRATOR_HPP_

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "kivi/engine.hpp"
#include "kivi/scale.hpp"
#include "kivi/setup.hpp"

namespace kivi {

// Calibrated scale bound: searches stop once every combination up to
// (n_conf nodes, theta_conf pods-per-node) came back clean.
struct ConfidentSize {
  Count n_conf = 6;
  Count theta_conf = 6;
};

struct ViolationCaseRecord {
  std::string case_id;
  ScaleVector min_violation_scale;
};

struct ViolationLibrary {
  std::vector<ViolationCaseRecord> cases;
};

// Conf = <2 * max over cases of N(min violating scale),
//         2 * max over cases of Theta(min violating scale)>.
inline ConfidentSize compute_confident_size(const ViolationLibrary& lib) {
  if (lib.cases.empty()) throw EmptyLibraryError("violation library is empty");
  Count n = 0, theta = 0;
  for (const auto& c : lib.cases) {
    n = std::max(n, scale_node_total(c.min_violation_scale));
    theta = std::max(theta, pod_node_ratio(c.min_violation_scale));
  }
  return {static_cast<Count>(n * 2), static_cast<Count>(theta * 2)};
}

struct TypeBounds {
  Count min = 0;
  Count max = 0;
};

// Node bounds clamp the user range by n_conf; pod bounds depend on the node
// total of the candidate combination (theta_conf * |N|).
inline std::vector<TypeBounds> node_scale_bounds(const ClusterSetup& setup, const ConfidentSize& conf) {
  std::vector<TypeBounds> out;
  for (const auto& nt : setup.objects.node_types) {
    Count lo = std::max<Count>(0, nt.count_bounds.lower);
    Count hi = conf.n_conf;
    if (nt.count_bounds.upper) hi = std::min(hi, *nt.count_bounds.upper);
    out.push_back({lo, hi});
  }
  return out;
}

inline std::vector<TypeBounds> pod_scale_bounds(const ClusterSetup& setup, const ConfidentSize& conf,
                                                Count node_total) {
  std::vector<TypeBounds> out;
  for (const auto& dt : setup.objects.deployment_types) {
    Count lo = std::max<Count>(0, dt.count_bounds.lower);
    Count hi = static_cast<Count>(conf.theta_conf * node_total);
    if (dt.count_bounds.upper) hi = std::min(hi, *dt.count_bounds.upper);
    out.push_back({lo, hi});
  }
  return out;
}

// Trivial-case pod:node ratio cut-off. User-provided when set, otherwise the
// smaller of theta_conf*2 and a capacity estimate (beyond which the surplus
// pods could never be scheduled anyway).
inline Count effective_ratio_bound(const ClusterSetup& setup, const ConfidentSize& conf) {
  if (setup.options.ratio_bound) return *setup.options.ratio_bound;
  Count bound = static_cast<Count>(conf.theta_conf * 2);
  Millicores max_cap = 0;
  Millicores min_req = 0;
  for (const auto& nt : setup.objects.node_types) max_cap = std::max(max_cap, nt.tmpl.cpu_capacity);
  for (const auto& dt : setup.objects.deployment_types) {
    if (dt.tmpl.cpu_request > 0 && (min_req == 0 || dt.tmpl.cpu_request < min_req)) {
      min_req = dt.tmpl.cpu_request;
    }
  }
  if (max_cap > 0 && min_req > 0) {
    bound = std::min(bound, static_cast<Count>(max_cap / min_req));
  }
  return std::max<Count>(1, bound);
}

// All non-trivial scale combinations within bounds, ascending by
// compare_scale. Zero-node scales and pod counts beyond ratio_bound * |N|
// are trivial and skipped.
inline std::vector<ScaleVector> enumerate_scales(const ClusterSetup& setup, const ConfidentSize& conf) {
  Count ratio = effective_ratio_bound(setup, conf);
  auto nb = node_scale_bounds(setup, conf);
  std::vector<ScaleVector> out;

  std::vector<Count> nodes(nb.size(), 0);
  std::function<void(size_t)> rec_nodes = [&](size_t i) {
    if (i == nb.size()) {
      Count n_total = 0;
      for (Count c : nodes) n_total += c;
      if (n_total == 0) return;
      auto pb = pod_scale_bounds(setup, conf, n_total);
      std::vector<Count> pods(pb.size(), 0);
      std::function<void(size_t)> rec_pods = [&](size_t j) {
        if (j == pb.size()) {
          Count p_total = 0;
          for (Count c : pods) p_total += c;
          if (p_total > ratio * n_total) return;
          out.push_back({nodes, pods});
          return;
        }
        for (Count c = pb[j].min; c <= pb[j].max; ++c) {
          pods[j] = c;
          rec_pods(j + 1);
        }
      };
      rec_pods(0);
      return;
    }
    for (Count c = nb[i].min; c <= nb[i].max; ++c) {
      nodes[i] = c;
      rec_nodes(i + 1);
    }
  };
  rec_nodes(0);
  std::sort(out.begin(), out.end(), scale_less);
  return out;
}

// ---------------------------------------------------------------------------
// The verification sweep.
// ---------------------------------------------------------------------------

enum class ScaleOutcome : int8_t {
  kNoViolation,
  kViolation,
  kBoundReached,
  kResourceExhausted,
  kQueueOverflow,
  kSkippedTrivial,
};

inline const char* scale_outcome_name(ScaleOutcome o) {
  switch (o) {
    case ScaleOutcome::kNoViolation: return "NoViolation";
    case ScaleOutcome::kViolation: return "Violation";
    case ScaleOutcome::kBoundReached: return "BoundReached";
    case ScaleOutcome::kResourceExhausted: return "ResourceExhausted";
    case ScaleOutcome::kQueueOverflow: return "QueueOverflow";
    case ScaleOutcome::kSkippedTrivial: return "SkippedTrivial";
  }
  return "?";
}

struct ScaleResult {
  ScaleVector scale;
  ScaleOutcome outcome = ScaleOutcome::kNoViolation;
  Stats stats;
  std::vector<Violation> violations;
  Count queue_capacity_used = 0;
  std::string note;
};

struct ScalingReport {
  ConfidentSize confident_size;
  std::vector<ScaleResult> per_scale;
  std::optional<size_t> first_violation;  // index into per_scale
  int64_t total_cycles = 0;
  double wall_ms = 0;
  bool complete = false;  // swept every enumerated scale without a violation
};

struct ScalingOptions {
  std::optional<ConfidentSize> confident_size;
  std::optional<ScaleVector> pinned_scale;
  bool stop_at_first = true;
  bool per_intent_profiles = false;
  int64_t depth_bound = 200000;
  double time_budget_s = 0;
  std::optional<uint64_t> random_seed;
  bool exact_state_mode = false;
  bool check_invariants = false;
};

inline ConfidentSize resolve_confident_size(const ClusterSetup& setup,
                                            const ScalingOptions& options) {
  if (options.confident_size) return *options.confident_size;
  ConfidentSize conf;
  if (setup.options.conf_nodes) conf.n_conf = *setup.options.conf_nodes;
  if (setup.options.conf_theta) conf.theta_conf = *setup.options.conf_theta;
  return conf;
}

// Queue sizing ladder: the documented 4 -> 8 -> 16 escalation, scaled up
// when the topology cannot even be instantiated into a 4-slot queue.
inline std::vector<Count> queue_capacity_ladder(const ClusterSetup& setup, const ScaleVector& s) {
  Count initial = 0;
  for (size_t d = 0; d < setup.deployment_type_count(); ++d) {
    initial += initial_replicas(setup.objects.deployment_types[d], s.pod_counts[d]);
  }
  if (setup.options.queue_capacity) {
    Count q = std::max(*setup.options.queue_capacity, initial);
    return {q, q * 2, q * 4};
  }
  return {std::max<Count>(4, initial), std::max<Count>(8, initial * 2),
          std::max<Count>(16, initial * 4)};
}

// One cycle: verify a single scaled setup, escalating the queue capacity on
// overflow before giving up.
inline ScaleResult verify_one_scale(const ClusterSetup& setup, const ScaleVector& s,
                                    const ScalingOptions& options) {
  ScaleResult result;
  result.scale = s;

  std::vector<std::vector<IntentSpec>> intent_sets;
  if (options.per_intent_profiles && setup.control.intents.size() > 1) {
    for (const auto& in : setup.control.intents) intent_sets.push_back({in});
  } else {
    intent_sets.push_back(setup.control.intents);
  }

  for (Count capacity : queue_capacity_ladder(setup, s)) {
    result.queue_capacity_used = capacity;
    bool overflowed = false;
    ScaleResult attempt;
    attempt.scale = s;
    attempt.queue_capacity_used = capacity;
    attempt.outcome = ScaleOutcome::kNoViolation;
    for (const auto& intents : intent_sets) {
      Profile profile;
      profile.setup = &setup;
      profile.scale = s;
      profile.queue_capacity = capacity;
      profile.intents = intents;
      profile.stop_at_first = options.stop_at_first;
      profile.depth_bound = setup.options.depth_bound.value_or(options.depth_bound);
      profile.time_budget_s = options.time_budget_s;
      profile.random_seed = options.random_seed;
      profile.exact_state_mode = options.exact_state_mode;
      profile.check_invariants = options.check_invariants;

      Verdict v;
      try {
        v = explore(profile);
      } catch (const CapacityError& e) {
        attempt.outcome = ScaleOutcome::kSkippedTrivial;
        attempt.note = e.what();
        break;
      }
      attempt.stats.states_visited += v.stats.states_visited;
      attempt.stats.max_depth = std::max(attempt.stats.max_depth, v.stats.max_depth);
      attempt.stats.wall_ms += v.stats.wall_ms;
      if (v.outcome == Outcome::kQueueOverflow) {
        overflowed = true;
        break;
      }
      for (auto& viol : v.violations) attempt.violations.push_back(std::move(viol));
      if (v.outcome == Outcome::kViolation) {
        attempt.outcome = ScaleOutcome::kViolation;
        if (options.stop_at_first) break;
      } else if (v.outcome == Outcome::kBoundReached &&
                 attempt.outcome == ScaleOutcome::kNoViolation) {
        attempt.outcome = ScaleOutcome::kBoundReached;
      } else if (v.outcome == Outcome::kResourceExhausted &&
                 attempt.outcome == ScaleOutcome::kNoViolation) {
        attempt.outcome = ScaleOutcome::kResourceExhausted;
      }
    }
    if (!overflowed) {
      result = attempt;
      return result;
    }
  }
  result.outcome = ScaleOutcome::kQueueOverflow;
  result.note = "controller queue overflow persisted through capacity escalation";
  return result;
}

// The incremental scaling sweep: verify every non-trivial scale in order,
// stopping at the first violation when requested. A clean complete sweep is
// confidence up to the bound, not a proof.
inline ScalingReport run_scaling(const ClusterSetup& setup, const ScalingOptions& options) {
  auto t0 = std::chrono::steady_clock::now();
  ScalingReport report;
  report.confident_size = resolve_confident_size(setup, options);

  std::vector<ScaleVector> scales;
  if (options.pinned_scale) {
    scales.push_back(*options.pinned_scale);
  } else {
    scales = enumerate_scales(setup, report.confident_size);
  }

  bool violated = false;
  for (const auto& s : scales) {
    ScaleResult r = verify_one_scale(setup, s, options);
    report.total_cycles++;
    bool is_violation = r.outcome == ScaleOutcome::kViolation;
    report.per_scale.push_back(std::move(r));
    if (is_violation && !report.first_violation) {
      report.first_violation = report.per_scale.size() - 1;
      violated = true;
      if (options.stop_at_first) break;
    }
  }
  report.complete = !violated && !options.pinned_scale;
  for (const auto& r : report.per_scale) {
    if (r.outcome == ScaleOutcome::kBoundReached || r.outcome == ScaleOutcome::kResourceExhausted ||
        r.outcome == ScaleOutcome::kQueueOverflow) {
      report.complete = false;
    }
  }
  report.wall_ms =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() * 1000;
  return report;
}

// Runs the unbounded (hard-capped) workflow per case to find each case's
// minimum violating scale.
struct CalibrationInput {
  std::string case_id;
  const ClusterSetup* setup = nullptr;
};

struct CalibrationResult {
  ViolationLibrary library;
  std::vector<std::string> no_violation_cases;
};

inline CalibrationResult calibrate(const std::vector<CalibrationInput>& cases,
                                   const ScalingOptions& base_options, ConfidentSize hard_cap) {
  CalibrationResult result;
  for (const auto& c : cases) {
    ScalingOptions options = base_options;
    options.confident_size = hard_cap;
    options.stop_at_first = true;
    ScalingReport report = run_scaling(*c.setup, options);
    if (report.first_violation) {
      result.library.cases.push_back({c.case_id, report.per_scale[*report.first_violation].scale});
    } else {
      result.no_violation_cases.push_back(c.case_id);
    }
  }
  return result;
}

}  // namespace kivi

#endif  // KIVI_ORCHESTRATOR_HPP_
