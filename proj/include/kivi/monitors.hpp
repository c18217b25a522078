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

#ifndef KIVI_MONITORS_HPP_
#define KIVI_MONITORS_HPP_

#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kivi/controllers.hpp"
#include "kivi/state.hpp"

namespace kivi {

struct ViolationInfo {
  CheckKind check = CheckKind::kExpReplicas;
  int32_t target = 0;
  std::string message;
  std::vector<int32_t> objects;
  size_t step = 0;
};

// Stateful property monitors. Balance, placement and min-replica checks
// evaluate only in controller-quiescent states to avoid flagging transient
// reconciliation; count/lifecycle checks evaluate after every step.
// Monitors read the cluster state and write only their private words.
class MonitorSet {
 public:
  void build(const std::vector<IntentSpec>& intents, GlobalState& g) {
    intents_ = intents;
    word_base_.clear();
    size_t words = 0;
    for (const auto& in : intents_) {
      word_base_.push_back(words);
      if (in.check == CheckKind::kOscillation) words += 4;  // lastE, lastD, lastKind, pairs
    }
    g.mut.monitor_words.assign(words, 0);
  }

  // `terminal` marks a quiescent state no process will ever leave.
  std::optional<ViolationInfo> check(World& w, size_t step, bool controller_quiescent,
                                     bool terminal) {
    const GlobalState& g = w.state();
    for (size_t i = 0; i < intents_.size(); ++i) {
      const IntentSpec& in = intents_[i];
      std::optional<ViolationInfo> v;
      switch (in.check) {
        case CheckKind::kBalanceNode:
          if (controller_quiescent) v = check_balance(g, in);
          break;
        case CheckKind::kExpReplicas:
          if (controller_quiescent) v = check_exp_replicas(g, in);
          break;
        case CheckKind::kMaxReplicas:
          v = check_max_replicas(g, in);
          break;
        case CheckKind::kOscillation:
          v = check_oscillation(w, in, word_base_[i]);
          break;
        case CheckKind::kNoPendingBeyond:
          v = check_no_pending(g, in, terminal);
          break;
        case CheckKind::kNoFailedPods:
          v = check_no_failed(g, in);
          break;
        case CheckKind::kPlacement:
          if (controller_quiescent) v = check_placement(g, in);
          break;
      }
      if (v) {
        v->step = step;
        return v;
      }
    }
    return std::nullopt;
  }

  const std::vector<IntentSpec>& intents() const { return intents_; }

 private:
  static ViolationInfo make(const IntentSpec& in, std::string msg, std::vector<int32_t> objs = {}) {
    ViolationInfo v;
    v.check = in.check;
    v.target = in.target_deployment;
    v.message = std::move(msg);
    v.objects = std::move(objs);
    return v;
  }

  static std::optional<ViolationInfo> check_balance(const GlobalState& g, const IntentSpec& in) {
    Count k = static_cast<Count>(in.params.at(0));
    Count mx = 0, mn = std::numeric_limits<Count>::max();
    std::vector<int32_t> ready_nodes;
    for (NodeId n = 0; n < static_cast<NodeId>(g.mut.nodes.size()); ++n) {
      if (g.mut.nodes[static_cast<size_t>(n)].status != NodeStatus::kReady) continue;
      Count c = 0;
      for (const auto& pd : g.mut.pods) {
        if (pd.type == in.target_deployment && pd.bound_node == n && pod_placed(pd.status)) c++;
      }
      ready_nodes.push_back(n);
      mx = std::max(mx, c);
      mn = std::min(mn, c);
    }
    if (ready_nodes.size() < 2) return std::nullopt;
    if (mx - mn > k) {
      std::ostringstream os;
      os << "pod counts per ready node skew " << (mx - mn) << " > " << k;
      return make(in, os.str(), ready_nodes);
    }
    return std::nullopt;
  }

  static std::optional<ViolationInfo> check_exp_replicas(const GlobalState& g, const IntentSpec& in) {
    Count k = static_cast<Count>(in.params.at(0));
    Count running = 0;
    for (const auto& pd : g.mut.pods) {
      if (pd.type == in.target_deployment && pd.status == PodStatus::kRunning) running++;
    }
    if (running < k) {
      return make(in, "running replicas " + std::to_string(running) + " < expected " +
                          std::to_string(k));
    }
    return std::nullopt;
  }

  static std::optional<ViolationInfo> check_max_replicas(const GlobalState& g, const IntentSpec& in) {
    Count k = static_cast<Count>(in.params.at(0));
    Count live = 0;
    for (const auto& pd : g.mut.pods) {
      if (pd.type == in.target_deployment && pod_live(pd.status)) live++;
    }
    if (live > k) {
      return make(in, "live replicas " + std::to_string(live) + " > allowed " + std::to_string(k));
    }
    return std::nullopt;
  }

  // Eviction and deploy flags of the target deployment alternating n times in
  // a row; repeated flags of the same kind extend the current turn.
  std::optional<ViolationInfo> check_oscillation(World& w, const IntentSpec& in, size_t base) {
    const GlobalState& g = w.state();
    int64_t n = in.params.empty() ? 3 : in.params.at(0);
    const DeploymentDyn& dd = g.mut.deployments[static_cast<size_t>(in.target_deployment)];
    const auto& words = g.mut.monitor_words;
    int64_t last_e = words[base], last_d = words[base + 1];
    int64_t last_kind = words[base + 2], pairs = words[base + 3];

    bool evicted = dd.evict_count > last_e;
    bool deployed = dd.deploy_count > last_d;
    if (evicted) {
      w.set_monitor_word(base, dd.evict_count);
      if (last_kind != 1) {
        last_kind = 1;
        w.set_monitor_word(base + 2, last_kind);
      }
    }
    if (deployed) {
      w.set_monitor_word(base + 1, dd.deploy_count);
      if (last_kind == 1) {
        pairs += 1;
        w.set_monitor_word(base + 3, pairs);
      }
      last_kind = 2;
      w.set_monitor_word(base + 2, last_kind);
    }
    if (pairs >= n) {
      return make(in, "evict/deploy flags alternated " + std::to_string(pairs) +
                          " times (threshold " + std::to_string(n) + ")");
    }
    return std::nullopt;
  }

  static std::optional<ViolationInfo> check_no_pending(const GlobalState& g, const IntentSpec& in,
                                                       bool terminal) {
    Tick d = in.params.at(0);
    for (PodId p = 0; p < static_cast<PodId>(g.mut.pods.size()); ++p) {
      const PodDyn& pd = g.mut.pods[static_cast<size_t>(p)];
      if (pd.type != in.target_deployment || pd.status != PodStatus::kPending) continue;
      Tick waited = g.mut.now - pd.created_at;
      if (waited > d) {
        return make(in, "pod pending for " + std::to_string(waited) + " > " + std::to_string(d) +
                            " ticks", {p});
      }
      if (terminal) {
        return make(in, "pod pending forever (quiescent state with no remaining events)", {p});
      }
    }
    return std::nullopt;
  }

  static std::optional<ViolationInfo> check_no_failed(const GlobalState& g, const IntentSpec& in) {
    for (PodId p = 0; p < static_cast<PodId>(g.mut.pods.size()); ++p) {
      const PodDyn& pd = g.mut.pods[static_cast<size_t>(p)];
      if (pd.type == in.target_deployment && pd.status == PodStatus::kFailed) {
        return make(in, "pod reached Failed state", {p});
      }
    }
    return std::nullopt;
  }

  static std::optional<ViolationInfo> check_placement(const GlobalState& g, const IntentSpec& in) {
    for (PodId p = 0; p < static_cast<PodId>(g.mut.pods.size()); ++p) {
      const PodDyn& pd = g.mut.pods[static_cast<size_t>(p)];
      if (pd.type != in.target_deployment || !pod_placed(pd.status)) continue;
      const auto& labels = g.stable.nodes[static_cast<size_t>(pd.bound_node)].labels;
      auto it = labels.find(in.selector_key);
      if (it == labels.end() || it->second != in.selector_value) {
        return make(in, "pod placed on node not matching selector", {p, pd.bound_node});
      }
    }
    return std::nullopt;
  }

  std::vector<IntentSpec> intents_;
  std::vector<size_t> word_base_;
};

}  // namespace kivi

#endif  // KIVI_MONITORS_HPP_
