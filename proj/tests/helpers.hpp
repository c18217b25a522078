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

#ifndef KIVI_TESTS_HELPERS_HPP_
#define KIVI_TESTS_HELPERS_HPP_

#include <memory>
#include <string>

#include "kivi/setup.hpp"
#include "kivi/state.hpp"

namespace kivi::test {

// Fluent builder for programmatic cluster setups in unit tests.
class SetupBuilder {
 public:
  SetupBuilder() {
    setup_ = std::make_shared<ClusterSetup>();
    setup_->hostname_key = setup_->symbols->intern("hostname");
  }

  SymbolId sym(const std::string& s) { return setup_->symbols->intern(s); }

  SetupBuilder& node_type(const std::string& name, Millicores capacity,
                          std::map<std::string, std::string> labels = {},
                          CountBounds bounds = {0, std::nullopt}) {
    NodeType nt;
    nt.name = sym(name);
    nt.tmpl.cpu_capacity = capacity;
    for (const auto& [k, v] : labels) nt.tmpl.labels[sym(k)] = sym(v);
    nt.count_bounds = bounds;
    setup_->objects.node_types.push_back(std::move(nt));
    return *this;
  }

  SetupBuilder& taint_last_node_type(const std::string& key, const std::string& value,
                                     TaintEffect effect) {
    setup_->objects.node_types.back().tmpl.taints.push_back({sym(key), sym(value), effect});
    return *this;
  }

  SetupBuilder& deployment(const std::string& name, Millicores request,
                           CountBounds bounds = {1, std::nullopt}) {
    DeploymentType dt;
    dt.name = sym(name);
    dt.tmpl.cpu_request = request;
    dt.count_bounds = bounds;
    setup_->objects.deployment_types.push_back(std::move(dt));
    return *this;
  }

  DeploymentType& last_deployment() { return setup_->objects.deployment_types.back(); }
  NodeType& last_node_type() { return setup_->objects.node_types.back(); }

  SetupBuilder& spread(const std::string& key, Count max_skew, WhenUnsatisfiable when) {
    last_deployment().scheduling.spread_constraints.push_back({sym(key), max_skew, when});
    return *this;
  }

  SetupBuilder& prefer(const std::string& key, const std::string& value, int32_t weight) {
    PreferredAffinity pa;
    pa.selector.requirements.push_back({sym(key), {sym(value)}});
    pa.weight = weight;
    last_deployment().scheduling.preferred_affinity.push_back(pa);
    return *this;
  }

  SetupBuilder& intent(CheckKind check, std::vector<int64_t> params = {}, int32_t target = 0) {
    IntentSpec in;
    in.check = check;
    in.params = std::move(params);
    in.target_deployment = target;
    setup_->control.intents.push_back(std::move(in));
    return *this;
  }

  SetupBuilder& event(EventSpec ev) {
    setup_->control.events.push_back(std::move(ev));
    return *this;
  }

  SetupBuilder& descheduler(uint8_t plugins, Tick interval = 60, bool include_soft = false) {
    setup_->control.descheduler.enabled_plugins = plugins;
    setup_->control.descheduler.interval = interval;
    setup_->control.descheduler.include_soft_constraints = include_soft;
    return *this;
  }

  SetupBuilder& faithful_bugs(bool on) {
    setup_->control.faithful_bugs = on;
    return *this;
  }

  std::shared_ptr<ClusterSetup> build() { return setup_; }

 private:
  std::shared_ptr<ClusterSetup> setup_;
};

// Runs queue-driven controllers to a fixpoint without any events or timed
// controllers. Handy for setting up mid-flight cluster states in tests.
void settle(GlobalState& g);

}  // namespace kivi::test

#endif  // KIVI_TESTS_HELPERS_HPP_
