// Copyright 2026 The TrajForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "trajforge/envstore.hpp"
#include "trajforge/generator.hpp"
#include "trajforge/traj_loop.hpp"

// Randomized reference-domain workloads: "add two constants" tasks and
// MiniLang candidates carrying one known defect each. Used for demos,
// fixtures and the desk-scale fidelity protocol.
namespace trajforge::synth {

enum class Defect : std::uint8_t {
  None,        // correct program
  OverBudget,  // mem N with N > budget
  IndexOut,    // a cell index >= declared memory
  UnknownOp,   // add replaced by an unknown mnemonic
  Loop,        // self-jump that never terminates
  WrongOp,     // sub instead of add
  NoOutput,    // missing out
};

inline constexpr std::size_t kNumDefects = 7;

struct ReferenceTask {
  TaskSeed seed;
  BundlePtr bundle;
  std::int64_t lhs = 0;
  std::int64_t rhs = 0;
};

ReferenceTask make_task(const std::string& seed_id, std::mt19937_64& rng);

// Bundle for "output lhs + rhs" with the given limits.
EnvironmentBundle make_add_bundle(const std::string& bundle_id, std::int64_t lhs,
                                  std::int64_t rhs, std::int64_t memory_budget,
                                  std::int64_t step_limit = 64);

std::string make_candidate(const ReferenceTask& task, Defect defect, std::mt19937_64& rng);

Defect draw_defect(std::mt19937_64& rng, double pass_probability);

std::string make_reasoning(const ReferenceTask& task, std::size_t turn,
                           std::optional<OutcomeLabel> prior, std::mt19937_64& rng);

struct PolicyOptions {
  std::size_t max_rounds = 4;
  double initial_pass_probability = 0.3;
  double pass_probability_step = 0.15;
};

// Entries for every (turn, prior label) combination so the policy never
// runs dry under any feedback source.
void add_random_policy(ScriptedPolicy& policy, const ReferenceTask& task,
                       const PolicyOptions& options, std::mt19937_64& rng);

struct Workload {
  std::vector<ReferenceTask> tasks;
  std::shared_ptr<ScriptedPolicy> policy;

  std::vector<CampaignSeed> campaign_seeds() const;
  BundleIndex bundle_index() const;
};

Workload make_workload(const std::string& id_prefix, std::size_t count, std::uint64_t seed,
                       const PolicyOptions& options = {});

}  // namespace trajforge::synth
