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

#include <map>
#include <set>
#include <string>
#include <vector>

#include "trajforge/backends.hpp"
#include "trajforge/core.hpp"
#include "trajforge/envstore.hpp"
#include "trajforge/generator.hpp"

namespace trajforge {

enum class TerminalStatus : std::uint8_t { Solved, Exhausted, Aborted };

std::string_view to_string(TerminalStatus t);
std::optional<TerminalStatus> parse_terminal(std::string_view s);

struct Turn {
  std::size_t index = 0;
  std::string reasoning;
  std::string code;
  Observation observation;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Trajectory {
  std::string trajectory_id;
  std::string seed_id;
  std::string bundle_digest;
  std::vector<Turn> turns;
  TerminalStatus terminal = TerminalStatus::Aborted;
  FeedbackSource feedback_source = FeedbackSource::RealExecution;

  bool solved() const { return terminal == TerminalStatus::Solved; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct LoopConfig {
  std::size_t max_correction_rounds = 4;  // K; at most K+1 turns
  std::set<OutcomeLabel> abort_on = {OutcomeLabel::BackendUnavailable};
};

std::string make_trajectory_id(std::string_view seed_id, std::string_view bundle_digest,
                               FeedbackSource source, std::string_view nonce);

// Violations of the trajectory invariants; empty when well-formed.
std::vector<std::string> check_trajectory(const Trajectory& t, const LoopConfig& config);

Trajectory synthesize_trajectory(const TaskSeed& seed, const EnvironmentBundle& bundle,
                                 Generator& gen, const ExecutionOracle& env,
                                 const LoopConfig& config, std::string_view nonce = "0",
                                 const PromptRouter* router = nullptr);

struct CampaignSeed {
  TaskSeed seed;
  BundlePtr bundle;
};

// One trajectory per seed, in seed order; at most `parallelism` trajectories
// run at once.
std::vector<Trajectory> run_campaign(const std::vector<CampaignSeed>& seeds,
                                     const GeneratorFactory& factory,
                                     const ExecutionOracle& env, const LoopConfig& config,
                                     std::size_t parallelism, std::string_view nonce = "0",
                                     const PromptRouter* router = nullptr);

}  // namespace trajforge
