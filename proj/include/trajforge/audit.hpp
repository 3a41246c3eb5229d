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

#include <functional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trajforge/backends.hpp"
#include "trajforge/icwm.hpp"
#include "trajforge/traj_loop.hpp"

namespace trajforge {

TRAJFORGE_DEFINE_ERROR(EmptyEvaluationSet);
TRAJFORGE_DEFINE_ERROR(PairingError);
TRAJFORGE_DEFINE_ERROR(ContaminationError);

// (predicted, true). Labels only.
using ObservationPair = std::pair<Observation, Observation>;

double outcome_accuracy(std::span<const ObservationPair> pairs);

// (real, simulated) sharing seed and bundle.
using TrajectoryPair = std::pair<Trajectory, Trajectory>;

// Fraction of pairs whose verdict (terminal == Solved) coincides.
double trajectory_agreement(std::span<const TrajectoryPair> paired);

// Matches real and simulated trajectories on (seed_id, bundle_digest), in
// the order of `real`. Unmatched trajectories are dropped.
std::vector<TrajectoryPair> pair_trajectories(const std::vector<Trajectory>& real,
                                              const std::vector<Trajectory>& simulated);

struct FidelityRow {
  Domain domain = Domain::Reference;
  std::size_t held_out_turns = 0;
  double outcome_accuracy = 0.0;  // NaN when held_out_turns == 0
  std::size_t trajectory_pairs = 0;
  double trajectory_agreement = 0.0;  // NaN when trajectory_pairs == 0
  double gap_pp = 0.0;                // NaN unless both are defined
};

struct FidelityReport {
  std::vector<FidelityRow> rows;  // ordered by domain
  // Unweighted over rows where the metric is defined.
  double mean_outcome_accuracy = 0.0;
  double mean_trajectory_agreement = 0.0;
  double mean_gap_pp = 0.0;
};

using TurnPredictor = std::function<Observation(const TrainingTurn&)>;

// Throws ContaminationError when a held-out key is in training_keys.
FidelityReport run_fidelity_eval(const std::vector<TrainingTurn>& held_out,
                                 const TurnPredictor& predictor,
                                 const std::set<std::string>& training_keys,
                                 const std::vector<TrajectoryPair>& pairs,
                                 const BundleIndex& bundles);

FidelityReport run_fidelity_eval(const std::vector<TrainingTurn>& held_out,
                                 const WorldModelParameters& params,
                                 const std::vector<TrajectoryPair>& pairs,
                                 const BundleIndex& bundles);

// UTF-8 table for humans.
std::string render_fidelity_table(const FidelityReport& report);
// Header row, one row per domain, then a mean row; tab-separated.
std::string render_fidelity_tsv(const FidelityReport& report);

// Deterministic split: held-out turns are drawn uniformly by key, so no
// (bundle, code) key lands on both sides. Returns (training, held_out).
std::pair<std::vector<TrainingTurn>, std::vector<TrainingTurn>> split_held_out(
    const std::vector<TrainingTurn>& turns, std::size_t held_out_count, std::uint64_t seed);

struct TurnRef {
  std::string trajectory_id;
  std::size_t turn_index = 0;

  friend bool operator==(const TurnRef&, const TurnRef&) = default;
};

struct AuditFinding {
  TurnRef turn;
  OutcomeLabel predicted_label;
  OutcomeLabel true_label;
  TrainingTurn corrected;

  friend bool operator==(const AuditFinding&, const AuditFinding&) = default;
};

struct AuditResult {
  std::vector<AuditFinding> findings;
  std::vector<TrainingTurn> corrected_turns;
  std::vector<TurnRef> sampled;
  std::vector<TurnRef> unverifiable;
  // Real re-execution results of the sampled turns that could be verified.
  std::vector<TrainingTurn> verified_turns;
};

// Re-executes a deterministic sample (seeded by nonce) of the simulated turns
// on the real executor. Mismatches become findings.
AuditResult audit_round(const std::vector<Trajectory>& amplified, const ExecutionOracle& executor,
                        const BundleIndex& bundles, double sample_fraction,
                        std::string_view nonce, std::size_t parallelism = 1);

std::uint64_t seed_from_nonce(std::string_view nonce);

}  // namespace trajforge
