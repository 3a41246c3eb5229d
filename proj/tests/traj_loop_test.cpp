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

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "trajforge/backends.hpp"
#include "trajforge/icwm.hpp"
#include "trajforge/synth.hpp"
#include "trajforge/traj_loop.hpp"

namespace trajforge {
namespace {

using testing::RecordingGenerator;
using testing::reference_bundle;
using testing::reference_seed;

const std::string kPass = "mem 2\nset 0 5\nout 0\n";
const std::string kBadOp = "mem 2\nfrob 0\n";

// Every observation is Backend_Unavailable.
class DeadOracle final : public ExecutionOracle {
 public:
  Observation evaluate(const EnvironmentBundle&, std::string_view) const override {
    Observation o;
    o.label = OutcomeLabel::BackendUnavailable;
    o.diagnostic = "backend offline";
    return o;
  }
  FeedbackSource feedback_source() const override { return FeedbackSource::RealExecution; }
};

TEST(Synthesize, ImmediatePass) {
  RealExecutor ex;
  RecordingGenerator gen({{"easy", kPass}});
  const auto t = synthesize_trajectory(reference_seed("s"), reference_bundle("b", 8, 100, "5\n"),
                                       gen, ex, {});
  ASSERT_EQ(t.turns.size(), 1u);
  EXPECT_EQ(t.terminal, TerminalStatus::Solved);
  EXPECT_EQ(t.feedback_source, FeedbackSource::RealExecution);
  EXPECT_TRUE(check_trajectory(t, {}).empty());
}

TEST(Synthesize, AlwaysFailingExhaustsAfterKPlusOne) {
  RealExecutor ex;
  RecordingGenerator gen(std::vector<GeneratorTurnOutput>(10, {"again", kBadOp}));
  LoopConfig cfg;
  cfg.max_correction_rounds = 4;
  const auto t = synthesize_trajectory(reference_seed("s"), reference_bundle("b", 8, 100, "5\n"),
                                       gen, ex, cfg);
  EXPECT_EQ(t.turns.size(), 5u);
  EXPECT_EQ(t.terminal, TerminalStatus::Exhausted);
  for (const auto& turn : t.turns) EXPECT_EQ(turn.observation.label, OutcomeLabel::CompilationError);
}

TEST(Synthesize, FaultThenFix) {
  RealExecutor ex;
  RecordingGenerator gen({{"use 16 cells", "mem 16\nset 0 5\nout 0\n"},
                          {"budget is 8, shrink", "mem 8\nset 0 5\nout 0\n"}});
  const auto t = synthesize_trajectory(reference_seed("s"), reference_bundle("b", 8, 100, "5\n"),
                                       gen, ex, {});
  ASSERT_EQ(t.turns.size(), 2u);
  EXPECT_EQ(t.turns[0].observation.label, OutcomeLabel::MemoryFault);
  EXPECT_EQ(t.turns[1].observation.label, OutcomeLabel::Pass);
  EXPECT_EQ(t.terminal, TerminalStatus::Solved);
}

TEST(Synthesize, HistoryFidelity) {
  RealExecutor ex;
  RecordingGenerator gen({{"a", kBadOp}, {"b", "mem 2\nout 0\n"}, {"c", "mem 99\n"}, {"d", kPass}});
  const auto t = synthesize_trajectory(reference_seed("s"), reference_bundle("b", 8, 100, "5\n"),
                                       gen, ex, {});
  ASSERT_EQ(t.turns.size(), 4u);
  ASSERT_EQ(gen.contexts.size(), 4u);
  for (std::size_t k = 0; k < gen.contexts.size(); ++k) {
    const auto& h = gen.contexts[k].history;
    ASSERT_EQ(h.size(), k);
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_EQ(h[j].code, t.turns[j].code);
      EXPECT_EQ(h[j].reasoning, t.turns[j].reasoning);
      EXPECT_EQ(h[j].observation, t.turns[j].observation);
    }
    EXPECT_EQ(gen.contexts[k].instructions.instruction_text,
              route_prompt(reference_bundle("b", 8, 100, "5\n")).instruction_text);
  }
}

TEST(Synthesize, BackendUnavailableAborts) {
  DeadOracle dead;
  RecordingGenerator gen(std::vector<GeneratorTurnOutput>(10, {"x", kPass}));
  const auto t = synthesize_trajectory(reference_seed("s"), reference_bundle("b", 8, 100, "5\n"),
                                       gen, dead, {});
  EXPECT_EQ(t.turns.size(), 1u);
  EXPECT_EQ(t.terminal, TerminalStatus::Aborted);
}

TEST(Synthesize, GeneratorFailureKeepsPartialTurns) {
  RealExecutor ex;
  RecordingGenerator gen({{"a", kBadOp}});  // throws on the second call
  const auto t = synthesize_trajectory(reference_seed("s"), reference_bundle("b", 8, 100, "5\n"),
                                       gen, ex, {});
  EXPECT_EQ(t.turns.size(), 1u);
  EXPECT_EQ(t.terminal, TerminalStatus::Aborted);
}

TEST(Synthesize, WorldModelTrajectoriesAreSimulated) {
  auto params = std::make_shared<const WorldModelParameters>(
      constant_label_parameters(OutcomeLabel::WrongOutput));
  WorldModelOracle wm(params);
  RecordingGenerator gen(std::vector<GeneratorTurnOutput>(10, {"x", kPass}));
  LoopConfig cfg;
  cfg.max_correction_rounds = 2;
  const auto t = synthesize_trajectory(reference_seed("s"), reference_bundle("b", 8, 100, "5\n"),
                                       gen, wm, cfg);
  EXPECT_EQ(t.feedback_source, FeedbackSource::WorldModel);
  EXPECT_EQ(t.turns.size(), 3u);
  for (const auto& turn : t.turns) EXPECT_EQ(turn.observation.source, ObservationSource::Simulated);
  EXPECT_TRUE(check_trajectory(t, cfg).empty());
}

TEST(TrajectoryId, DeterministicAndSourceSensitive) {
  const auto a = make_trajectory_id("s", "d", FeedbackSource::RealExecution, "0");
  EXPECT_EQ(a, make_trajectory_id("s", "d", FeedbackSource::RealExecution, "0"));
  EXPECT_NE(a, make_trajectory_id("s", "d", FeedbackSource::WorldModel, "0"));
  EXPECT_NE(a, make_trajectory_id("s", "d", FeedbackSource::RealExecution, "1"));
  // Length prefixes keep field boundaries unambiguous.
  EXPECT_NE(make_trajectory_id("ab", "c", FeedbackSource::RealExecution, "0"),
            make_trajectory_id("a", "bc", FeedbackSource::RealExecution, "0"));
  EXPECT_EQ(a.size(), 32u);
}

TEST(CheckTrajectory, FlagsViolations) {
  Trajectory t;
  t.trajectory_id = "x";
  t.terminal = TerminalStatus::Solved;
  Turn pass;
  pass.code = kPass;
  pass.observation.label = OutcomeLabel::Pass;
  t.turns = {pass, pass};
  t.turns[1].index = 1;
  EXPECT_FALSE(check_trajectory(t, {}).empty());
}

TEST(RunCampaign, OrderedAndParallelismInvariant) {
  const auto w = synth::make_workload("c", 40, 17);
  RealExecutor ex;
  const auto factory = scripted_factory(w.policy);
  const auto seq = run_campaign(w.campaign_seeds(), factory, ex, {}, 1);
  const auto par = run_campaign(w.campaign_seeds(), factory, ex, {}, 8);
  ASSERT_EQ(seq.size(), 40u);
  EXPECT_EQ(seq, par);
  for (std::size_t i = 0; i < seq.size(); ++i) EXPECT_EQ(seq[i].seed_id, w.tasks[i].seed.seed_id);
  EXPECT_TRUE(run_campaign({}, factory, ex, {}, 4).empty());
}

TEST(RunCampaign, AlwaysPassSeedsSolve) {
  auto policy = std::make_shared<ScriptedPolicy>();
  std::vector<CampaignSeed> seeds;
  for (int i = 0; i < 3; ++i) {
    const std::string id = "p" + std::to_string(i);
    policy->add({id, std::nullopt, 0}, {"r", kPass});
    seeds.push_back({reference_seed(id), testing::reference_bundle_ptr(id, 8, 100, "5\n")});
  }
  RealExecutor ex;
  for (const auto& t : run_campaign(seeds, scripted_factory(policy), ex, {}, 2))
    EXPECT_EQ(t.terminal, TerminalStatus::Solved);
}

// Randomized policies over several K values.
TEST(Properties, TerminationAndPassAtEnd) {
  RealExecutor ex;
  std::mt19937_64 rng(99);
  for (std::size_t k = 0; k <= 6; ++k) {
    synth::PolicyOptions opts;
    opts.max_rounds = k;
    opts.initial_pass_probability = 0.1;
    const auto w = synth::make_workload("k" + std::to_string(k), 30, rng(), opts);
    LoopConfig cfg;
    cfg.max_correction_rounds = k;
    for (const auto& t : run_campaign(w.campaign_seeds(), scripted_factory(w.policy), ex, cfg, 2)) {
      EXPECT_LE(t.turns.size(), k + 1);
      EXPECT_TRUE(check_trajectory(t, cfg).empty());
    }
  }
}

}  // namespace
}  // namespace trajforge
