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

#include "trajforge/traj_loop.hpp"

#include "trajforge/util.hpp"
#include "trajforge/worker_pool.hpp"

namespace trajforge {

std::string_view to_string(TerminalStatus t) {
  switch (t) {
    case TerminalStatus::Solved: return "Solved";
    case TerminalStatus::Exhausted: return "Exhausted";
    case TerminalStatus::Aborted: return "Aborted";
  }
  return "Aborted";
}

std::optional<TerminalStatus> parse_terminal(std::string_view s) {
  if (s == "Solved") return TerminalStatus::Solved;
  if (s == "Exhausted") return TerminalStatus::Exhausted;
  if (s == "Aborted") return TerminalStatus::Aborted;
  return std::nullopt;
}

std::string make_trajectory_id(std::string_view seed_id, std::string_view bundle_digest,
                               FeedbackSource source, std::string_view nonce) {
  Sha256 h;
  for (std::string_view part : {seed_id, bundle_digest, to_string(source), nonce}) {
    h.update_u64_be(part.size());
    h.update(part);
  }
  return h.hex_digest().substr(0, 32);
}

std::vector<std::string> check_trajectory(const Trajectory& t, const LoopConfig& config) {
  std::vector<std::string> v;
  // An abort before the first candidate leaves no turns.
  if (t.turns.empty() && t.terminal != TerminalStatus::Aborted)
    v.push_back("non-aborted trajectory has no turns");
  if (t.turns.size() > config.max_correction_rounds + 1)
    v.push_back("more than K+1 turns");
  const auto want = t.feedback_source == FeedbackSource::WorldModel ? ObservationSource::Simulated
                                                                    : ObservationSource::Real;
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    const auto& turn = t.turns[i];
    if (turn.index != i) v.push_back("turn index mismatch at " + std::to_string(i));
    if (turn.observation.source != want)
      v.push_back("observation source differs from feedback source at " + std::to_string(i));
    const bool pass = turn.observation.label == OutcomeLabel::Pass;
    if (pass && i + 1 != t.turns.size()) v.push_back("Pass before final turn");
  }
  const bool last_pass =
      !t.turns.empty() && t.turns.back().observation.label == OutcomeLabel::Pass;
  if (last_pass != (t.terminal == TerminalStatus::Solved))
    v.push_back("terminal=Solved iff final label is Pass violated");
  return v;
}

Trajectory synthesize_trajectory(const TaskSeed& seed, const EnvironmentBundle& bundle,
                                 Generator& gen, const ExecutionOracle& env,
                                 const LoopConfig& config, std::string_view nonce,
                                 const PromptRouter* router) {
  Trajectory t;
  t.seed_id = seed.seed_id;
  t.bundle_digest = bundle.content_digest;
  t.feedback_source = env.feedback_source();
  t.trajectory_id = make_trajectory_id(seed.seed_id, bundle.content_digest, t.feedback_source, nonce);
  const auto expected_source = t.feedback_source == FeedbackSource::WorldModel
                                   ? ObservationSource::Simulated
                                   : ObservationSource::Real;

  GeneratorContext ctx;
  ctx.instructions = router ? router->route(bundle) : route_prompt(bundle);
  ctx.seed = seed;

  for (std::size_t k = 0; k <= config.max_correction_rounds; ++k) {
    GeneratorTurnOutput proposal;
    try {
      proposal = gen.propose(ctx);
    } catch (const GeneratorUnavailable&) {
      t.terminal = TerminalStatus::Aborted;
      return t;
    } catch (const ScriptExhausted&) {
      t.terminal = TerminalStatus::Aborted;
      return t;
    }
    Observation obs = env.evaluate(bundle, proposal.code);
    if (obs.source != expected_source)
      throw std::logic_error("environment returned an observation from the wrong source");

    t.turns.push_back(Turn{k, proposal.reasoning, proposal.code, obs});
    if (obs.label == OutcomeLabel::Pass) {
      t.terminal = TerminalStatus::Solved;
      return t;
    }
    if (config.abort_on.count(obs.label)) {
      t.terminal = TerminalStatus::Aborted;
      return t;
    }
    ctx.history.push_back({std::move(proposal.reasoning), std::move(proposal.code), std::move(obs)});
  }
  t.terminal = TerminalStatus::Exhausted;
  return t;
}

std::vector<Trajectory> run_campaign(const std::vector<CampaignSeed>& seeds,
                                     const GeneratorFactory& factory,
                                     const ExecutionOracle& env, const LoopConfig& config,
                                     std::size_t parallelism, std::string_view nonce,
                                     const PromptRouter* router) {
  for (const auto& s : seeds)
    if (!s.bundle) throw std::invalid_argument("seed '" + s.seed.seed_id + "' has no bundle");
  return parallel_map<Trajectory>(seeds.size(), parallelism, [&](std::size_t i) {
    auto gen = factory();
    return synthesize_trajectory(seeds[i].seed, *seeds[i].bundle, *gen, env, config, nonce,
                                 router);
  });
}

}  // namespace trajforge
