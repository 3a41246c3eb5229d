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

#include <algorithm>
#include <array>
#include <sstream>

#include "trajforge/synth.hpp"

namespace trajforge::synth {

namespace {

std::int64_t uniform(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

constexpr std::array<const char*, 5> kUnknownOps = {"mul", "mov", "addi", "frob", "plus"};

}  // namespace

EnvironmentBundle make_add_bundle(const std::string& bundle_id, std::int64_t lhs,
                                  std::int64_t rhs, std::int64_t memory_budget,
                                  std::int64_t step_limit) {
  std::map<std::string, std::string> artifacts;
  artifacts["tests.expected"] = std::to_string(lhs + rhs) + "\n";
  artifacts["task.txt"] = "Output the sum of " + std::to_string(lhs) + " and " +
                          std::to_string(rhs) + ".\n";
  return make_bundle(bundle_id, Domain::Reference, std::string(kReferenceBackend),
                     {memory_budget, step_limit, 2000}, std::move(artifacts));
}

ReferenceTask make_task(const std::string& seed_id, std::mt19937_64& rng) {
  ReferenceTask t;
  t.lhs = uniform(rng, 1, 60);
  t.rhs = uniform(rng, 1, 60);
  const auto budget = uniform(rng, 4, 12);
  t.bundle = std::make_shared<const EnvironmentBundle>(
      make_add_bundle(seed_id + "-bundle", t.lhs, t.rhs, budget));
  t.seed.seed_id = seed_id;
  t.seed.domain = Domain::Reference;
  t.seed.description = "Write a MiniLang program that outputs " + std::to_string(t.lhs) + " + " +
                       std::to_string(t.rhs) + ".";
  t.seed.expected_interface = "one out line emitting the sum";
  return t;
}

Defect draw_defect(std::mt19937_64& rng, double pass_probability) {
  if (unit(rng) < pass_probability) return Defect::None;
  return static_cast<Defect>(1 + rng() % (kNumDefects - 1));
}

std::string make_candidate(const ReferenceTask& task, Defect defect, std::mt19937_64& rng) {
  const auto budget = task.bundle->limits.memory_budget;
  std::int64_t mem = uniform(rng, 4, budget);
  if (defect == Defect::OverBudget) mem = budget + uniform(rng, 1, 8);

  // Four distinct cells: two operands, the result, a loop flag.
  std::array<std::int64_t, 4> cells{};
  std::vector<std::int64_t> pool;
  for (std::int64_t i = 0; i < std::min<std::int64_t>(mem, budget); ++i) pool.push_back(i);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto j = i + rng() % (pool.size() - i);
    std::swap(pool[i], pool[j]);
    cells[i] = pool[i];
  }
  if (defect == Defect::IndexOut) cells[2] = mem + uniform(rng, 0, 5);

  const char* op = "add";
  if (defect == Defect::WrongOp) op = "sub";
  if (defect == Defect::UnknownOp) op = kUnknownOps[rng() % kUnknownOps.size()];

  std::vector<std::string> lines;
  lines.push_back("mem " + std::to_string(mem));
  lines.push_back("set " + std::to_string(cells[0]) + " " + std::to_string(task.lhs));
  lines.push_back("set " + std::to_string(cells[1]) + " " + std::to_string(task.rhs));
  lines.push_back(std::string(op) + " " + std::to_string(cells[0]) + " " +
                  std::to_string(cells[1]) + " " + std::to_string(cells[2]));
  if (defect == Defect::Loop) {
    lines.push_back("set " + std::to_string(cells[3]) + " 1");
    const auto self = lines.size() + 1;
    lines.push_back("jnz " + std::to_string(cells[3]) + " " + std::to_string(self));
  }
  if (defect != Defect::NoOutput) lines.push_back("out " + std::to_string(cells[2]));

  std::string code;
  for (const auto& l : lines) code += l + "\n";
  return code;
}

std::string make_reasoning(const ReferenceTask& task, std::size_t turn,
                           std::optional<OutcomeLabel> prior, std::mt19937_64& rng) {
  std::ostringstream out;
  out << "The task asks for " << task.lhs << " + " << task.rhs << " with a memory budget of "
      << task.bundle->limits.memory_budget << " cells.";
  if (prior) {
    out << " Attempt " << turn << " follows a " << to_string(*prior) << " result.";
    switch (*prior) {
      case OutcomeLabel::MemoryFault:
        out << " The declaration or a cell index exceeded the available memory, so the cell "
               "layout has to shrink.";
        break;
      case OutcomeLabel::CompilationError:
        out << " The interpreter rejected an instruction; only set, add, sub, jnz and out exist.";
        break;
      case OutcomeLabel::Timeout:
        out << " The program never halted, so the jump must go.";
        break;
      case OutcomeLabel::WrongOutput:
        out << " The emitted value was wrong; the operation or the output line is suspect.";
        break;
      default:
        break;
    }
  }
  const auto extra = uniform(rng, 0, 6);
  for (std::int64_t i = 0; i < extra; ++i)
    out << " Check step " << i + 1 << ": verify every operand cell stays below the declaration.";
  return out.str();
}

void add_random_policy(ScriptedPolicy& policy, const ReferenceTask& task,
                       const PolicyOptions& options, std::mt19937_64& rng) {
  for (std::size_t turn = 0; turn <= options.max_rounds; ++turn) {
    const double p = std::min(1.0, options.initial_pass_probability +
                                       options.pass_probability_step * static_cast<double>(turn));
    std::vector<std::optional<OutcomeLabel>> priors;
    if (turn == 0)
      priors.push_back(std::nullopt);
    else
      for (auto l : kAllLabels) priors.emplace_back(l);
    for (const auto& prior : priors) {
      GeneratorTurnOutput out;
      out.reasoning = make_reasoning(task, turn, prior, rng);
      out.code = make_candidate(task, draw_defect(rng, p), rng);
      policy.add({task.seed.seed_id, prior, turn}, std::move(out));
    }
  }
}

std::vector<CampaignSeed> Workload::campaign_seeds() const {
  std::vector<CampaignSeed> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) out.push_back({t.seed, t.bundle});
  return out;
}

BundleIndex Workload::bundle_index() const {
  BundleIndex index;
  for (const auto& t : tasks) index.add(t.bundle);
  return index;
}

Workload make_workload(const std::string& id_prefix, std::size_t count, std::uint64_t seed,
                       const PolicyOptions& options) {
  std::mt19937_64 rng(seed);
  Workload w;
  w.policy = std::make_shared<ScriptedPolicy>();
  for (std::size_t i = 0; i < count; ++i) {
    w.tasks.push_back(make_task(id_prefix + std::to_string(i), rng));
    add_random_policy(*w.policy, w.tasks.back(), options, rng);
  }
  return w;
}

}  // namespace trajforge::synth
