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

#include <chrono>
#include <compare>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trajforge/core.hpp"
#include "trajforge/envstore.hpp"

namespace trajforge {

TRAJFORGE_DEFINE_ERROR(GeneratorUnavailable);
TRAJFORGE_DEFINE_ERROR(ScriptExhausted);

struct GeneratorTurnOutput {
  std::string reasoning;
  std::string code;

  friend bool operator==(const GeneratorTurnOutput&, const GeneratorTurnOutput&) = default;
};

struct HistoryEntry {
  std::string reasoning;
  std::string code;
  Observation observation;
};

struct GeneratorContext {
  DomainInstructions instructions;
  TaskSeed seed;
  std::vector<HistoryEntry> history;  // turns 0..k-1
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual GeneratorTurnOutput propose(const GeneratorContext& context) = 0;
};

// Hands out one independent generator per trajectory.
using GeneratorFactory = std::function<std::unique_ptr<Generator>()>;

// (seed_id, label of the previous turn or none, turn index).
struct PolicyKey {
  std::string seed_id;
  std::optional<OutcomeLabel> prior;
  std::size_t turn = 0;

  friend auto operator<=>(const PolicyKey&, const PolicyKey&) = default;
};

// Immutable once built; shared across generators.
class ScriptedPolicy {
 public:
  void add(PolicyKey key, GeneratorTurnOutput output);
  const GeneratorTurnOutput* find(const PolicyKey& key) const;
  std::size_t size() const { return table_.size(); }

  // Lines: seed_id | prior_label_or_- | turn_index | reasoning_file | code_file
  // File paths resolve relative to the policy file.
  static ScriptedPolicy load(const std::filesystem::path& path);

  // Writes the policy file plus one reasoning/code file per entry into dir.
  void save(const std::filesystem::path& dir, const std::string& file_name) const;

 private:
  std::map<PolicyKey, GeneratorTurnOutput> table_;
};

// Pure function of (seed_id, last label, turn index).
class ScriptedGenerator final : public Generator {
 public:
  explicit ScriptedGenerator(std::shared_ptr<const ScriptedPolicy> policy)
      : policy_(std::move(policy)) {}

  GeneratorTurnOutput propose(const GeneratorContext& context) override;

 private:
  std::shared_ptr<const ScriptedPolicy> policy_;
};

GeneratorFactory scripted_factory(std::shared_ptr<const ScriptedPolicy> policy);

// Chat-completion style client. The reply carries reasoning inside
// <think>...</think> (or a reasoning_content field) and code in the first
// fenced block.
struct RemoteGeneratorConfig {
  std::string url;    // generator.url, e.g. http://127.0.0.1:8000
  std::string token;  // generator.token / TRAJFORGE_GENERATOR_TOKEN
  std::string model = "default";
  std::chrono::milliseconds timeout{60000};
  int max_parse_retries = 2;
};

class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(RemoteGeneratorConfig config) : config_(std::move(config)) {}

  GeneratorTurnOutput propose(const GeneratorContext& context) override;

  // Exposed for tests.
  static std::string build_request(const GeneratorContext& context, const std::string& model);
  static std::optional<GeneratorTurnOutput> parse_reply(const std::string& body);

 private:
  RemoteGeneratorConfig config_;
};

GeneratorFactory remote_factory(RemoteGeneratorConfig config);

}  // namespace trajforge
