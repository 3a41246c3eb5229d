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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trajforge/backend_spec.hpp"
#include "trajforge/core.hpp"
#include "trajforge/envstore.hpp"

namespace trajforge {

TRAJFORGE_DEFINE_ERROR(WorkspaceError);

// Anything that turns (bundle, candidate) into an observation: the real
// executor, the world model, or a passthrough wrapper. Must be safe for
// concurrent calls.
class ExecutionOracle {
 public:
  virtual ~ExecutionOracle() = default;
  virtual Observation evaluate(const EnvironmentBundle& bundle,
                               std::string_view code) const = 0;
  virtual FeedbackSource feedback_source() const = 0;
};

struct ExecutionJob {
  std::string job_id;
  BundlePtr bundle;
  std::string code;
};

// Label + diagnostic from raw tool output. The first rule (in rule order)
// matching any line wins and the diagnostic is that line plus up to three
// following lines.
std::pair<OutcomeLabel, std::string> parse_diagnostics(
    std::string_view raw_output, int exit_status, const BackendSpec& spec);

// Hermetic MiniLang execution under the bundle's limits.
Observation execute_reference(const EnvironmentBundle& bundle,
                              std::string_view code);

std::string_view candidate_extension(Domain d);

class RealExecutor final : public ExecutionOracle {
 public:
  struct Options {
    std::filesystem::path workspace_root;  // default: <tmp>/trajforge-ws
    std::chrono::milliseconds injected_latency{0};
    bool keep_workspaces = false;
    // Called with every workspace directory created, before invocation.
    std::function<void(const std::string& job_id,
                       const std::filesystem::path& workspace)>
        on_workspace;
  };

  RealExecutor();
  explicit RealExecutor(BackendRegistry registry);
  RealExecutor(BackendRegistry registry, Options options);

  Observation execute(const EnvironmentBundle& bundle, std::string_view code,
                      std::string_view job_id = {}) const;

  // Index-aligned with jobs; never more than `parallelism` executions in
  // flight. Per-job failures become Backend_Unavailable observations.
  std::vector<Observation> execute_batch(const std::vector<ExecutionJob>& jobs,
                                         std::size_t parallelism) const;

  Observation evaluate(const EnvironmentBundle& bundle,
                       std::string_view code) const override {
    return execute(bundle, code);
  }
  FeedbackSource feedback_source() const override {
    return FeedbackSource::RealExecution;
  }

  const BackendRegistry& registry() const { return registry_; }
  std::size_t max_in_flight() const { return max_in_flight_.load(); }
  std::size_t executions() const { return executions_.load(); }

 private:
  Observation execute_external(const EnvironmentBundle& bundle,
                               const BackendSpec& spec, std::string_view code,
                               std::string_view job_id) const;

  BackendRegistry registry_;
  Options options_;
  mutable std::atomic<std::size_t> in_flight_{0};
  mutable std::atomic<std::size_t> max_in_flight_{0};
  mutable std::atomic<std::size_t> executions_{0};
};

// Uses the shipped backend registry.
Observation execute(const EnvironmentBundle& bundle, std::string_view code);
std::vector<Observation> execute_batch(const std::vector<ExecutionJob>& jobs,
                                       std::size_t parallelism);

}  // namespace trajforge
