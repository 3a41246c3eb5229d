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
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "trajforge/backend_spec.hpp"
#include "trajforge/core.hpp"

namespace trajforge {

TRAJFORGE_DEFINE_ERROR(MissingManifest);
TRAJFORGE_DEFINE_ERROR(MissingArtifact);

class ManifestParseError : public Error {
 public:
  ManifestParseError(std::size_t line, const std::string& what)
      : Error("bundle.manifest:" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr std::string_view kManifestName = "bundle.manifest";
inline constexpr std::string_view kExpectedOutputsArtifact = "tests.expected";

struct TaskSeed {
  std::string seed_id;
  Domain domain = Domain::Reference;
  std::string description;
  std::string expected_interface;
};

struct ResourceLimits {
  std::int64_t memory_budget = 0;
  std::int64_t step_limit = 0;
  std::int64_t wall_time_limit_ms = 0;

  friend bool operator==(const ResourceLimits&, const ResourceLimits&) = default;
};

// Immutable once loaded; shared across trajectory tasks.
struct EnvironmentBundle {
  std::string bundle_id;
  Domain domain = Domain::Reference;
  std::map<std::string, std::string> artifacts;  // relative path -> bytes
  std::string toolchain;
  ResourceLimits limits;
  std::string content_digest;

  friend bool operator==(const EnvironmentBundle&,
                         const EnvironmentBundle&) = default;
};

using BundlePtr = std::shared_ptr<const EnvironmentBundle>;

struct DomainInstructions {
  Domain domain;
  std::string instruction_text;
};

// SHA-256 over artifacts in lexicographic path order (path bytes, NUL,
// u64 big-endian content length, content), then the three limits as
// decimal text, each newline-terminated.
std::string compute_content_digest(
    const std::map<std::string, std::string>& artifacts,
    const ResourceLimits& limits);

// Relative, non-empty, no "..", no absolute root.
bool is_safe_artifact_path(std::string_view path);

EnvironmentBundle load_bundle(const std::filesystem::path& root);

std::string serialize_manifest(const EnvironmentBundle& bundle);

// Writes manifest and artifacts under root.
void write_bundle(const EnvironmentBundle& bundle,
                  const std::filesystem::path& root);

// Builds a bundle in memory and stamps its digest.
EnvironmentBundle make_bundle(std::string bundle_id, Domain domain,
                              std::string toolchain, ResourceLimits limits,
                              std::map<std::string, std::string> artifacts);

std::vector<std::string> validate_bundle(
    const EnvironmentBundle& bundle,
    const BackendRegistry& registry = BackendRegistry::shipped());

// Domain-specific generator instructions. Defaults are compiled in; a
// directory of <domain>.txt files overrides individual entries.
class PromptRouter {
 public:
  PromptRouter();
  static PromptRouter from_directory(const std::filesystem::path& dir);

  DomainInstructions route(Domain domain) const;
  DomainInstructions route(const EnvironmentBundle& bundle) const {
    return route(bundle.domain);
  }

 private:
  std::map<Domain, std::string> texts_;
};

DomainInstructions route_prompt(const EnvironmentBundle& bundle);

// Digest -> bundle lookup used wherever only a trajectory's digest is known.
class BundleIndex {
 public:
  void add(BundlePtr bundle);
  BundlePtr find(std::string_view digest) const;
  const EnvironmentBundle& at(std::string_view digest) const;
  std::size_t size() const { return by_digest_.size(); }

 private:
  std::map<std::string, BundlePtr, std::less<>> by_digest_;
};

}  // namespace trajforge

namespace trajforge {

// One line of a seed set file:
//   seed_id | domain | bundle_dir | expected_interface | description
// bundle_dir is resolved relative to the seed file.
struct SeedEntry {
  TaskSeed seed;
  std::filesystem::path bundle_dir;
};

std::vector<SeedEntry> load_seed_set(const std::filesystem::path& path);

}  // namespace trajforge
