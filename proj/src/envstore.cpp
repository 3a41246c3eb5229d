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

#include "trajforge/envstore.hpp"

#include <set>
#include <sstream>

#include "trajforge/util.hpp"

namespace trajforge {

namespace fs = std::filesystem;

std::string compute_content_digest(
    const std::map<std::string, std::string>& artifacts,
    const ResourceLimits& limits) {
  Sha256 h;
  // std::map iterates in lexicographic byte order.
  for (const auto& [path, content] : artifacts) {
    h.update(path);
    h.update(std::string_view("\0", 1));
    h.update_u64_be(content.size());
    h.update(content);
  }
  h.update(std::to_string(limits.memory_budget) + "\n");
  h.update(std::to_string(limits.step_limit) + "\n");
  h.update(std::to_string(limits.wall_time_limit_ms) + "\n");
  return h.hex_digest();
}

bool is_safe_artifact_path(std::string_view path) {
  if (path.empty() || path.front() == '/' || path.front() == '\\') return false;
  if (path.find('\0') != std::string_view::npos) return false;
  fs::path p{std::string(path)};
  if (p.has_root_name() || p.has_root_directory()) return false;
  for (const auto& part : p)
    if (part == "..") return false;
  return path != kManifestName;
}

EnvironmentBundle load_bundle(const fs::path& root) {
  const fs::path manifest_path = root / kManifestName;
  if (!fs::is_regular_file(manifest_path))
    throw MissingManifest("no " + std::string(kManifestName) + " in " +
                          root.string());
  const std::string text = read_file(manifest_path);

  EnvironmentBundle b;
  std::map<std::string, std::size_t> seen;
  std::vector<std::string> artifact_paths;
  std::set<std::string> artifact_set;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ManifestParseError(lineno, "expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key == "artifact") {
      if (!is_safe_artifact_path(value))
        throw MissingArtifact("artifact path '" + value +
                              "' escapes the bundle root (line " +
                              std::to_string(lineno) + ")");
      if (!artifact_set.insert(value).second)
        throw ManifestParseError(lineno, "duplicate artifact '" + value + "'");
      artifact_paths.push_back(value);
      continue;
    }
    if (seen.count(key))
      throw ManifestParseError(lineno, "duplicate key '" + key + "'");
    seen[key] = lineno;
    auto as_int = [&]() -> std::int64_t {
      try {
        return parse_int(value);
      } catch (const ParseError&) {
        throw ManifestParseError(lineno, "'" + key + "' is not an integer");
      }
    };
    if (key == "bundle_id") {
      b.bundle_id = value;
    } else if (key == "domain") {
      auto d = parse_domain(value);
      if (!d) throw ManifestParseError(lineno, "unknown domain '" + value + "'");
      b.domain = *d;
    } else if (key == "toolchain") {
      b.toolchain = value;
    } else if (key == "memory_budget") {
      b.limits.memory_budget = as_int();
    } else if (key == "step_limit") {
      b.limits.step_limit = as_int();
    } else if (key == "wall_time_ms") {
      b.limits.wall_time_limit_ms = as_int();
    } else {
      throw ManifestParseError(lineno, "unknown key '" + key + "'");
    }
  }
  for (const char* required : {"bundle_id", "domain", "toolchain",
                               "memory_budget", "step_limit", "wall_time_ms"}) {
    if (!seen.count(required))
      throw ManifestParseError(lines.size(),
                               std::string("missing required key '") +
                                   required + "'");
  }
  for (const auto& rel : artifact_paths) {
    const fs::path p = root / rel;
    if (!fs::is_regular_file(p))
      throw MissingArtifact("missing artifact '" + rel + "'");
    b.artifacts.emplace(rel, read_file(p));
  }
  b.content_digest = compute_content_digest(b.artifacts, b.limits);
  return b;
}

std::string serialize_manifest(const EnvironmentBundle& b) {
  std::ostringstream out;
  out << "bundle_id = " << b.bundle_id << "\n"
      << "domain = " << to_string(b.domain) << "\n"
      << "toolchain = " << b.toolchain << "\n"
      << "memory_budget = " << b.limits.memory_budget << "\n"
      << "step_limit = " << b.limits.step_limit << "\n"
      << "wall_time_ms = " << b.limits.wall_time_limit_ms << "\n";
  for (const auto& [path, _] : b.artifacts) out << "artifact = " << path << "\n";
  return out.str();
}

void write_bundle(const EnvironmentBundle& b, const fs::path& root) {
  fs::create_directories(root);
  for (const auto& [path, content] : b.artifacts) {
    if (!is_safe_artifact_path(path))
      throw MissingArtifact("refusing to write unsafe artifact path '" + path + "'");
    write_file_atomic(root / path, content);
  }
  write_file_atomic(root / kManifestName, serialize_manifest(b));
}

EnvironmentBundle make_bundle(std::string bundle_id, Domain domain,
                              std::string toolchain, ResourceLimits limits,
                              std::map<std::string, std::string> artifacts) {
  EnvironmentBundle b;
  b.bundle_id = std::move(bundle_id);
  b.domain = domain;
  b.toolchain = std::move(toolchain);
  b.limits = limits;
  b.artifacts = std::move(artifacts);
  b.content_digest = compute_content_digest(b.artifacts, b.limits);
  return b;
}

std::vector<std::string> validate_bundle(const EnvironmentBundle& b,
                                         const BackendRegistry& registry) {
  std::vector<std::string> v;
  if (b.bundle_id.empty()) v.push_back("bundle_id: must be non-empty");
  for (const auto& [path, _] : b.artifacts)
    if (!is_safe_artifact_path(path))
      v.push_back("artifacts: path '" + path + "' is not a safe relative path");
  auto check_limit = [&](const char* name, std::int64_t value) {
    if (value <= 0)
      v.push_back(std::string("resource_limits: ") + name +
                  " must be positive, got " + std::to_string(value));
  };
  check_limit("memory_budget", b.limits.memory_budget);
  check_limit("step_limit", b.limits.step_limit);
  check_limit("wall_time_ms", b.limits.wall_time_limit_ms);
  if (b.content_digest != compute_content_digest(b.artifacts, b.limits))
    v.push_back("content_digest: does not match artifacts and limits");

  const BackendSpec* spec = registry.find(b.toolchain);
  if (!spec) {
    v.push_back("toolchain: unknown backend '" + b.toolchain + "'");
  } else if (!spec->supports(b.domain)) {
    v.push_back("domain/toolchain mismatch: backend '" + spec->name +
                "' does not support domain " + std::string(to_string(b.domain)));
  }

  if (b.domain == Domain::Reference) {
    auto it = b.artifacts.find(std::string(kExpectedOutputsArtifact));
    if (it == b.artifacts.end()) {
      v.push_back("artifacts: reference bundle lacks tests.expected");
    } else {
      const auto lines = split_lines(it->second);
      for (std::size_t i = 0; i < lines.size(); ++i) {
        auto t = trim(lines[i]);
        if (t.empty()) continue;
        try {
          parse_int(t);
        } catch (const ParseError&) {
          v.push_back("artifacts: tests.expected line " + std::to_string(i + 1) +
                      " is not an integer");
        }
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------------------

PromptRouter::PromptRouter() {
  texts_[Domain::GpuKernel] =
      "You are writing a GPU kernel. Before emitting code, reason about warp "
      "divergence and shared memory budgets per SM, the thread-block shape, "
      "and global-memory coalescing. When a previous attempt failed, read the "
      "compiler or profiler diagnostic and state which resource was "
      "exceeded.";
  texts_[Domain::ChipDesign] =
      "You are writing synthesizable RTL. Reason about combinational path "
      "depth and clock domain crossings, reset behaviour, and the port list "
      "the testbench expects. Use synthesis and simulation logs from earlier "
      "attempts to locate the faulty signal.";
  texts_[Domain::Embedded] =
      "You are writing microcontroller firmware. Reason about peripheral "
      "register sequencing, clock enables, interrupt priorities and the "
      "memory layout given by the linker script.";
  texts_[Domain::CodeOpt] =
      "You are optimizing an existing program. Preserve observable behaviour "
      "exactly; reason about algorithmic complexity, memory traffic and what "
      "the compiler can already do before changing code.";
  texts_[Domain::Cad] =
      "You are writing a parametric CAD script. Reason about wall thickness "
      "and manifold validity, tangent or coincident faces that produce "
      "degenerate edges, and the dimensions the specification requires.";
  texts_[Domain::Reference] =
      "You are writing a MiniLang program. Line 1 must be 'mem N', declaring "
      "N integer cells; N must not exceed the bundle's memory budget and "
      "every cell index must be below N. Each executed op costs one step and "
      "the program must halt within the step limit. Ops: set i v, add i j k, "
      "sub i j k, jnz i L, out i. Emit exactly the expected outputs.";
}

PromptRouter PromptRouter::from_directory(const fs::path& dir) {
  PromptRouter r;
  for (Domain d : kAllDomains) {
    fs::path p = dir / (std::string(to_string(d)) + ".txt");
    if (fs::is_regular_file(p)) {
      std::string text(trim(read_file(p)));
      if (!text.empty()) r.texts_[d] = std::move(text);
    }
  }
  return r;
}

DomainInstructions PromptRouter::route(Domain domain) const {
  auto it = texts_.find(domain);
  if (it == texts_.end())
    throw UnsupportedDomain("no instructions for domain " +
                            std::string(to_string(domain)));
  return {domain, it->second};
}

DomainInstructions route_prompt(const EnvironmentBundle& bundle) {
  static const PromptRouter router;
  return router.route(bundle);
}

// ---------------------------------------------------------------------------

void BundleIndex::add(BundlePtr bundle) {
  auto digest = bundle->content_digest;
  by_digest_.insert_or_assign(std::move(digest), std::move(bundle));
}

BundlePtr BundleIndex::find(std::string_view digest) const {
  auto it = by_digest_.find(digest);
  return it == by_digest_.end() ? nullptr : it->second;
}

const EnvironmentBundle& BundleIndex::at(std::string_view digest) const {
  auto b = find(digest);
  if (!b) throw Error("no bundle with digest " + std::string(digest));
  return *b;
}

// ---------------------------------------------------------------------------

std::vector<SeedEntry> load_seed_set(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<SeedEntry> out;
  std::set<std::string> ids;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto parts = split_trimmed(line, '|');
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    if (parts.size() < 4)
      throw ParseError(where + ": expected 'seed_id | domain | bundle_dir | "
                               "expected_interface | description'");
    SeedEntry e;
    e.seed.seed_id = parts[0];
    if (e.seed.seed_id.empty()) throw ParseError(where + ": empty seed_id");
    if (!ids.insert(e.seed.seed_id).second)
      throw ParseError(where + ": duplicate seed_id '" + e.seed.seed_id + "'");
    auto d = parse_domain(parts[1]);
    if (!d) throw ParseError(where + ": unknown domain '" + parts[1] + "'");
    e.seed.domain = *d;
    e.bundle_dir = path.parent_path() / parts[2];
    e.seed.expected_interface = parts[3];
    // The description is everything after the fourth separator.
    std::string desc;
    for (std::size_t k = 4; k < parts.size(); ++k) {
      if (k > 4) desc += " | ";
      desc += parts[k];
    }
    e.seed.description = std::move(desc);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace trajforge
