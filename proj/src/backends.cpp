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

#include "trajforge/backends.hpp"

#include <random>
#include <regex>
#include <set>

#include "subprocess.hpp"
#include "trajforge/minilang.hpp"
#include "trajforge/util.hpp"
#include "trajforge/worker_pool.hpp"

namespace trajforge {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Registry

void BackendRegistry::add(BackendSpec spec) {
  if (specs_.count(spec.name)) throw Error("duplicate backend spec '" + spec.name + "'");
  auto name = spec.name;
  specs_.emplace(std::move(name), std::move(spec));
}

const BackendSpec* BackendRegistry::find(std::string_view name) const {
  auto it = specs_.find(name);
  return it == specs_.end() ? nullptr : &it->second;
}

std::vector<std::string> BackendRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : specs_) out.push_back(n);
  return out;
}

BackendRegistry BackendRegistry::with_shipped() {
  using L = OutcomeLabel;
  BackendRegistry r;
  r.add({std::string(kReferenceBackend), {Domain::Reference}, "", {}});
  r.add({"triton",
         {Domain::GpuKernel},
         "python3 {candidate}",
         {{R"(shared memory request \(\d+ B\) exceeds)", L::MemoryFault},
          {R"(out of resource: shared memory)", L::MemoryFault},
          {R"(CUDA error: an illegal memory access)", L::MemoryFault},
          {R"(CompilationError|SyntaxError|NameError)", L::CompilationError},
          {R"(AssertionError|Mismatched elements)", L::WrongOutput}}});
  r.add({"yosys-icarus",
         {Domain::ChipDesign},
         "iverilog -g2012 -o {workspace}/sim.out {candidate} {workspace}/tb.v "
         "&& vvp {workspace}/sim.out",
         {{R"(syntax error|error:)", L::CompilationError},
          {R"(\bFAIL\b|mismatch)", L::WrongOutput}}});
  r.add({"renode",
         {Domain::Embedded},
         "renode-test {workspace}/test.robot",
         {{R"(error:|undefined reference)", L::CompilationError},
          {R"(HardFault|BusFault|MemManage)", L::MemoryFault},
          {R"(Test timeout)", L::Timeout},
          {R"(\| FAIL \|)", L::WrongOutput}}});
  r.add({"cadquery",
         {Domain::Cad},
         "python3 {candidate}",
         {{R"(SyntaxError|NameError)", L::CompilationError},
          {R"(BRep check|zero length|not a valid solid|StdFail_NotDone)",
           L::GeometryError},
          {R"(AssertionError)", L::WrongOutput}}});
  r.add({"gcc",
         {Domain::CodeOpt},
         "g++ -O2 -std=c++17 -o {workspace}/a.out {candidate} && {workspace}/a.out",
         {{R"(error:)", L::CompilationError},
          {R"(Segmentation fault|AddressSanitizer)", L::MemoryFault},
          {R"(WRONG|mismatch)", L::WrongOutput}}});
  return r;
}

const BackendRegistry& BackendRegistry::shipped() {
  static const BackendRegistry r = with_shipped();
  return r;
}

// ---------------------------------------------------------------------------
// Diagnostics

std::pair<OutcomeLabel, std::string> parse_diagnostics(std::string_view raw_output,
                                                       int exit_status,
                                                       const BackendSpec& spec) {
  const auto lines = split_lines(raw_output);
  for (const auto& rule : spec.diagnostic_rules) {
    const std::regex re(rule.pattern, std::regex::ECMAScript);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (!std::regex_search(lines[i].begin(), lines[i].end(), re)) continue;
      std::string diag;
      for (std::size_t j = i; j < lines.size() && j <= i + 3; ++j) {
        if (j > i) diag += '\n';
        diag += lines[j];
      }
      return {rule.label, diag};
    }
  }
  if (exit_status == 0) return {OutcomeLabel::Pass, ""};
  std::string diag;
  const std::size_t from = lines.size() > 5 ? lines.size() - 5 : 0;
  for (std::size_t j = from; j < lines.size(); ++j) {
    if (j > from) diag += '\n';
    diag += lines[j];
  }
  if (diag.empty()) diag = "toolchain exited with status " + std::to_string(exit_status);
  return {OutcomeLabel::CompilationError, diag};
}

// ---------------------------------------------------------------------------
// Reference backend

Observation execute_reference(const EnvironmentBundle& bundle, std::string_view code) {
  const auto start = std::chrono::steady_clock::now();
  Observation obs;
  obs.source = ObservationSource::Real;
  auto it = bundle.artifacts.find(std::string(kExpectedOutputsArtifact));
  if (bundle.domain != Domain::Reference || it == bundle.artifacts.end()) {
    obs.label = OutcomeLabel::BackendUnavailable;
    obs.diagnostic = "reference backend requires a reference-domain bundle with tests.expected";
    return obs;
  }
  std::vector<std::int64_t> expected;
  try {
    expected = minilang::parse_expected(it->second);
  } catch (const ParseError& e) {
    obs.label = OutcomeLabel::BackendUnavailable;
    obs.diagnostic = std::string("malformed tests.expected: ") + e.what();
    return obs;
  }
  auto r = minilang::run(code, bundle.limits.memory_budget, bundle.limits.step_limit,
                         expected);
  obs.label = r.label;
  obs.diagnostic = std::move(r.diagnostic);
  obs.numeric_outputs = std::move(r.outputs);
  obs.diff_summary = std::move(r.diff_summary);
  obs.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return obs;
}

std::string_view candidate_extension(Domain d) {
  switch (d) {
    case Domain::GpuKernel: return "py";
    case Domain::ChipDesign: return "v";
    case Domain::Embedded: return "c";
    case Domain::CodeOpt: return "cpp";
    case Domain::Cad: return "py";
    case Domain::Reference: return "ml";
  }
  return "txt";
}

// ---------------------------------------------------------------------------
// Executor

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

std::string substitute(std::string tmpl, std::string_view key, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = tmpl.find(key, pos)) != std::string::npos) {
    tmpl.replace(pos, key.size(), value);
    pos += value.size();
  }
  return tmpl;
}

fs::path make_workspace(const fs::path& root) {
  static std::atomic<std::uint64_t> counter{0};
  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::error_code ec;
  fs::create_directories(root, ec);
  for (int attempt = 0; attempt < 16; ++attempt) {
    fs::path p = root / ("ws-" + std::to_string(::getpid()) + "-" +
                         std::to_string(counter++) + "-" + std::to_string(rng() % 1000000));
    if (fs::create_directory(p, ec)) return p;
  }
  throw WorkspaceError("cannot create workspace under " + root.string());
}

struct InFlight {
  std::atomic<std::size_t>& now;
  explicit InFlight(std::atomic<std::size_t>& n, std::atomic<std::size_t>& peak) : now(n) {
    std::size_t v = ++now;
    std::size_t p = peak.load();
    while (v > p && !peak.compare_exchange_weak(p, v)) {
    }
  }
  ~InFlight() { --now; }
};

}  // namespace

RealExecutor::RealExecutor() : RealExecutor(BackendRegistry::with_shipped()) {}

RealExecutor::RealExecutor(BackendRegistry registry)
    : RealExecutor(std::move(registry), Options{}) {}

RealExecutor::RealExecutor(BackendRegistry registry, Options options)
    : registry_(std::move(registry)), options_(std::move(options)) {
  if (options_.workspace_root.empty())
    options_.workspace_root = fs::temp_directory_path() / "trajforge-ws";
}

Observation RealExecutor::execute(const EnvironmentBundle& bundle, std::string_view code,
                                  std::string_view job_id) const {
  InFlight guard(in_flight_, max_in_flight_);
  ++executions_;
  if (options_.injected_latency.count() > 0)
    std::this_thread::sleep_for(options_.injected_latency);

  const BackendSpec* spec = registry_.find(bundle.toolchain);
  if (!spec) {
    Observation obs;
    obs.label = OutcomeLabel::BackendUnavailable;
    obs.diagnostic = "unknown toolchain '" + bundle.toolchain + "'";
    return obs;
  }
  if (spec->is_builtin()) return execute_reference(bundle, code);
  return execute_external(bundle, *spec, code, job_id);
}

Observation RealExecutor::execute_external(const EnvironmentBundle& bundle,
                                           const BackendSpec& spec, std::string_view code,
                                           std::string_view job_id) const {
  Observation obs;
  obs.source = ObservationSource::Real;
  const auto start = std::chrono::steady_clock::now();

  const fs::path ws = make_workspace(options_.workspace_root);
  struct Cleanup {
    fs::path path;
    bool keep;
    ~Cleanup() {
      std::error_code ec;
      if (!keep) fs::remove_all(path, ec);
    }
  } cleanup{ws, options_.keep_workspaces};

  const fs::path candidate =
      ws / ("candidate." + std::string(candidate_extension(bundle.domain)));
  try {
    for (const auto& [rel, content] : bundle.artifacts) {
      if (!is_safe_artifact_path(rel)) throw WorkspaceError("unsafe artifact path " + rel);
      write_file_atomic(ws / rel, content);
    }
    write_file_atomic(candidate, code);
  } catch (const WorkspaceError&) {
    throw;
  } catch (const std::exception& e) {
    throw WorkspaceError(std::string("populating workspace: ") + e.what());
  }
  if (options_.on_workspace) options_.on_workspace(std::string(job_id), ws);

  std::string cmd = substitute(spec.invocation, "{workspace}", shell_quote(ws.string()));
  cmd = substitute(cmd, "{candidate}", shell_quote(candidate.string()));

  auto finish = [&] {
    obs.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    return obs;
  };

  if (!detail::command_available(cmd)) {
    obs.label = OutcomeLabel::BackendUnavailable;
    obs.diagnostic = "toolchain command not found for backend '" + spec.name + "'";
    return finish();
  }
  auto proc = detail::run_shell(cmd, ws,
                                std::chrono::milliseconds(bundle.limits.wall_time_limit_ms));
  if (!proc.started || proc.exit_status == 127) {
    obs.label = OutcomeLabel::BackendUnavailable;
    obs.diagnostic = proc.started ? "toolchain invocation failed: " + std::string(trim(proc.output))
                                  : "cannot start toolchain process";
    return finish();
  }
  if (proc.timed_out) {
    obs.label = OutcomeLabel::Timeout;
    obs.diagnostic = "wall time limit " + std::to_string(bundle.limits.wall_time_limit_ms) +
                     " ms exceeded";
    return finish();
  }
  if (spec.diagnostic_rules.empty()) {
    obs.label = proc.exit_status == 0 ? OutcomeLabel::Pass : OutcomeLabel::CompilationError;
    obs.diagnostic = proc.exit_status == 0 ? "" : std::string(trim(proc.output));
    if (obs.label != OutcomeLabel::Pass && obs.diagnostic.empty())
      obs.diagnostic = "toolchain exited with status " + std::to_string(proc.exit_status);
  } else {
    auto [label, diag] = parse_diagnostics(proc.output, proc.exit_status, spec);
    obs.label = label;
    obs.diagnostic = std::move(diag);
  }
  return finish();
}

std::vector<Observation> RealExecutor::execute_batch(const std::vector<ExecutionJob>& jobs,
                                                     std::size_t parallelism) const {
  if (parallelism == 0) throw std::invalid_argument("parallelism must be >= 1");
  std::set<std::string_view> ids;
  for (const auto& j : jobs)
    if (!ids.insert(j.job_id).second)
      throw std::invalid_argument("duplicate job_id '" + j.job_id + "'");

  return parallel_map<Observation>(jobs.size(), parallelism, [&](std::size_t i) {
    const auto& job = jobs[i];
    try {
      if (!job.bundle) throw WorkspaceError("job has no bundle");
      return execute(*job.bundle, job.code, job.job_id);
    } catch (const std::exception& e) {
      Observation obs;
      obs.label = OutcomeLabel::BackendUnavailable;
      obs.diagnostic = std::string("execution failed: ") + e.what();
      return obs;
    }
  });
}

Observation execute(const EnvironmentBundle& bundle, std::string_view code) {
  static const RealExecutor executor;
  return executor.execute(bundle, code);
}

std::vector<Observation> execute_batch(const std::vector<ExecutionJob>& jobs,
                                       std::size_t parallelism) {
  static const RealExecutor executor;
  return executor.execute_batch(jobs, parallelism);
}

}  // namespace trajforge
