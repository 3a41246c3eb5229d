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

#include <mutex>
#include <set>

#include "test_support.hpp"
#include "trajforge/backends.hpp"

namespace trajforge {
namespace {

using testing::reference_bundle;
using testing::reference_bundle_ptr;

TEST(ExecuteReference, Labels) {
  const auto b = reference_bundle("r", 8, 100, "5\n");
  EXPECT_EQ(execute(b, "mem 4\nset 0 2\nset 1 3\nadd 0 1 2\nout 2\n").label, OutcomeLabel::Pass);
  const auto over = execute(b, "mem 16\nset 0 5\nout 0\n");
  EXPECT_EQ(over.label, OutcomeLabel::MemoryFault);
  EXPECT_NE(over.diagnostic.find("requested 16 vs budget 8"), std::string::npos);
  EXPECT_EQ(over.source, ObservationSource::Real);
}

TEST(ExecuteReference, NonPassHasDiagnostic) {
  const auto b = reference_bundle("r", 8, 10, "5\n");
  for (const char* code : {"mem 4\nfrob\n", "mem 99\n", "mem 2\nset 0 1\njnz 0 3\n",
                           "mem 2\nout 0\n"}) {
    const auto o = execute(b, code);
    EXPECT_NE(o.label, OutcomeLabel::Pass);
    EXPECT_FALSE(o.diagnostic.empty()) << code;
  }
}

TEST(ExecuteReference, Deterministic) {
  const auto b = reference_bundle("r", 8, 100, "5\n7\n");
  const std::string code = "mem 2\nset 0 5\nout 0\nout 0\n";
  EXPECT_EQ(execute(b, code), execute(b, code));
}

TEST(Execute, UnknownToolchainIsUnavailable) {
  auto b = make_bundle("x", Domain::CodeOpt, "not-a-toolchain", {8, 10, 100}, {});
  EXPECT_EQ(execute(b, "int main() {}").label, OutcomeLabel::BackendUnavailable);
}

TEST(Execute, MissingCommandIsUnavailable) {
  auto reg = BackendRegistry::with_shipped();
  reg.add({"ghost", {Domain::CodeOpt}, "trajforge-no-such-tool-7731 {candidate}", {{"error", OutcomeLabel::CompilationError}}});
  RealExecutor ex(reg);
  auto b = make_bundle("x", Domain::CodeOpt, "ghost", {8, 10, 2000}, {});
  const auto o = ex.execute(b, "int main() {}");
  EXPECT_EQ(o.label, OutcomeLabel::BackendUnavailable);
  EXPECT_FALSE(o.diagnostic.empty());
}

TEST(ParseDiagnostics, TritonSharedMemory) {
  const auto* triton = BackendRegistry::shipped().find("triton");
  ASSERT_NE(triton, nullptr);
  const std::string raw =
      "compiling kernel\n"
      "triton.runtime.errors.OutOfResources: shared memory request (49152 B) exceeds per-SM limit\n"
      "hint: reduce BLOCK_N\n";
  const auto [label, diag] = parse_diagnostics(raw, 1, *triton);
  EXPECT_EQ(label, OutcomeLabel::MemoryFault);
  EXPECT_NE(diag.find("shared memory request (49152 B) exceeds"), std::string::npos);
  EXPECT_NE(diag.find("hint: reduce BLOCK_N"), std::string::npos);
}

TEST(ParseDiagnostics, BRepZeroLength) {
  BackendSpec spec{"cad", {Domain::Cad}, "x", {{"zero length", OutcomeLabel::GeometryError}}};
  const auto [label, diag] = parse_diagnostics("BRep check: edge has zero length\n", 1, spec);
  EXPECT_EQ(label, OutcomeLabel::GeometryError);
  EXPECT_EQ(diag, "BRep check: edge has zero length");
}

TEST(ParseDiagnostics, NoMatch) {
  BackendSpec spec{"s", {Domain::CodeOpt}, "x", {{"error", OutcomeLabel::CompilationError}}};
  EXPECT_EQ(parse_diagnostics("", 0, spec), std::make_pair(OutcomeLabel::Pass, std::string()));
  const auto [label, diag] = parse_diagnostics("1\n2\n3\n4\n5\n6\n7\n", 3, spec);
  EXPECT_EQ(label, OutcomeLabel::CompilationError);
  EXPECT_EQ(diag, "3\n4\n5\n6\n7");
}

TEST(ParseDiagnostics, RuleOrderWinsOverLineOrder) {
  BackendSpec spec{"s", {Domain::CodeOpt}, "x",
                   {{"timeout", OutcomeLabel::Timeout}, {"error", OutcomeLabel::CompilationError}}};
  const std::string raw = "error: first\nwatchdog timeout\n";
  EXPECT_EQ(parse_diagnostics(raw, 1, spec).first, OutcomeLabel::Timeout);
  EXPECT_EQ(parse_diagnostics(raw, 1, spec), parse_diagnostics(raw, 1, spec));
}

TEST(ExecuteBatch, OrderedAndParallelismInvariant) {
  std::vector<ExecutionJob> jobs;
  for (int i = 0; i < 10; ++i) {
    auto b = reference_bundle_ptr("b" + std::to_string(i), 8, 100, std::to_string(i) + "\n");
    jobs.push_back({"job" + std::to_string(i), b,
                    "mem 2\nset 0 " + std::to_string(i % 3 == 0 ? i : i + 1) + "\nout 0\n"});
  }
  RealExecutor ex;
  const auto one = ex.execute_batch(jobs, 1);
  const auto four = ex.execute_batch(jobs, 4);
  const auto eight = ex.execute_batch(jobs, 8);
  ASSERT_EQ(one.size(), 10u);
  for (int i = 0; i < 10; ++i)
    EXPECT_EQ(one[i].label, i % 3 == 0 ? OutcomeLabel::Pass : OutcomeLabel::WrongOutput);
  EXPECT_EQ(one, four);
  EXPECT_EQ(one, eight);
  EXPECT_TRUE(ex.execute_batch({}, 4).empty());
}

TEST(ExecuteBatch, DuplicateJobIds) {
  auto b = reference_bundle_ptr("b", 8, 100, "1\n");
  RealExecutor ex;
  EXPECT_THROW(ex.execute_batch({{"a", b, "mem 1\n"}, {"a", b, "mem 1\n"}}, 2), std::invalid_argument);
}

class ExternalBackend : public ::testing::Test {
 protected:
  static BackendRegistry registry() {
    auto reg = BackendRegistry::with_shipped();
    reg.add({"fake-cc",
             {Domain::CodeOpt},
             "cd {workspace} && test -f input.txt && if grep -q BAD {candidate}; then echo "
             "'error: bad token'; exit 1; fi; if grep -q HANG {candidate}; then sleep 5; fi; "
             "exit 0",
             {{"^error:", OutcomeLabel::CompilationError}}});
    return reg;
  }
  static BundlePtr bundle(std::int64_t wall_ms = 5000) {
    return std::make_shared<const EnvironmentBundle>(
        make_bundle("ext", Domain::CodeOpt, "fake-cc", {8, 10, wall_ms}, {{"input.txt", "data\n"}}));
  }
};

TEST_F(ExternalBackend, PassAndDiagnostics) {
  RealExecutor ex(registry());
  EXPECT_EQ(ex.execute(*bundle(), "int main() {}\n").label, OutcomeLabel::Pass);
  const auto bad = ex.execute(*bundle(), "BAD\n");
  EXPECT_EQ(bad.label, OutcomeLabel::CompilationError);
  EXPECT_EQ(bad.diagnostic, "error: bad token");
  EXPECT_EQ(bad.source, ObservationSource::Real);
}

TEST_F(ExternalBackend, WallClockTimeout) {
  RealExecutor ex(registry());
  EXPECT_EQ(ex.execute(*bundle(300), "HANG\n").label, OutcomeLabel::Timeout);
}

TEST_F(ExternalBackend, WorkspacesAreDisjointAndRemoved) {
  std::mutex mu;
  std::vector<std::filesystem::path> seen;
  RealExecutor::Options opts;
  opts.injected_latency = std::chrono::milliseconds(20);
  opts.on_workspace = [&](const std::string&, const std::filesystem::path& ws) {
    std::lock_guard lock(mu);
    EXPECT_TRUE(std::filesystem::exists(ws / "input.txt"));
    seen.push_back(ws);
  };
  RealExecutor ex(registry(), opts);
  std::vector<ExecutionJob> jobs;
  for (int i = 0; i < 12; ++i)
    jobs.push_back({"j" + std::to_string(i), bundle(), i % 2 ? "BAD\n" : "ok\n"});
  const auto obs = ex.execute_batch(jobs, 4);
  ASSERT_EQ(obs.size(), 12u);
  for (int i = 0; i < 12; ++i)
    EXPECT_EQ(obs[i].label, i % 2 ? OutcomeLabel::CompilationError : OutcomeLabel::Pass);
  EXPECT_EQ(std::set<std::filesystem::path>(seen.begin(), seen.end()).size(), 12u);
  for (const auto& ws : seen) EXPECT_FALSE(std::filesystem::exists(ws));
  EXPECT_LE(ex.max_in_flight(), 4u);
  EXPECT_GE(ex.max_in_flight(), 1u);
}

}  // namespace
}  // namespace trajforge
