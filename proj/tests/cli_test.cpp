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

#include <algorithm>
#include <cstdlib>
#include <map>
#include <random>
#include <sstream>

#include "test_support.hpp"
#include "trajforge/cli.hpp"
#include "trajforge/corpus.hpp"
#include "trajforge/util.hpp"

namespace trajforge {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

int cli(std::vector<std::string> args) { return cli::run(args); }

// Writes a synthetic reference workload; returns the config path.
fs::path make_fixture(const TempDir& dir, std::size_t count, int seed = 1) {
  EXPECT_EQ(cli({"make-fixture", "--out", dir.path().string(), "--count", std::to_string(count),
                 "--seed", std::to_string(seed)}),
            0);
  return dir / "trajforge.cfg";
}

std::string summary_value(const fs::path& file, const std::string& key) {
  std::istringstream in(read_file(file));
  std::string k, v;
  while (in >> k >> v)
    if (k == key) return v;
  return "";
}

TEST(CliBundleValidate, ExitCodes) {
  EXPECT_EQ(cli({"bundle", "validate", testing::fixture_path("bundles/ref-add-001").string()}), 0);

  TempDir dir;
  auto b = testing::reference_bundle("bad", 8, 100, "5\n");
  write_bundle(b, dir / "bad");
  write_file_atomic(dir / "bad" / "bundle.manifest",
                    "bundle_id = bad\ndomain = reference\ntoolchain = reference\n"
                    "memory_budget = 0\nstep_limit = 100\nwall_time_ms = 2000\n"
                    "artifact = task.txt\nartifact = tests.expected\n");
  EXPECT_EQ(cli({"bundle", "validate", (dir / "bad").string()}), 1);

  fs::create_directories(dir / "empty");
  EXPECT_EQ(cli({"bundle", "validate", (dir / "empty").string()}), 2);
}

TEST(CliRun, ScriptedFixture) {
  TempDir dir;
  const auto cfg = make_fixture(dir, 3);
  EXPECT_EQ(cli({"run", "--config", cfg.string()}), 0);
  const auto records = import_records(dir / "run" / "real.corpus");
  ASSERT_EQ(records.size(), 3u);
  for (const auto& r : records) EXPECT_EQ(r.provenance, Provenance::RealExecution);
  EXPECT_EQ(summary_value(dir / "run" / "run_summary.txt", "trajectories"), "3");
}

TEST(CliRun, AlwaysFailPolicyExhausts) {
  TempDir dir;
  const auto cfg = make_fixture(dir, 3);
  ScriptedPolicy fail;
  for (int i = 0; i < 3; ++i) {
    const std::string id = "task" + std::to_string(i);
    fail.add({id, std::nullopt, 0}, {"try", "mem 2\nfrob\n"});
    for (std::size_t k = 1; k <= 4; ++k)
      fail.add({id, OutcomeLabel::CompilationError, k}, {"again", "mem 2\nfrob\n"});
  }
  fail.save(dir.path() / "fail", "policy.txt");
  EXPECT_EQ(cli({"run", "--config", cfg.string(), "--set",
                 "policy=" + (dir / "fail" / "policy.txt").string()}),
            0);
  EXPECT_EQ(summary_value(dir / "run" / "run_summary.txt", "Exhausted"), "3");
}

TEST(CliRun, UnreachableRemoteGenerator) {
  TempDir dir;
  make_fixture(dir, 3);
  write_file_atomic(dir / "remote.cfg",
                    "seeds = seeds.txt\nout = remote\ngenerator.url = http://127.0.0.1:9\n"
                    "generator.timeout_ms = 300\n");
  ::setenv("TRAJFORGE_GENERATOR_TOKEN", "t0ken", 1);
  EXPECT_EQ(cli({"run", "--config", (dir / "remote.cfg").string()}), 1);
  ::unsetenv("TRAJFORGE_GENERATOR_TOKEN");
  const auto records = import_records(dir / "remote" / "real.corpus");
  ASSERT_EQ(records.size(), 3u);
  for (const auto& r : records) EXPECT_EQ(r.trajectory.terminal, TerminalStatus::Aborted);
}

TEST(CliRun, ConfigurationFailures) {
  TempDir dir;
  make_fixture(dir, 2);
  EXPECT_EQ(cli({"run", "--config", (dir / "missing.cfg").string()}), 2);
  write_file_atomic(dir / "nogen.cfg", "seeds = seeds.txt\n");
  EXPECT_EQ(cli({"run", "--config", (dir / "nogen.cfg").string()}), 2);
  write_file_atomic(dir / "notoken.cfg", "seeds = seeds.txt\ngenerator.url = http://127.0.0.1:9\n");
  ::unsetenv("TRAJFORGE_GENERATOR_TOKEN");
  EXPECT_EQ(cli({"run", "--config", (dir / "notoken.cfg").string()}), 2);
  EXPECT_EQ(cli({"run", "--config", (dir / "trajforge.cfg").string(), "--parallelism", "-1"}), 2);
  EXPECT_EQ(cli({"run", "--config", (dir / "trajforge.cfg").string(), "--set", "loop.k=x"}), 2);
  EXPECT_EQ(cli({"frobnicate"}), 2);
}

TEST(CliRun, FlagsOverrideConfig) {
  TempDir dir;
  const auto cfg = make_fixture(dir, 2);
  EXPECT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir / "elsewhere").string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "elsewhere" / "real.corpus"));
  EXPECT_FALSE(fs::exists(dir / "run" / "real.corpus"));
}

TEST(CliTrain, WritesDeterministicParameters) {
  TempDir dir;
  const auto cfg = make_fixture(dir, 30);
  ASSERT_EQ(cli({"run", "--config", cfg.string()}), 0);
  ASSERT_EQ(cli({"train-wm", "--config", cfg.string(), "--seed", "4"}), 0);
  const auto first = read_file(dir / "run" / "icwm.params");
  ASSERT_EQ(cli({"train-wm", "--config", cfg.string(), "--seed", "4"}), 0);
  EXPECT_EQ(read_file(dir / "run" / "icwm.params"), first);
  EXPECT_EQ(first.rfind("icwm-params v1", 0), 0u);
}

TEST(CliTrain, EmptyCorpus) {
  TempDir dir;
  const auto cfg = make_fixture(dir, 2);
  fs::create_directories(dir / "run");
  write_file_atomic(dir / "run" / "real.corpus", serialize_corpus({}));
  EXPECT_EQ(cli({"train-wm", "--config", cfg.string()}), 1);
}

TEST(CliAmplify, PassthroughAgreement) {
  TempDir dir;
  const auto cfg = make_fixture(dir, 10);
  ASSERT_EQ(cli({"run", "--config", cfg.string()}), 0);
  ASSERT_EQ(cli({"amplify", "--config", cfg.string(), "--set", "wm.passthrough=true"}), 0);
  const auto report = read_file(dir / "run" / "amplify_report.txt");
  EXPECT_NE(report.find("agreement 1.0000 over 10 pairs"), std::string::npos) << report;
  for (const auto& r : import_records(dir / "run" / "amplified.corpus"))
    EXPECT_EQ(r.provenance, Provenance::WorldModelVerified);
}

TEST(CliAmplify, PatchedAlwaysPassTriggersRetrain) {
  TempDir dir;
  const auto cfg = make_fixture(dir, 40);
  ASSERT_EQ(cli({"run", "--config", cfg.string()}), 0);
  fs::create_directories(dir / "run");
  write_file_atomic(dir / "run" / "icwm.params",
                    serialize_parameters(constant_label_parameters(OutcomeLabel::Pass)));
  ASSERT_EQ(cli({"amplify", "--config", cfg.string(), "--set", "audit.every=20", "--set",
                 "audit.sample_fraction=1"}),
            0);
  const auto report = read_file(dir / "run" / "amplify_report.txt");
  EXPECT_NE(report.find("retrained v2"), std::string::npos) << report;
  EXPECT_EQ(report.find("findings 0 "), std::string::npos) << report;
  EXPECT_TRUE(fs::exists(dir / "run" / "icwm.amplified.params"));
}

TEST(CliAmplify, VerifyFinalOff) {
  TempDir dir;
  const auto cfg = make_fixture(dir, 10);
  ASSERT_EQ(cli({"run", "--config", cfg.string()}), 0);
  ASSERT_EQ(cli({"amplify", "--config", cfg.string(), "--set", "wm.passthrough=true", "--set",
                 "amplify.verify_final=false"}),
            0);
  const auto amplified = import_records(dir / "run" / "amplified.corpus");
  ASSERT_EQ(amplified.size(), 10u);
  for (const auto& r : amplified) EXPECT_EQ(r.provenance, Provenance::WorldModelUnverified);
  ASSERT_EQ(cli({"export", "--config", cfg.string()}), 0);
  const auto exported = import_records(dir / "run" / "corpus.export");
  EXPECT_EQ(exported.size(), 10u);
  for (const auto& r : exported) EXPECT_EQ(r.provenance, Provenance::RealExecution);
}

TEST(CliAudit, PassthroughReportsOnes) {
  TempDir dir;
  const auto cfg = make_fixture(dir, 12);
  ASSERT_EQ(cli({"audit", "--config", cfg.string(), "--set", "wm.passthrough=true"}), 0);
  const auto tsv = read_file(dir / "run" / "fidelity.tsv");
  EXPECT_NE(tsv.find("reference\t"), std::string::npos);
  EXPECT_NE(tsv.find("\t1.0000\t12\t1.0000\t0.00\n"), std::string::npos) << tsv;
  EXPECT_TRUE(fs::exists(dir / "run" / "fidelity.txt"));
}

TEST(CliAudit, ContaminatedHeldOut) {
  TempDir dir;
  const auto cfg = make_fixture(dir, 20);
  ASSERT_EQ(cli({"run", "--config", cfg.string()}), 0);
  ASSERT_EQ(cli({"train-wm", "--config", cfg.string()}), 0);
  // Held-out set drawn from the training data itself.
  const auto params = parse_parameters(read_file(dir / "run" / "icwm.params"));
  const auto trained_on = extract_single_turn_pairs(
      [&] {
        std::vector<Trajectory> t;
        for (auto& r : import_records(dir / "run" / "real.corpus")) t.push_back(r.trajectory);
        return t;
      }(),
      [&] {
        BundleIndex idx;
        for (const auto& e : load_seed_set(dir / "seeds.txt"))
          idx.add(std::make_shared<const EnvironmentBundle>(load_bundle(e.bundle_dir)));
        return idx;
      }());
  ASSERT_TRUE(params.training_keys.count(trained_on.front().key()));
  write_file_atomic(dir / "leak.turns", serialize_turns(trained_on));
  EXPECT_EQ(cli({"audit", "--config", cfg.string(), "--set",
                 "audit.heldout=" + (dir / "leak.turns").string()}),
            2);
}

// Brute-force quantile: sort, take element ceil(q n) (1-based).
std::size_t sorted_rank(std::vector<std::size_t> v, std::size_t num, std::size_t den) {
  std::sort(v.begin(), v.end());
  const std::size_t rank = std::max<std::size_t>(1, (num * v.size() + den - 1) / den);
  return v[rank - 1];
}

TEST(CliStats, ThousandRecordsMatchSortOracle) {
  TempDir dir;
  std::mt19937_64 rng(2024);
  std::vector<CorpusRecord> records;
  std::map<std::string, std::vector<std::size_t>> think, answer;
  const std::vector<std::string> cats = {"alpha", "beta", "gamma"};
  for (int i = 0; i < 1000; ++i) {
    CorpusRecord r;
    r.category = cats[rng() % cats.size()];
    r.trajectory.trajectory_id = "id" + std::to_string(i);
    r.trajectory.seed_id = "s" + std::to_string(i);
    r.trajectory.bundle_digest = "d";
    r.trajectory.terminal = TerminalStatus::Exhausted;
    const std::size_t turns = 1 + rng() % 4;
    std::size_t total = 0;
    for (std::size_t k = 0; k < turns; ++k) {
      Turn t;
      t.index = k;
      t.reasoning = std::string(rng() % 500, 'r');
      t.code = std::string(1 + rng() % 80, 'c');
      t.observation.label = OutcomeLabel::WrongOutput;
      t.observation.diagnostic = "x";
      total += t.reasoning.size();
      if (r.category == "gamma") think[r.category].push_back(t.reasoning.size());
      r.trajectory.turns.push_back(t);
    }
    if (r.category != "gamma") think[r.category].push_back(total);
    answer[r.category].push_back(r.trajectory.turns.back().code.size());
    records.push_back(std::move(r));
  }
  write_file_atomic(dir / "big.corpus", serialize_corpus(records));
  ASSERT_EQ(cli({"stats", "--out", (dir / "out").string(), "--set",
                 "stats.inputs=" + (dir / "big.corpus").string(), "--set", "stats.multi_turn=gamma"}),
            0);
  std::istringstream tsv(read_file(dir / "out" / "depth_stats.tsv"));
  std::string line;
  std::getline(tsv, line);  // header
  std::size_t rows = 0;
  while (std::getline(tsv, line)) {
    const auto f = split_trimmed(line, '\t');
    if (f[0] == "range_ratio") continue;
    ++rows;
    const auto& t = think.at(f[0]);
    EXPECT_EQ(std::stoul(f[2]), sorted_rank(t, 1, 4)) << f[0];
    EXPECT_EQ(std::stoul(f[3]), sorted_rank(t, 1, 2)) << f[0];
    EXPECT_EQ(std::stoul(f[4]), sorted_rank(t, 3, 4)) << f[0];
    EXPECT_EQ(std::stoul(f[5]), sorted_rank(answer.at(f[0]), 1, 2)) << f[0];
  }
  EXPECT_EQ(rows, 3u);
}

TEST(CliExport, DuplicateIdsAcrossInputs) {
  TempDir dir;
  const auto cfg = make_fixture(dir, 3);
  ASSERT_EQ(cli({"run", "--config", cfg.string()}), 0);
  const auto corpus = (dir / "run" / "real.corpus").string();
  EXPECT_EQ(cli({"export", "--config", cfg.string(), "--set", "export.inputs=" + corpus + "," + corpus}), 1);
}

}  // namespace
}  // namespace trajforge
