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

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trajforge/backends.hpp"
#include "trajforge/icwm.hpp"
#include "trajforge/traj_loop.hpp"

namespace trajforge {

TRAJFORGE_DEFINE_ERROR(EmptyCorpus);
TRAJFORGE_DEFINE_ERROR(SchemaVersionMismatch);
TRAJFORGE_DEFINE_ERROR(DuplicateTrajectory);

class RecordParseError : public Error {
 public:
  RecordParseError(std::size_t line, const std::string& what)
      : Error("corpus line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class Provenance : std::uint8_t { RealExecution, WorldModelVerified, WorldModelUnverified };

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view s);

struct Verification {
  OutcomeLabel final_candidate_real_label = OutcomeLabel::Pass;
  bool audited = false;

  friend bool operator==(const Verification&, const Verification&) = default;
};

struct CorpusRecord {
  Trajectory trajectory;
  Provenance provenance = Provenance::RealExecution;
  std::optional<Verification> verification;
  std::string category;

  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

struct AssemblyPolicy {
  bool verify_final = true;
  // Re-executes every turn instead of only the final candidate; a record is
  // verified only if every real label matches its simulated one.
  bool verify_all_turns = false;
  std::set<std::string> audited_ids;
  std::size_t parallelism = 1;
  // Category per trajectory; defaults to the bundle's domain name.
  std::function<std::string(const Trajectory&)> categorize;
};

// Real trajectories pass through unchanged; each amplified trajectory's
// final candidate is executed once on `executor` when verify_final is set.
std::vector<CorpusRecord> assemble(const std::vector<Trajectory>& real,
                                   const std::vector<Trajectory>& amplified,
                                   const ExecutionOracle& executor, const BundleIndex& bundles,
                                   const AssemblyPolicy& policy = {});

// RealExecution or WorldModelVerified.
bool exportable(const CorpusRecord& r);

struct DepthRow {
  std::string category;
  std::size_t median_think_chars = 0;
  std::size_t p25_think = 0;
  std::size_t p75_think = 0;
  std::size_t median_answer_chars = 0;
  std::size_t record_count = 0;

  friend bool operator==(const DepthRow&, const DepthRow&) = default;
};

struct DepthStats {
  std::vector<DepthRow> rows;  // sorted by category
  double range_ratio = 1.0;    // max / min median think; inf if min is 0
};

// Element at rank ceil(q*n) (1-based) of the sorted values, q in (0, 1].
std::size_t lower_quantile(std::vector<std::size_t> values, std::size_t numerator,
                           std::size_t denominator);

// Thinking length is the summed per-turn reasoning, or for multi-turn
// categories the individual per-turn lengths. Answer length is the final
// candidate's size.
DepthStats thinking_depth_stats(const std::vector<CorpusRecord>& records,
                                const std::set<std::string>& multi_turn_categories = {});

std::string render_depth_table(const DepthStats& stats);
std::string render_depth_tsv(const DepthStats& stats);

inline constexpr int kCorpusSchemaVersion = 1;

std::string serialize_record(const CorpusRecord& r);
CorpusRecord parse_record(std::string_view line, std::size_t line_number = 0);

std::string serialize_corpus(const std::vector<CorpusRecord>& records);
std::vector<CorpusRecord> parse_corpus(std::string_view text);

// Default export drops WorldModelUnverified records. Returns records written.
std::size_t export_records(const std::vector<CorpusRecord>& records,
                           const std::filesystem::path& path, bool include_unverified = false);
std::vector<CorpusRecord> import_records(const std::filesystem::path& path);

// Held-out turn files: "# training-turns schema=1" then one JSON object per
// line.
std::string serialize_turns(const std::vector<TrainingTurn>& turns);
std::vector<TrainingTurn> parse_turns(std::string_view text);

}  // namespace trajforge
