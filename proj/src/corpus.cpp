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

#include "trajforge/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "trajforge/util.hpp"
#include "trajforge/worker_pool.hpp"

namespace trajforge {

using nlohmann::json;

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::RealExecution: return "RealExecution";
    case Provenance::WorldModelVerified: return "WorldModelVerified";
    case Provenance::WorldModelUnverified: return "WorldModelUnverified";
  }
  return "WorldModelUnverified";
}

std::optional<Provenance> parse_provenance(std::string_view s) {
  for (auto p : {Provenance::RealExecution, Provenance::WorldModelVerified,
                 Provenance::WorldModelUnverified})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

bool exportable(const CorpusRecord& r) {
  return r.provenance == Provenance::RealExecution ||
         r.provenance == Provenance::WorldModelVerified;
}

std::vector<CorpusRecord> assemble(const std::vector<Trajectory>& real,
                                   const std::vector<Trajectory>& amplified,
                                   const ExecutionOracle& executor, const BundleIndex& bundles,
                                   const AssemblyPolicy& policy) {
  if ((policy.verify_final || policy.verify_all_turns) &&
      executor.feedback_source() != FeedbackSource::RealExecution)
    throw std::invalid_argument("verification requires a real executor");
  auto category = [&](const Trajectory& t) {
    if (policy.categorize) return policy.categorize(t);
    auto b = bundles.find(t.bundle_digest);
    return b ? std::string(to_string(b->domain)) : std::string("unknown");
  };

  std::set<std::string> ids;
  std::vector<CorpusRecord> out;
  out.reserve(real.size() + amplified.size());
  for (const auto& t : real) {
    if (t.feedback_source != FeedbackSource::RealExecution)
      throw std::invalid_argument("trajectory " + t.trajectory_id + " in the real set is simulated");
    if (!ids.insert(t.trajectory_id).second)
      throw DuplicateTrajectory("trajectory_id " + t.trajectory_id + " appears twice");
    out.push_back({t, Provenance::RealExecution, std::nullopt, category(t)});
  }

  for (const auto& t : amplified) {
    if (t.feedback_source != FeedbackSource::WorldModel)
      throw std::invalid_argument("trajectory " + t.trajectory_id + " in the amplified set is real");
    if (!ids.insert(t.trajectory_id).second)
      throw DuplicateTrajectory("trajectory_id " + t.trajectory_id + " appears twice");
  }
  std::vector<std::optional<Observation>> finals(amplified.size());
  std::vector<char> turns_agree(amplified.size(), 1);
  if (policy.verify_final || policy.verify_all_turns) {
    parallel_for(amplified.size(), policy.parallelism, [&](std::size_t i) {
      const auto& t = amplified[i];
      if (t.turns.empty()) return;
      auto bundle = bundles.find(t.bundle_digest);
      auto run_one = [&](const std::string& code) {
        Observation o;
        if (!bundle) {
          o.label = OutcomeLabel::BackendUnavailable;
          o.diagnostic = "bundle not available for verification";
          return o;
        }
        try {
          o = executor.evaluate(*bundle, code);
        } catch (const std::exception& e) {
          o.label = OutcomeLabel::BackendUnavailable;
          o.diagnostic = e.what();
        }
        return o;
      };
      if (policy.verify_all_turns) {
        for (std::size_t k = 0; k + 1 < t.turns.size(); ++k)
          if (run_one(t.turns[k].code).label != t.turns[k].observation.label) turns_agree[i] = 0;
      }
      finals[i] = run_one(t.turns.back().code);
      if (policy.verify_all_turns && finals[i]->label != t.turns.back().observation.label)
        turns_agree[i] = 0;
    });
  }
  for (std::size_t i = 0; i < amplified.size(); ++i) {
    const auto& t = amplified[i];
    CorpusRecord r{t, Provenance::WorldModelUnverified, std::nullopt, category(t)};
    if (finals[i]) {
      const auto label = finals[i]->label;
      r.verification = Verification{label, policy.audited_ids.count(t.trajectory_id) != 0};
      const bool real_pass = label == OutcomeLabel::Pass;
      if (label != OutcomeLabel::BackendUnavailable && real_pass == t.solved() && turns_agree[i])
        r.provenance = Provenance::WorldModelVerified;
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

std::size_t lower_quantile(std::vector<std::size_t> values, std::size_t numerator,
                           std::size_t denominator) {
  if (values.empty()) throw EmptyCorpus("quantile of an empty sample");
  const std::size_t n = values.size();
  std::size_t rank = (numerator * n + denominator - 1) / denominator;
  rank = std::clamp<std::size_t>(rank, 1, n);
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

DepthStats thinking_depth_stats(const std::vector<CorpusRecord>& records,
                                const std::set<std::string>& multi_turn_categories) {
  if (records.empty()) throw EmptyCorpus("no records");
  struct Acc {
    std::vector<std::size_t> think;
    std::vector<std::size_t> answer;
    std::size_t count = 0;
  };
  std::map<std::string, Acc> by_cat;
  for (const auto& r : records) {
    auto& acc = by_cat[r.category];
    ++acc.count;
    const auto& turns = r.trajectory.turns;
    if (multi_turn_categories.count(r.category)) {
      for (const auto& t : turns) acc.think.push_back(t.reasoning.size());
    } else {
      std::size_t total = 0;
      for (const auto& t : turns) total += t.reasoning.size();
      acc.think.push_back(total);
    }
    acc.answer.push_back(turns.empty() ? 0 : turns.back().code.size());
  }

  DepthStats stats;
  std::size_t lo = std::numeric_limits<std::size_t>::max(), hi = 0;
  for (auto& [cat, acc] : by_cat) {
    DepthRow row;
    row.category = cat;
    row.record_count = acc.count;
    if (acc.think.empty()) acc.think.push_back(0);  // multi-turn records with no turns
    row.p25_think = lower_quantile(acc.think, 1, 4);
    row.median_think_chars = lower_quantile(acc.think, 1, 2);
    row.p75_think = lower_quantile(acc.think, 3, 4);
    row.median_answer_chars = lower_quantile(acc.answer, 1, 2);
    lo = std::min(lo, row.median_think_chars);
    hi = std::max(hi, row.median_think_chars);
    stats.rows.push_back(std::move(row));
  }
  if (lo == 0)
    stats.range_ratio = hi == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  else
    stats.range_ratio = static_cast<double>(hi) / static_cast<double>(lo);
  return stats;
}

std::string render_depth_table(const DepthStats& s) {
  std::ostringstream out;
  char line[200];
  std::snprintf(line, sizeof line, "%-20s %8s %10s %10s %10s %12s\n", "category", "records",
                "p25_think", "med_think", "p75_think", "med_answer");
  out << line;
  for (const auto& r : s.rows) {
    std::snprintf(line, sizeof line, "%-20s %8zu %10zu %10zu %10zu %12zu\n", r.category.c_str(),
                  r.record_count, r.p25_think, r.median_think_chars, r.p75_think,
                  r.median_answer_chars);
    out << line;
  }
  std::snprintf(line, sizeof line, "range_ratio %.2f\n", s.range_ratio);
  out << line;
  return out.str();
}

std::string render_depth_tsv(const DepthStats& s) {
  std::ostringstream out;
  out << "category\trecords\tp25_think\tmedian_think\tp75_think\tmedian_answer\n";
  for (const auto& r : s.rows)
    out << r.category << '\t' << r.record_count << '\t' << r.p25_think << '\t'
        << r.median_think_chars << '\t' << r.p75_think << '\t' << r.median_answer_chars << '\n';
  out << "range_ratio\t" << format_double(s.range_ratio) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Record file

namespace {

constexpr std::string_view kHeaderPrefix = "# trajectory-corpus schema=";

json observation_fields(const Turn& t) {
  json j = {{"k", t.index},
            {"reasoning", t.reasoning},
            {"code", t.code},
            {"label", to_string(t.observation.label)},
            {"diagnostic", t.observation.diagnostic},
            {"source", to_string(t.observation.source)}};
  if (t.observation.numeric_outputs) j["numeric_outputs"] = *t.observation.numeric_outputs;
  if (t.observation.diff_summary) j["diff_summary"] = *t.observation.diff_summary;
  return j;
}

template <typename T, typename Parse>
T enum_field(const json& j, const char* key, Parse parse) {
  auto v = parse(j.at(key).get<std::string>());
  if (!v) throw std::invalid_argument(std::string("bad value for '") + key + "'");
  return *v;
}

}  // namespace

std::string serialize_record(const CorpusRecord& r) {
  const auto& t = r.trajectory;
  json turns = json::array();
  for (const auto& turn : t.turns) turns.push_back(observation_fields(turn));
  json j = {{"trajectory_id", t.trajectory_id},
            {"seed_id", t.seed_id},
            {"bundle_digest", t.bundle_digest},
            {"feedback_source", to_string(t.feedback_source)},
            {"provenance", to_string(r.provenance)},
            {"terminal", to_string(t.terminal)},
            {"category", r.category},
            {"turns", turns}};
  if (r.verification)
    j["verification"] = {{"final_candidate_real_label",
                          to_string(r.verification->final_candidate_real_label)},
                         {"audited", r.verification->audited}};
  else
    j["verification"] = nullptr;
  // dump() escapes control characters, so a record is always one line.
  return j.dump();
}

CorpusRecord parse_record(std::string_view line, std::size_t line_number) {
  try {
    const json j = json::parse(line);
    CorpusRecord r;
    auto& t = r.trajectory;
    t.trajectory_id = j.at("trajectory_id").get<std::string>();
    t.seed_id = j.at("seed_id").get<std::string>();
    t.bundle_digest = j.at("bundle_digest").get<std::string>();
    t.feedback_source = enum_field<FeedbackSource>(j, "feedback_source", parse_feedback_source);
    t.terminal = enum_field<TerminalStatus>(j, "terminal", parse_terminal);
    r.provenance = enum_field<Provenance>(j, "provenance", parse_provenance);
    r.category = j.at("category").get<std::string>();
    for (const auto& jt : j.at("turns")) {
      Turn turn;
      turn.index = jt.at("k").get<std::size_t>();
      turn.reasoning = jt.at("reasoning").get<std::string>();
      turn.code = jt.at("code").get<std::string>();
      turn.observation.label = enum_field<OutcomeLabel>(jt, "label", parse_label);
      turn.observation.diagnostic = jt.at("diagnostic").get<std::string>();
      turn.observation.source = enum_field<ObservationSource>(jt, "source", parse_observation_source);
      if (jt.contains("numeric_outputs"))
        turn.observation.numeric_outputs = jt["numeric_outputs"].get<std::vector<double>>();
      if (jt.contains("diff_summary"))
        turn.observation.diff_summary = jt["diff_summary"].get<std::string>();
      t.turns.push_back(std::move(turn));
    }
    const auto& v = j.at("verification");
    if (!v.is_null())
      r.verification = Verification{
          enum_field<OutcomeLabel>(v, "final_candidate_real_label", parse_label),
          v.at("audited").get<bool>()};
    if ((r.provenance == Provenance::RealExecution) !=
        (t.feedback_source == FeedbackSource::RealExecution))
      throw std::runtime_error("provenance contradicts feedback_source");
    if (r.provenance == Provenance::WorldModelVerified && !r.verification)
      throw std::runtime_error("verified record without verification");
    return r;
  } catch (const std::exception& e) {
    throw RecordParseError(line_number, e.what());
  }
}

std::string serialize_corpus(const std::vector<CorpusRecord>& records) {
  std::string out(kHeaderPrefix);
  out += std::to_string(kCorpusSchemaVersion) + "\n";
  for (const auto& r : records) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

std::vector<CorpusRecord> parse_corpus(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0].rfind(kHeaderPrefix, 0) != 0)
    throw RecordParseError(1, "missing '# trajectory-corpus schema=N' header");
  std::int64_t version = 0;
  try {
    version = parse_int(trim(lines[0].substr(kHeaderPrefix.size())));
  } catch (const ParseError&) {
    throw RecordParseError(1, "bad schema version");
  }
  if (version != kCorpusSchemaVersion)
    throw SchemaVersionMismatch("corpus schema " + std::to_string(version) + ", expected " +
                                std::to_string(kCorpusSchemaVersion));
  std::vector<CorpusRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    out.push_back(parse_record(lines[i], i + 1));
  }
  return out;
}

std::size_t export_records(const std::vector<CorpusRecord>& records,
                           const std::filesystem::path& path, bool include_unverified) {
  std::vector<CorpusRecord> kept;
  for (const auto& r : records)
    if (include_unverified || exportable(r)) kept.push_back(r);
  write_file_atomic(path, serialize_corpus(kept));
  return kept.size();
}

std::vector<CorpusRecord> import_records(const std::filesystem::path& path) {
  return parse_corpus(read_file(path));
}

namespace {
constexpr std::string_view kTurnsHeader = "# training-turns schema=";
}  // namespace

std::string serialize_turns(const std::vector<TrainingTurn>& turns) {
  std::string out(kTurnsHeader);
  out += std::to_string(kCorpusSchemaVersion) + "\n";
  for (const auto& t : turns) {
    json j = {{"domain", to_string(t.domain)},
              {"bundle_digest", t.bundle_digest},
              {"memory_budget", t.bundle_features.memory_budget},
              {"step_limit", t.bundle_features.step_limit},
              {"artifact_count", t.bundle_features.artifact_count},
              {"code", t.code},
              {"label", to_string(t.true_observation.label)},
              {"diagnostic", t.true_observation.diagnostic}};
    if (t.true_observation.numeric_outputs) j["numeric_outputs"] = *t.true_observation.numeric_outputs;
    if (t.true_observation.diff_summary) j["diff_summary"] = *t.true_observation.diff_summary;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<TrainingTurn> parse_turns(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0].rfind(kTurnsHeader, 0) != 0)
    throw RecordParseError(1, "missing '# training-turns schema=N' header");
  if (trim(lines[0].substr(kTurnsHeader.size())) != std::to_string(kCorpusSchemaVersion))
    throw SchemaVersionMismatch("unsupported training-turns schema");
  std::vector<TrainingTurn> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      const json j = json::parse(lines[i]);
      TrainingTurn t;
      t.domain = enum_field<Domain>(j, "domain", parse_domain);
      t.bundle_digest = j.at("bundle_digest").get<std::string>();
      t.bundle_features = {j.at("memory_budget").get<std::int64_t>(),
                           j.at("step_limit").get<std::int64_t>(),
                           j.at("artifact_count").get<std::int64_t>()};
      t.code = j.at("code").get<std::string>();
      t.true_observation.label = enum_field<OutcomeLabel>(j, "label", parse_label);
      t.true_observation.diagnostic = j.at("diagnostic").get<std::string>();
      t.true_observation.source = ObservationSource::Real;
      if (j.contains("numeric_outputs"))
        t.true_observation.numeric_outputs = j["numeric_outputs"].get<std::vector<double>>();
      if (j.contains("diff_summary"))
        t.true_observation.diff_summary = j["diff_summary"].get<std::string>();
      out.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw RecordParseError(i + 1, e.what());
    }
  }
  return out;
}

}  // namespace trajforge
