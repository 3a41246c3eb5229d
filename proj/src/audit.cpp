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

#include "trajforge/audit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "trajforge/util.hpp"
#include "trajforge/worker_pool.hpp"

namespace trajforge {

double outcome_accuracy(std::span<const ObservationPair> pairs) {
  if (pairs.empty()) throw EmptyEvaluationSet("no prediction pairs");
  std::size_t hits = 0;
  for (const auto& [pred, truth] : pairs) hits += pred.label == truth.label;
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

double trajectory_agreement(std::span<const TrajectoryPair> paired) {
  if (paired.empty()) throw EmptyEvaluationSet("no trajectory pairs");
  std::size_t agree = 0;
  for (const auto& [real, sim] : paired) {
    if (real.seed_id != sim.seed_id || real.bundle_digest != sim.bundle_digest)
      throw PairingError("pair mismatch: " + real.seed_id + " vs " + sim.seed_id);
    if (real.feedback_source != FeedbackSource::RealExecution ||
        sim.feedback_source != FeedbackSource::WorldModel)
      throw PairingError("pair " + real.seed_id + " has wrong feedback sources");
    agree += real.solved() == sim.solved();
  }
  return static_cast<double>(agree) / static_cast<double>(paired.size());
}

std::vector<TrajectoryPair> pair_trajectories(const std::vector<Trajectory>& real,
                                              const std::vector<Trajectory>& simulated) {
  std::map<std::pair<std::string, std::string>, const Trajectory*> sims;
  for (const auto& s : simulated) sims.emplace(std::make_pair(s.seed_id, s.bundle_digest), &s);
  std::vector<TrajectoryPair> out;
  for (const auto& r : real) {
    auto it = sims.find({r.seed_id, r.bundle_digest});
    if (it != sims.end()) out.emplace_back(r, *it->second);
  }
  return out;
}

namespace {

double mean_defined(const std::vector<double>& xs) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : xs)
    if (!std::isnan(x)) {
      sum += x;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : std::nan("");
}

}  // namespace

FidelityReport run_fidelity_eval(const std::vector<TrainingTurn>& held_out,
                                 const TurnPredictor& predictor,
                                 const std::set<std::string>& training_keys,
                                 const std::vector<TrajectoryPair>& pairs,
                                 const BundleIndex& bundles) {
  for (const auto& t : held_out)
    if (training_keys.count(t.key()))
      throw ContaminationError("held-out turn " + t.key() + " appears in the training set");

  std::map<Domain, std::vector<ObservationPair>> by_domain_turns;
  for (const auto& t : held_out) by_domain_turns[t.domain].emplace_back(predictor(t), t.true_observation);
  std::map<Domain, std::vector<TrajectoryPair>> by_domain_pairs;
  for (const auto& p : pairs) by_domain_pairs[bundles.at(p.first.bundle_digest).domain].push_back(p);

  std::set<Domain> domains;
  for (const auto& [d, _] : by_domain_turns) domains.insert(d);
  for (const auto& [d, _] : by_domain_pairs) domains.insert(d);

  FidelityReport report;
  std::vector<double> accs, agrs, gaps;
  for (Domain d : domains) {
    FidelityRow row;
    row.domain = d;
    const auto& turns = by_domain_turns[d];
    const auto& tp = by_domain_pairs[d];
    row.held_out_turns = turns.size();
    row.trajectory_pairs = tp.size();
    row.outcome_accuracy = turns.empty() ? std::nan("") : outcome_accuracy(turns);
    row.trajectory_agreement = tp.empty() ? std::nan("") : trajectory_agreement(tp);
    row.gap_pp = (row.outcome_accuracy - row.trajectory_agreement) * 100.0;
    accs.push_back(row.outcome_accuracy);
    agrs.push_back(row.trajectory_agreement);
    gaps.push_back(row.gap_pp);
    report.rows.push_back(row);
  }
  report.mean_outcome_accuracy = mean_defined(accs);
  report.mean_trajectory_agreement = mean_defined(agrs);
  report.mean_gap_pp = mean_defined(gaps);
  return report;
}

FidelityReport run_fidelity_eval(const std::vector<TrainingTurn>& held_out,
                                 const WorldModelParameters& params,
                                 const std::vector<TrajectoryPair>& pairs,
                                 const BundleIndex& bundles) {
  return run_fidelity_eval(
      held_out,
      [&](const TrainingTurn& t) {
        return predict(params, t.domain, t.bundle_features, t.code).observation;
      },
      params.training_keys, pairs, bundles);
}

namespace {

std::string fmt_fraction(double x) {
  if (std::isnan(x)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string fmt_pp(double x) {
  if (std::isnan(x)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

std::string render_fidelity_table(const FidelityReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %9s %9s %7s %10s %8s\n", "domain", "held_out", "accuracy",
                "pairs", "agreement", "gap_pp");
  out << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-12s %9zu %9s %7zu %10s %8s\n",
                  std::string(to_string(row.domain)).c_str(), row.held_out_turns,
                  fmt_fraction(row.outcome_accuracy).c_str(), row.trajectory_pairs,
                  fmt_fraction(row.trajectory_agreement).c_str(), fmt_pp(row.gap_pp).c_str());
    out << line;
  }
  std::snprintf(line, sizeof line, "%-12s %9s %9s %7s %10s %8s\n", "mean", "",
                fmt_fraction(r.mean_outcome_accuracy).c_str(), "",
                fmt_fraction(r.mean_trajectory_agreement).c_str(), fmt_pp(r.mean_gap_pp).c_str());
  out << line;
  return out.str();
}

std::string render_fidelity_tsv(const FidelityReport& r) {
  std::ostringstream out;
  out << "domain\theld_out\taccuracy\tpairs\tagreement\tgap_pp\n";
  for (const auto& row : r.rows) {
    out << to_string(row.domain) << '\t' << row.held_out_turns << '\t'
        << fmt_fraction(row.outcome_accuracy) << '\t' << row.trajectory_pairs << '\t'
        << fmt_fraction(row.trajectory_agreement) << '\t' << fmt_pp(row.gap_pp) << '\n';
  }
  out << "mean\t\t" << fmt_fraction(r.mean_outcome_accuracy) << "\t\t"
      << fmt_fraction(r.mean_trajectory_agreement) << '\t' << fmt_pp(r.mean_gap_pp) << '\n';
  return out.str();
}

std::uint64_t seed_from_nonce(std::string_view nonce) {
  const std::string h = sha256_hex(nonce);
  return std::stoull(h.substr(0, 16), nullptr, 16);
}

namespace {

// Partial Fisher-Yates; returns `count` distinct indices of [0, n) in
// ascending order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  count = std::min(count, n);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::pair<std::vector<TrainingTurn>, std::vector<TrainingTurn>> split_held_out(
    const std::vector<TrainingTurn>& turns, std::size_t held_out_count, std::uint64_t seed) {
  std::vector<std::string> keys;
  keys.reserve(turns.size());
  for (const auto& t : turns) keys.push_back(t.key());

  std::vector<std::size_t> order(turns.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  // Whole key groups move to the held-out side until the count is reached.
  std::set<std::string> held_keys;
  std::size_t taken = 0;
  std::map<std::string, std::size_t> group_size;
  for (const auto& k : keys) ++group_size[k];
  for (std::size_t i : order) {
    if (taken >= held_out_count) break;
    if (held_keys.count(keys[i])) continue;
    if (taken + group_size[keys[i]] > held_out_count) continue;
    held_keys.insert(keys[i]);
    taken += group_size[keys[i]];
  }
  std::pair<std::vector<TrainingTurn>, std::vector<TrainingTurn>> out;
  for (std::size_t i = 0; i < turns.size(); ++i)
    (held_keys.count(keys[i]) ? out.second : out.first).push_back(turns[i]);
  return out;
}

AuditResult audit_round(const std::vector<Trajectory>& amplified, const ExecutionOracle& executor,
                        const BundleIndex& bundles, double sample_fraction, std::string_view nonce,
                        std::size_t parallelism) {
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
    throw std::invalid_argument("sample_fraction must be in (0, 1]");
  if (executor.feedback_source() != FeedbackSource::RealExecution)
    throw std::invalid_argument("audit requires a real executor");

  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < amplified.size(); ++i) {
    if (amplified[i].feedback_source != FeedbackSource::WorldModel)
      throw SourceMismatch("audit expects world-model trajectories; got " +
                           amplified[i].trajectory_id);
    for (std::size_t j = 0; j < amplified[i].turns.size(); ++j) all.emplace_back(i, j);
  }
  const auto count = static_cast<std::size_t>(
      std::ceil(sample_fraction * static_cast<double>(all.size()) - 1e-9));
  const auto chosen = sample_indices(all.size(), count, seed_from_nonce(nonce));

  const auto real = parallel_map<Observation>(chosen.size(), parallelism, [&](std::size_t s) {
    const auto [i, j] = all[chosen[s]];
    try {
      return executor.evaluate(bundles.at(amplified[i].bundle_digest), amplified[i].turns[j].code);
    } catch (const std::exception& e) {
      Observation o;
      o.label = OutcomeLabel::BackendUnavailable;
      o.diagnostic = e.what();
      return o;
    }
  });

  AuditResult result;
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    const auto [i, j] = all[chosen[s]];
    const auto& traj = amplified[i];
    const auto& turn = traj.turns[j];
    TurnRef ref{traj.trajectory_id, j};
    result.sampled.push_back(ref);
    if (real[s].label == OutcomeLabel::BackendUnavailable) {
      result.unverifiable.push_back(ref);
      continue;
    }
    const auto& bundle = bundles.at(traj.bundle_digest);
    TrainingTurn corrected{bundle.domain, traj.bundle_digest, bundle_features(bundle), turn.code,
                           real[s]};
    result.verified_turns.push_back(corrected);
    if (real[s].label != turn.observation.label) {
      result.findings.push_back({ref, turn.observation.label, real[s].label, corrected});
      result.corrected_turns.push_back(std::move(corrected));
    }
  }
  return result;
}

}  // namespace trajforge
