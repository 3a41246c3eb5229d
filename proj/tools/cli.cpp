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

#include "trajforge/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "trajforge/audit.hpp"
#include "trajforge/backends.hpp"
#include "trajforge/corpus.hpp"
#include "trajforge/envstore.hpp"
#include "trajforge/generator.hpp"
#include "trajforge/icwm.hpp"
#include "trajforge/synth.hpp"
#include "trajforge/traj_loop.hpp"
#include "trajforge/util.hpp"

namespace fs = std::filesystem;

namespace trajforge::cli {

namespace {

TRAJFORGE_DEFINE_ERROR(ConfigError);

constexpr const char* kTokenEnv = "TRAJFORGE_GENERATOR_TOKEN";

}  // namespace

RunConfig RunConfig::load(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  RunConfig cfg;
  const fs::path base = fs::absolute(path).parent_path();
  std::size_t n = 0;
  for (const auto& raw : split_lines(text)) {
    ++n;
    const std::string line(trim(raw));
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": expected key = value");
    cfg.set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), base);
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value, const fs::path& base) {
  if (key.empty()) throw ConfigError("empty config key");
  values_[key] = Entry{value, base};
}

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second.value;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
  if (!has(key)) return fallback;
  try {
    return parse_int(get(key));
  } catch (const ParseError&) {
    throw ConfigError(key + ": expected an integer, got '" + get(key) + "'");
  }
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  try {
    return parse_double(get(key));
  } catch (const ParseError&) {
    throw ConfigError(key + ": expected a number, got '" + get(key) + "'");
  }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

fs::path RunConfig::get_path(const std::string& key, const fs::path& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    if (fallback.empty() || fallback.is_absolute() || key == "out") return fallback;
    return out_dir() / fallback;
  }
  const fs::path p = it->second.value;
  return p.is_absolute() ? p : it->second.base / p;
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  if (!has(key)) return out;
  for (auto& item : split_trimmed(get(key), ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<fs::path> RunConfig::get_paths(const std::string& key) const {
  std::vector<fs::path> out;
  const auto it = values_.find(key);
  if (it == values_.end()) return out;
  for (const auto& item : get_list(key)) {
    const fs::path p = item;
    out.push_back(p.is_absolute() ? p : it->second.base / p);
  }
  return out;
}

namespace {

struct Globals {
  RunConfig cfg;
  std::size_t parallelism = 1;
  std::uint64_t seed = 0;
  fs::path out;
};

struct SeedSet {
  std::vector<CampaignSeed> seeds;
  BundleIndex index;
};

void add_seeds(const fs::path& path, SeedSet& set) {
  std::set<std::string> seen;
  for (const auto& s : set.seeds) seen.insert(s.seed.seed_id);
  for (auto& entry : load_seed_set(path)) {
    if (!seen.insert(entry.seed.seed_id).second) continue;
    auto bundle = std::make_shared<const EnvironmentBundle>(load_bundle(entry.bundle_dir));
    const auto violations = validate_bundle(*bundle);
    if (!violations.empty())
      throw ConfigError("bundle " + entry.bundle_dir.string() + ": " + violations.front());
    if (bundle->domain != entry.seed.domain)
      throw ConfigError("seed " + entry.seed.seed_id + ": domain differs from its bundle");
    set.index.add(bundle);
    set.seeds.push_back({entry.seed, bundle});
  }
}

fs::path required_path(const RunConfig& cfg, const std::string& key) {
  if (!cfg.has(key)) throw ConfigError("missing config key '" + key + "'");
  return cfg.get_path(key);
}

SeedSet load_seeds(const RunConfig& cfg, const std::string& key) {
  SeedSet set;
  add_seeds(required_path(cfg, cfg.has(key) ? key : "seeds"), set);
  return set;
}

GeneratorFactory make_factory(const RunConfig& cfg) {
  if (cfg.has("policy")) {
    auto policy = std::make_shared<const ScriptedPolicy>(ScriptedPolicy::load(cfg.get_path("policy")));
    return scripted_factory(std::move(policy));
  }
  if (cfg.has("generator.url")) {
    RemoteGeneratorConfig rc;
    rc.url = cfg.get("generator.url");
    rc.model = cfg.get("generator.model", rc.model);
    rc.timeout = std::chrono::milliseconds(cfg.get_int("generator.timeout_ms", rc.timeout.count()));
    rc.token = cfg.get("generator.token");
    if (rc.token.empty()) {
      if (const char* env = std::getenv(kTokenEnv)) rc.token = env;
    }
    if (rc.token.empty())
      throw ConfigError(std::string("generator credential missing: set ") + kTokenEnv);
    return remote_factory(std::move(rc));
  }
  throw ConfigError("no generator configured: set 'policy' or 'generator.url'");
}

LoopConfig loop_config(const RunConfig& cfg) {
  LoopConfig lc;
  const auto k = cfg.get_int("loop.k", static_cast<std::int64_t>(lc.max_correction_rounds));
  if (k < 0) throw ConfigError("loop.k must be non-negative");
  lc.max_correction_rounds = static_cast<std::size_t>(k);
  return lc;
}

std::unique_ptr<PromptRouter> make_router(const RunConfig& cfg) {
  if (cfg.has("router.instructions_dir"))
    return std::make_unique<PromptRouter>(
        PromptRouter::from_directory(cfg.get_path("router.instructions_dir")));
  return std::make_unique<PromptRouter>();
}

TrainingHyper hyper(const Globals& g) {
  TrainingHyper h;
  h.learning_rate = g.cfg.get_double("wm.learning_rate", h.learning_rate);
  h.epochs = static_cast<std::size_t>(g.cfg.get_int("wm.epochs", static_cast<std::int64_t>(h.epochs)));
  h.l2 = g.cfg.get_double("wm.l2", h.l2);
  h.seed = g.seed;
  if (!(h.learning_rate > 0) || h.epochs == 0 || h.l2 < 0)
    throw ConfigError("wm.learning_rate and wm.epochs must be positive, wm.l2 non-negative");
  return h;
}

void write_out(const fs::path& path, const std::string& content) {
  write_file_atomic(path, content);
  std::cout << "wrote " << path.string() << "\n";
}

std::vector<CorpusRecord> read_corpora(const std::vector<fs::path>& paths) {
  std::vector<CorpusRecord> all;
  std::set<std::string> ids;
  for (const auto& p : paths) {
    for (auto& r : import_records(p)) {
      if (!ids.insert(r.trajectory.trajectory_id).second)
        throw DuplicateTrajectory("trajectory " + r.trajectory.trajectory_id + " appears twice");
      all.push_back(std::move(r));
    }
  }
  return all;
}

std::vector<fs::path> default_corpora(const Globals& g, const std::string& key) {
  auto paths = g.cfg.get_paths(key);
  if (!paths.empty()) return paths;
  for (const char* name : {"real.corpus", "amplified.corpus"})
    if (fs::exists(g.out / name)) paths.push_back(g.out / name);
  if (paths.empty()) throw ConfigError("no corpus found under " + g.out.string());
  return paths;
}

std::vector<Trajectory> real_trajectories(const std::vector<CorpusRecord>& records) {
  std::vector<Trajectory> out;
  for (const auto& r : records)
    if (r.provenance == Provenance::RealExecution) out.push_back(r.trajectory);
  return out;
}

std::string format_fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string label_histogram(const std::vector<TrainingTurn>& turns) {
  std::array<std::size_t, kNumLabels> counts{};
  for (const auto& t : turns) ++counts[label_index(t.true_observation.label)];
  std::ostringstream os;
  for (auto l : kAllLabels) os << "  " << to_string(l) << " " << counts[label_index(l)] << "\n";
  return os.str();
}

// --- subcommands -----------------------------------------------------------

int cmd_bundle_validate(const std::vector<std::string>& paths) {
  bool load_failed = false;
  bool invalid = false;
  for (const auto& p : paths) {
    try {
      const auto bundle = load_bundle(p);
      const auto violations = validate_bundle(bundle);
      if (violations.empty()) {
        std::cout << p << ": ok " << bundle.content_digest << "\n";
      } else {
        invalid = true;
        for (const auto& v : violations) std::cout << p << ": " << v << "\n";
      }
    } catch (const Error& e) {
      load_failed = true;
      std::cerr << p << ": " << e.what() << "\n";
    }
  }
  if (load_failed) return kConfigFailure;
  return invalid ? kDomainFailure : kOk;
}

int cmd_run(const Globals& g) {
  const auto seeds = load_seeds(g.cfg, "seeds");
  const auto factory = make_factory(g.cfg);
  const auto router = make_router(g.cfg);
  RealExecutor executor;
  const auto trajectories = run_campaign(seeds.seeds, factory, executor, loop_config(g.cfg),
                                         g.parallelism, g.cfg.get("run.nonce", "0"), router.get());
  AssemblyPolicy policy;
  policy.parallelism = g.parallelism;
  const auto records = assemble(trajectories, {}, executor, seeds.index, policy);

  std::array<std::size_t, 3> terminal{};
  std::size_t turns = 0;
  for (const auto& t : trajectories) {
    ++terminal[static_cast<std::size_t>(t.terminal)];
    turns += t.turns.size();
  }
  std::ostringstream summary;
  summary << "trajectories " << trajectories.size() << "\nturns " << turns << "\n";
  for (auto s : {TerminalStatus::Solved, TerminalStatus::Exhausted, TerminalStatus::Aborted})
    summary << to_string(s) << " " << terminal[static_cast<std::size_t>(s)] << "\n";
  std::cout << summary.str();
  write_out(g.out / "real.corpus", serialize_corpus(records));
  write_out(g.out / "run_summary.txt", summary.str());
  return terminal[static_cast<std::size_t>(TerminalStatus::Aborted)] ? kDomainFailure : kOk;
}

int cmd_train_wm(const Globals& g) {
  const auto seeds = load_seeds(g.cfg, "seeds");
  const auto corpus_path = g.cfg.get_path("train.corpus", "real.corpus");
  const auto records = import_records(corpus_path);
  auto turns = extract_single_turn_pairs(real_trajectories(records), seeds.index);
  const auto holdout = g.cfg.get_int("train.holdout", 0);
  if (holdout < 0) throw ConfigError("train.holdout must be non-negative");
  if (holdout > 0) {
    auto [rest, held] = split_held_out(turns, static_cast<std::size_t>(holdout), g.seed);
    write_out(g.out / "heldout.turns", serialize_turns(held));
    turns = std::move(rest);
  }
  TrainingReport report;
  const auto params = train(turns, hyper(g), 0, &report);
  std::cout << "training turns " << turns.size() << "\n"
            << label_histogram(turns) << "final loss " << format_double(report.final_loss())
            << "\n";
  write_out(g.cfg.get_path("params", "icwm.params"), serialize_parameters(params));
  return kOk;
}

int cmd_amplify(const Globals& g) {
  const bool passthrough = g.cfg.get_bool("wm.passthrough", false);
  SeedSet seeds = load_seeds(g.cfg, "amplify.seeds");
  if (g.cfg.has("seeds") && g.cfg.has("amplify.seeds")) {
    SeedSet training;
    add_seeds(g.cfg.get_path("seeds"), training);
    for (const auto& s : training.seeds) seeds.index.add(s.bundle);
  }
  const auto factory = make_factory(g.cfg);
  const auto router = make_router(g.cfg);
  const auto lc = loop_config(g.cfg);
  const auto every = g.cfg.get_int("audit.every", 100);
  const auto fraction = g.cfg.get_double("audit.sample_fraction", 0.1);
  if (every <= 0) throw ConfigError("audit.every must be positive");
  if (!(fraction > 0 && fraction <= 1)) throw ConfigError("audit.sample_fraction must be in (0, 1]");
  const std::string nonce = g.cfg.get("amplify.nonce", "amplify");

  RealExecutor executor;
  std::shared_ptr<const WorldModelParameters> params;
  std::vector<TrainingTurn> base_turns;
  std::vector<Trajectory> real_reference;
  const auto corpus_path = g.cfg.get_path("train.corpus", "real.corpus");
  if (fs::exists(corpus_path)) real_reference = real_trajectories(import_records(corpus_path));
  if (!passthrough) {
    params = std::make_shared<const WorldModelParameters>(
        parse_parameters(read_file(g.cfg.get_path("params", "icwm.params"))));
    std::vector<Trajectory> known;
    for (const auto& t : real_reference)
      if (seeds.index.find(t.bundle_digest)) known.push_back(t);
    for (auto& t : extract_single_turn_pairs(known, seeds.index))
      if (params->training_keys.count(t.key())) base_turns.push_back(std::move(t));
  }
  const auto h = passthrough ? TrainingHyper{} : hyper(g);

  std::vector<Trajectory> amplified;
  std::vector<TrainingTurn> corrections;
  std::set<std::string> audited;
  std::ostringstream log;
  bool retrained = false;
  const auto chunk = static_cast<std::size_t>(every);
  for (std::size_t start = 0, round = 0; start < seeds.seeds.size(); start += chunk, ++round) {
    const std::vector<CampaignSeed> slice(
        seeds.seeds.begin() + static_cast<std::ptrdiff_t>(start),
        seeds.seeds.begin() + static_cast<std::ptrdiff_t>(std::min(start + chunk, seeds.seeds.size())));
    std::unique_ptr<ExecutionOracle> env;
    if (passthrough)
      env = std::make_unique<PassthroughOracle>(executor);
    else
      env = make_world_model_env(params);
    auto produced = run_campaign(slice, factory, *env, lc, g.parallelism, nonce, router.get());
    const auto result = audit_round(produced, executor, seeds.index, fraction,
                                    nonce + "/" + std::to_string(round), g.parallelism);
    for (const auto& ref : result.sampled) audited.insert(ref.trajectory_id);
    log << "round " << round << " trajectories " << produced.size() << " sampled "
        << result.sampled.size() << " findings " << result.findings.size() << " unverifiable "
        << result.unverifiable.size();
    if (!passthrough && !result.findings.empty()) {
      corrections.insert(corrections.end(), result.corrected_turns.begin(),
                         result.corrected_turns.end());
      auto data = base_turns;
      data.insert(data.end(), corrections.begin(), corrections.end());
      params = std::make_shared<const WorldModelParameters>(train(data, h, params->version));
      retrained = true;
      log << " retrained v" << params->version;
    }
    log << "\n";
    amplified.insert(amplified.end(), std::make_move_iterator(produced.begin()),
                     std::make_move_iterator(produced.end()));
  }

  AssemblyPolicy policy;
  policy.verify_final = g.cfg.get_bool("amplify.verify_final", true);
  policy.verify_all_turns = g.cfg.get_bool("amplify.verify_all_turns", false);
  policy.audited_ids = std::move(audited);
  policy.parallelism = g.parallelism;
  const auto records = assemble({}, amplified, executor, seeds.index, policy);
  std::array<std::size_t, 3> by_provenance{};
  std::size_t unavailable = 0;
  for (const auto& r : records) {
    ++by_provenance[static_cast<std::size_t>(r.provenance)];
    if (r.verification && r.verification->final_candidate_real_label == OutcomeLabel::BackendUnavailable)
      ++unavailable;
  }
  for (auto p : {Provenance::WorldModelVerified, Provenance::WorldModelUnverified})
    log << to_string(p) << " " << by_provenance[static_cast<std::size_t>(p)] << "\n";
  if (!real_reference.empty()) {
    const auto pairs = pair_trajectories(real_reference, amplified);
    if (!pairs.empty())
      log << "agreement " << format_fixed(trajectory_agreement(pairs)) << " over " << pairs.size()
          << " pairs\n";
  }
  std::cout << log.str();
  write_out(g.out / "amplified.corpus", serialize_corpus(records));
  write_out(g.out / "amplify_report.txt", log.str());
  if (retrained) write_out(g.out / "icwm.amplified.params", serialize_parameters(*params));
  // More than 10% of records could not be checked against a real backend.
  if (unavailable * 10 > records.size()) {
    std::cerr << unavailable << " of " << records.size() << " records lacked a backend for verification\n";
    return kDomainFailure;
  }
  return kOk;
}

int cmd_audit(const Globals& g) {
  const bool passthrough = g.cfg.get_bool("wm.passthrough", false);
  const auto seeds = load_seeds(g.cfg, "audit.seeds");
  const auto factory = make_factory(g.cfg);
  const auto router = make_router(g.cfg);
  const auto lc = loop_config(g.cfg);
  const std::string nonce = g.cfg.get("audit.nonce", "audit");
  RealExecutor executor;

  std::shared_ptr<const WorldModelParameters> params;
  std::unique_ptr<ExecutionOracle> proxy;
  if (passthrough) {
    proxy = std::make_unique<PassthroughOracle>(executor);
  } else {
    params = std::make_shared<const WorldModelParameters>(
        parse_parameters(read_file(g.cfg.get_path("params", "icwm.params"))));
    proxy = make_world_model_env(params);
  }
  const auto real = run_campaign(seeds.seeds, factory, executor, lc, g.parallelism, nonce, router.get());
  const auto sim = run_campaign(seeds.seeds, factory, *proxy, lc, g.parallelism, nonce, router.get());
  const auto pairs = pair_trajectories(real, sim);

  std::vector<TrainingTurn> held_out;
  const fs::path held_path = g.cfg.get_path("audit.heldout", "heldout.turns");
  if (g.cfg.has("audit.heldout") || fs::exists(held_path))
    held_out = parse_turns(read_file(held_path));
  else
    held_out = extract_single_turn_pairs(real, seeds.index);

  TurnPredictor predictor;
  std::set<std::string> training_keys;
  if (passthrough) {
    predictor = [&](const TrainingTurn& t) {
      return proxy->evaluate(seeds.index.at(t.bundle_digest), t.code);
    };
  } else {
    predictor = [&](const TrainingTurn& t) {
      return predict(*params, t.domain, t.bundle_features, t.code).observation;
    };
    training_keys = params->training_keys;
  }
  const auto report = run_fidelity_eval(held_out, predictor, training_keys, pairs, seeds.index);
  std::cout << render_fidelity_table(report);
  write_out(g.out / "fidelity.txt", render_fidelity_table(report));
  write_out(g.out / "fidelity.tsv", render_fidelity_tsv(report));
  return kOk;
}

int cmd_stats(const Globals& g) {
  std::vector<CorpusRecord> records;
  for (auto& r : read_corpora(default_corpora(g, "stats.inputs")))
    if (exportable(r)) records.push_back(std::move(r));
  const auto cats = g.cfg.get_list("stats.multi_turn");
  const auto stats = thinking_depth_stats(records, {cats.begin(), cats.end()});
  std::cout << render_depth_table(stats);
  write_out(g.out / "depth_stats.tsv", render_depth_tsv(stats));
  return kOk;
}

int cmd_export(const Globals& g) {
  const auto records = read_corpora(default_corpora(g, "export.inputs"));
  const auto target = g.cfg.get_path("export.output", "corpus.export");
  const auto n = export_records(records, target, g.cfg.get_bool("export.include_unverified", false));
  std::cout << "exported " << n << " of " << records.size() << " records to " << target.string()
            << "\n";
  return kOk;
}

int cmd_make_fixture(const Globals& g, std::size_t count) {
  synth::PolicyOptions options;
  options.max_rounds = loop_config(g.cfg).max_correction_rounds;
  const auto workload = synth::make_workload(g.cfg.get("fixture.prefix", "task"), count, g.seed, options);
  std::ostringstream seeds;
  for (const auto& task : workload.tasks) {
    const fs::path dir = fs::path("bundles") / task.seed.seed_id;
    write_bundle(*task.bundle, g.out / dir);
    seeds << task.seed.seed_id << " | " << to_string(task.seed.domain) << " | " << dir.string()
          << " | " << task.seed.expected_interface << " | " << task.seed.description << "\n";
  }
  write_out(g.out / "seeds.txt", seeds.str());
  workload.policy->save(g.out, "policy.txt");
  write_out(g.out / "trajforge.cfg",
            "seeds = seeds.txt\npolicy = policy.txt\nout = run\nloop.k = " +
                std::to_string(options.max_rounds) + "\n");
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"trajforge: execution-grounded trajectory synthesis"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::string out;
  std::int64_t parallelism = 0;
  std::int64_t seed = 0;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--out", out, "output directory");
  auto* parallelism_opt =
      app.add_option("--parallelism", parallelism, "maximum concurrent trajectories / executions");
  auto* seed_opt = app.add_option("--seed", seed, "random seed for training, splits and fixtures");
  app.add_option("--set", overrides, "override a configuration key (key=value)");

  auto* bundle = app.add_subcommand("bundle", "environment bundle tools");
  bundle->require_subcommand(1);
  auto* validate = bundle->add_subcommand("validate", "load and validate bundles");
  std::vector<std::string> bundle_paths;
  validate->add_option("paths", bundle_paths, "bundle directories")->required();
  auto* run_cmd = app.add_subcommand("run", "synthesize trajectories against real backends");
  auto* train_cmd = app.add_subcommand("train-wm", "train the execution proxy");
  auto* amplify_cmd = app.add_subcommand("amplify", "synthesize trajectories against the proxy");
  auto* audit_cmd = app.add_subcommand("audit", "measure proxy fidelity");
  auto* stats_cmd = app.add_subcommand("stats", "thinking-depth statistics");
  auto* export_cmd = app.add_subcommand("export", "write the sound corpus");
  auto* fixture_cmd = app.add_subcommand("make-fixture", "write a synthetic reference workload");
  std::size_t fixture_count = 20;
  fixture_cmd->add_option("--count", fixture_count, "number of tasks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  try {
    if (validate->parsed()) return cmd_bundle_validate(bundle_paths);

    Globals g;
    if (!config_path.empty()) g.cfg = RunConfig::load(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      g.cfg.set(std::string(trim(kv.substr(0, eq))), std::string(trim(kv.substr(eq + 1))));
    }
    if (!out.empty()) g.cfg.set("out", out);
    if (parallelism_opt->count()) g.cfg.set("parallelism", std::to_string(parallelism));
    if (seed_opt->count()) g.cfg.set("seed", std::to_string(seed));
    const auto p = g.cfg.get_int("parallelism", 1);
    if (p <= 0) throw ConfigError("parallelism must be positive");
    const auto s = g.cfg.get_int("seed", 0);
    if (s < 0) throw ConfigError("seed must be non-negative");
    g.parallelism = static_cast<std::size_t>(p);
    g.seed = static_cast<std::uint64_t>(s);
    g.out = g.cfg.out_dir();
    fs::create_directories(g.out);

    if (run_cmd->parsed()) return cmd_run(g);
    if (train_cmd->parsed()) return cmd_train_wm(g);
    if (amplify_cmd->parsed()) return cmd_amplify(g);
    if (audit_cmd->parsed()) return cmd_audit(g);
    if (stats_cmd->parsed()) return cmd_stats(g);
    if (export_cmd->parsed()) return cmd_export(g);
    if (fixture_cmd->parsed()) return cmd_make_fixture(g, fixture_count);
    return kConfigFailure;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const MissingManifest& e) {
    std::cerr << "environment error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const MissingArtifact& e) {
    std::cerr << "environment error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const ManifestParseError& e) {
    std::cerr << "environment error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const GeneratorUnavailable& e) {
    std::cerr << "generator unavailable: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const ContaminationError& e) {
    std::cerr << "contamination: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "filesystem error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  }
}

}  // namespace trajforge::cli
