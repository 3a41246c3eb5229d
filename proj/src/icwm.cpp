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

#include "trajforge/icwm.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "trajforge/util.hpp"

namespace trajforge {

BundleFeatures bundle_features(const EnvironmentBundle& b) {
  return {b.limits.memory_budget, b.limits.step_limit,
          static_cast<std::int64_t>(b.artifacts.size())};
}

std::string TrainingTurn::key() const { return bundle_digest + ":" + sha256_hex(code); }

std::vector<TrainingTurn> extract_single_turn_pairs(const std::vector<Trajectory>& trajectories,
                                                    const BundleIndex& bundles) {
  std::vector<TrainingTurn> out;
  for (const auto& t : trajectories) {
    if (t.feedback_source != FeedbackSource::RealExecution)
      throw SourceMismatch("trajectory " + t.trajectory_id + " was not produced by real execution");
    if (t.turns.empty()) continue;
    const auto& bundle = bundles.at(t.bundle_digest);
    for (const auto& turn : t.turns) {
      if (turn.observation.source != ObservationSource::Real)
        throw SourceMismatch("trajectory " + t.trajectory_id + " has a simulated observation");
      out.push_back({bundle.domain, t.bundle_digest, bundle_features(bundle), turn.code,
                     turn.observation});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Features

std::vector<std::string> tokenize(std::string_view code) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : code) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || c == '_') {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace {

constexpr std::string_view kOov = "oov";

std::vector<std::string> make_structural_names() {
  std::vector<std::string> names;
  for (Domain d : kAllDomains) names.push_back("domain:" + std::string(to_string(d)));
  for (const char* r : {"res:mem_over_budget", "res:mem_within_budget", "res:no_mem_decl",
                        "res:index_over_declared"})
    names.emplace_back(r);
  for (const char* l : {"len:1-2", "len:3-5", "len:6-10", "len:11-20", "len:21+"})
    names.emplace_back(l);
  names.emplace_back(kOov);
  return names;
}

bool parse_nonneg(std::string_view s, std::int64_t& v) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && p == s.data() + s.size() && v >= 0;
}

// Cell-index operand positions of MiniLang-shaped lines; other domains
// rarely match and contribute nothing.
std::size_t cell_operands(std::string_view op) {
  if (op == "set" || op == "jnz" || op == "out") return 1;
  if (op == "add" || op == "sub") return 3;
  return 0;
}

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& Vocabulary::structural_names() {
  static const std::vector<std::string> names = make_structural_names();
  return names;
}

Vocabulary::Vocabulary() : Vocabulary(from_names(structural_names())) {}

Vocabulary Vocabulary::from_names(std::vector<std::string> names) {
  Vocabulary v{Empty{}};
  v.names_ = std::move(names);
  for (std::uint32_t i = 0; i < v.names_.size(); ++i) {
    if (!v.ids_.emplace(v.names_[i], i).second)
      throw ParseError("duplicate feature name '" + v.names_[i] + "'");
  }
  auto it = v.ids_.find(kOov);
  if (it == v.ids_.end()) throw ParseError("vocabulary lacks the oov feature");
  v.oov_id_ = it->second;
  return v;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& feature_names) {
  std::set<std::string> structural(structural_names().begin(), structural_names().end());
  std::set<std::string> tokens;
  for (const auto& row : feature_names)
    for (const auto& n : row)
      if (!structural.count(n)) tokens.insert(n);
  std::vector<std::string> names = structural_names();
  names.insert(names.end(), tokens.begin(), tokens.end());
  return from_names(std::move(names));
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool FeatureVector::contains(std::uint32_t id) const {
  return std::binary_search(entries.begin(), entries.end(), std::pair<std::uint32_t, double>{id, 0.0},
                            [](const auto& a, const auto& b) { return a.first < b.first; });
}

std::vector<std::string> feature_names(Domain domain, const BundleFeatures& bf,
                                       std::string_view code) {
  std::vector<std::string> names;
  names.push_back("domain:" + std::string(to_string(domain)));

  const auto tokens = tokenize(code);
  std::optional<std::int64_t> declared;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    std::int64_t v = 0;
    if (tokens[i] == "mem" && parse_nonneg(tokens[i + 1], v)) {
      declared = v;
      break;
    }
  }
  if (!declared) {
    names.emplace_back("res:no_mem_decl");
  } else if (*declared > bf.memory_budget) {
    names.emplace_back("res:mem_over_budget");
  } else {
    names.emplace_back("res:mem_within_budget");
  }

  std::size_t nonblank = 0;
  bool index_over = false;
  for (auto line : split_lines(code)) {
    auto words = split_words(line);
    if (words.empty()) continue;
    ++nonblank;
    if (!declared || words.empty()) continue;
    const std::size_t n = cell_operands(words[0]);
    for (std::size_t a = 1; a <= n && a < words.size(); ++a) {
      std::int64_t idx = 0;
      if (parse_nonneg(words[a], idx) && idx >= *declared) index_over = true;
    }
  }
  if (index_over) names.emplace_back("res:index_over_declared");
  if (nonblank <= 2)
    names.emplace_back("len:1-2");
  else if (nonblank <= 5)
    names.emplace_back("len:3-5");
  else if (nonblank <= 10)
    names.emplace_back("len:6-10");
  else if (nonblank <= 20)
    names.emplace_back("len:11-20");
  else
    names.emplace_back("len:21+");

  for (const auto& t : tokens) names.push_back("u:" + t);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
    names.push_back("b:" + tokens[i] + "|" + tokens[i + 1]);
  return names;
}

FeatureVector featurize(Domain domain, const BundleFeatures& bf, std::string_view code,
                        const Vocabulary& vocabulary) {
  std::vector<std::uint32_t> ids;
  for (const auto& n : feature_names(domain, bf, code)) {
    auto id = vocabulary.find(n);
    ids.push_back(id ? *id : vocabulary.oov_id());
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  FeatureVector fv;
  fv.entries.reserve(ids.size());
  for (auto id : ids) fv.entries.emplace_back(id, 1.0);
  return fv;
}

// ---------------------------------------------------------------------------
// Training

double training_loss(const Dataset& data, std::span<const double> w, std::span<const double> b,
                     double l2, std::vector<double>* gw, std::vector<double>* gb) {
  const std::size_t dim = data.dim;
  if (gw) gw->assign(kNumLabels * dim, 0.0);
  if (gb) gb->assign(kNumLabels, 0.0);
  const double inv_n = data.rows.empty() ? 0.0 : 1.0 / static_cast<double>(data.rows.size());

  double loss = 0.0;
  std::array<double, kNumLabels> z{};
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const auto& row = data.rows[r];
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      double s = b[c];
      const double* wc = w.data() + c * dim;
      for (const auto& [id, v] : row.entries) s += wc[id] * v;
      z[c] = s;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& zc : z) {
      zc = std::exp(zc - zmax);
      sum += zc;
    }
    const std::size_t y = data.labels[r];
    loss += -(std::log(z[y] / sum));
    if (gw || gb) {
      for (std::size_t c = 0; c < kNumLabels; ++c) {
        const double d = (z[c] / sum - (c == y ? 1.0 : 0.0)) * inv_n;
        if (gb) (*gb)[c] += d;
        if (gw) {
          double* g = gw->data() + c * dim;
          for (const auto& [id, v] : row.entries) g[id] += d * v;
        }
      }
    }
  }
  loss *= inv_n;
  double sq = 0.0;
  for (double x : w) sq += x * x;
  loss += 0.5 * l2 * sq;
  if (gw)
    for (std::size_t i = 0; i < w.size(); ++i) (*gw)[i] += l2 * w[i];
  return loss;
}

namespace {

struct SortedTurn {
  std::string key;
  const TrainingTurn* turn;
};

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

WorldModelParameters train(const std::vector<TrainingTurn>& turns, const TrainingHyper& hyper,
                           std::uint64_t previous_version, TrainingReport* report) {
  if (turns.empty()) throw EmptyTrainingSet("no training turns");
  if (!(hyper.learning_rate > 0) || hyper.epochs == 0 || hyper.l2 < 0)
    throw std::invalid_argument("training hyperparameters must be positive");

  std::vector<SortedTurn> sorted;
  sorted.reserve(turns.size());
  for (const auto& t : turns) {
    if (t.true_observation.source != ObservationSource::Real)
      throw SourceMismatch("training turn carries a simulated observation");
    sorted.push_back({t.key(), &t});
  }
  std::sort(sorted.begin(), sorted.end(), [](const SortedTurn& a, const SortedTurn& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.turn->true_observation.label < b.turn->true_observation.label;
  });

  WorldModelParameters p;
  p.version = previous_version + 1;

  Sha256 digest;
  std::vector<std::vector<std::string>> names;
  names.reserve(sorted.size());
  for (const auto& s : sorted) {
    digest.update(s.key);
    digest.update(" ");
    digest.update(to_string(s.turn->true_observation.label));
    digest.update("\n");
    p.training_keys.insert(s.key);
    names.push_back(feature_names(s.turn->domain, s.turn->bundle_features, s.turn->code));
  }
  p.training_digest = digest.hex_digest();
  p.vocabulary = Vocabulary::build(names);

  Dataset data;
  data.dim = p.vocabulary.size();
  for (const auto& s : sorted) {
    data.rows.push_back(
        featurize(s.turn->domain, s.turn->bundle_features, s.turn->code, p.vocabulary));
    data.labels.push_back(label_index(s.turn->true_observation.label));
  }

  std::mt19937_64 rng(hyper.seed);
  p.weights.resize(kNumLabels * data.dim);
  for (double& x : p.weights) x = (uniform01(rng) - 0.5) * 2e-3;
  p.bias.fill(0.0);
  fit(data, p.weights, p.bias, hyper, report);
  return p;
}

double fit(const Dataset& data, std::vector<double>& weights, std::array<double, kNumLabels>& bias,
           const TrainingHyper& hyper, TrainingReport* report) {
  if (weights.size() != kNumLabels * data.dim)
    throw std::invalid_argument("weight vector does not match the dataset dimension");
  TrainingReport local;
  TrainingReport& rep = report ? *report : local;
  rep.loss_per_epoch.clear();
  rep.label_counts.fill(0);
  for (auto y : data.labels) ++rep.label_counts[y];

  std::vector<double> gw, gb, next_gw, next_gb;
  std::vector<double> next_w(weights.size());
  std::array<double, kNumLabels> next_b{};
  double loss = training_loss(data, weights, bias, hyper.l2, &gw, &gb);
  for (std::size_t e = 0; e < hyper.epochs; ++e) {
    rep.loss_per_epoch.push_back(loss);
    // Halve the step until the objective does not rise.
    double step = hyper.learning_rate;
    for (int tries = 0; tries < 40; ++tries, step *= 0.5) {
      for (std::size_t i = 0; i < weights.size(); ++i) next_w[i] = weights[i] - step * gw[i];
      for (std::size_t c = 0; c < kNumLabels; ++c) next_b[c] = bias[c] - step * gb[c];
      const double next = training_loss(data, next_w, next_b, hyper.l2, &next_gw, &next_gb);
      if (next <= loss) {
        weights.swap(next_w);
        bias = next_b;
        gw.swap(next_gw);
        gb.swap(next_gb);
        loss = next;
        break;
      }
    }
  }
  rep.loss_per_epoch.push_back(loss);
  return loss;
}

WorldModelParameters constant_label_parameters(OutcomeLabel label, std::uint64_t version) {
  WorldModelParameters p;
  p.version = version;
  p.weights.assign(kNumLabels * p.vocabulary.size(), 0.0);
  p.bias.fill(0.0);
  p.bias[label_index(label)] = 50.0;
  p.training_digest = sha256_hex("constant:" + std::string(to_string(label)));
  return p;
}

// ---------------------------------------------------------------------------
// Prediction

std::string_view diagnostic_template(Domain domain, OutcomeLabel label) {
  using L = OutcomeLabel;
  switch (domain) {
    case Domain::GpuKernel:
      if (label == L::MemoryFault) return "shared memory request exceeds per-SM limit near '{token}'";
      break;
    case Domain::ChipDesign:
      if (label == L::CompilationError) return "synthesis error near '{token}'";
      break;
    case Domain::Embedded:
      if (label == L::MemoryFault) return "bus fault: invalid peripheral access near '{token}'";
      break;
    case Domain::Cad:
      if (label == L::GeometryError) return "BRep check failed near '{token}'";
      break;
    case Domain::Reference:
      if (label == L::Timeout) return "step limit exceeded near '{token}'";
      break;
    case Domain::CodeOpt:
      break;
  }
  switch (label) {
    case L::Pass: return "";
    case L::CompilationError: return "compilation failed near '{token}'";
    case L::MemoryFault: return "memory request exceeds limit near '{token}'";
    case L::GeometryError: return "geometry check failed near '{token}'";
    case L::WrongOutput: return "output mismatch near '{token}'";
    case L::Timeout: return "execution exceeded its time limit near '{token}'";
    case L::BackendUnavailable: return "backend unavailable";
  }
  return "";
}

namespace {

std::string display_name(std::string_view feature) {
  if (feature == kOov) return "<unknown>";
  auto colon = feature.find(':');
  std::string s(colon == std::string_view::npos ? feature : feature.substr(colon + 1));
  std::replace(s.begin(), s.end(), '|', ' ');
  return s;
}

}  // namespace

WorldModelPrediction predict(const WorldModelParameters& params, Domain domain,
                             const BundleFeatures& bf, std::string_view code) {
  const FeatureVector fv = featurize(domain, bf, code, params.vocabulary);
  const std::size_t dim = params.dim();

  WorldModelPrediction pred;
  std::array<double, kNumLabels> z{};
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    double s = params.bias[c];
    for (const auto& [id, v] : fv.entries) s += params.weights[c * dim + id] * v;
    z[c] = s;
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    pred.label_scores[c] = std::exp(z[c] - zmax);
    sum += pred.label_scores[c];
  }
  std::size_t best = 0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    pred.label_scores[c] /= sum;
    if (pred.label_scores[c] > pred.label_scores[best]) best = c;
  }
  const auto label = static_cast<OutcomeLabel>(best);

  std::string diag(diagnostic_template(domain, label));
  auto slot = diag.find("{token}");
  if (slot != std::string::npos) {
    std::uint32_t top = fv.entries.empty() ? params.vocabulary.oov_id() : fv.entries.front().first;
    double top_w = -INFINITY;
    for (const auto& [id, v] : fv.entries) {
      const double w = params.weights[best * dim + id];
      if (w > top_w) {
        top_w = w;
        top = id;
      }
    }
    diag.replace(slot, 7, display_name(params.vocabulary.name(top)));
  }

  pred.observation.label = label;
  pred.observation.diagnostic = std::move(diag);
  pred.observation.source = ObservationSource::Simulated;
  return pred;
}

WorldModelPrediction predict(const WorldModelParameters& params, const EnvironmentBundle& bundle,
                             std::string_view code) {
  return predict(params, bundle.domain, bundle_features(bundle), code);
}

std::unique_ptr<ExecutionOracle> make_world_model_env(
    std::shared_ptr<const WorldModelParameters> params) {
  return std::make_unique<WorldModelOracle>(std::move(params));
}

// ---------------------------------------------------------------------------
// Parameter file

std::string serialize_parameters(const WorldModelParameters& p) {
  std::ostringstream out;
  out << "icwm-params v" << p.version << "\n";
  out << "digest " << p.training_digest << "\n";
  for (std::uint32_t id = 0; id < p.vocabulary.size(); ++id)
    out << "feat " << id << " " << p.vocabulary.name(id) << "\n";
  for (auto l : kAllLabels) out << "b " << to_string(l) << " " << format_double(p.bias[label_index(l)]) << "\n";
  for (auto l : kAllLabels)
    for (std::uint32_t id = 0; id < p.dim(); ++id) {
      const double w = p.weight(l, id);
      if (w != 0.0) out << "w " << to_string(l) << " " << id << " " << format_double(w) << "\n";
    }
  for (const auto& k : p.training_keys) out << "t " << k << "\n";
  return out.str();
}

WorldModelParameters parse_parameters(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0].rfind("icwm-params v", 0) != 0)
    throw ParseError("parameter file: missing 'icwm-params v<version>' header");
  WorldModelParameters p;
  const auto where = [](std::size_t i) { return "parameter file line " + std::to_string(i + 1) + ": "; };
  try {
    p.version = static_cast<std::uint64_t>(parse_int(lines[0].substr(13)));
  } catch (const ParseError&) {
    throw ParseError(where(0) + "bad version");
  }

  std::vector<std::string> names;
  struct PendingWeight {
    std::size_t label;
    std::uint32_t id;
    double value;
  };
  std::vector<PendingWeight> pending;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto line = lines[i];
    if (trim(line).empty()) continue;
    auto sp = line.find(' ');
    const auto tag = line.substr(0, sp);
    const auto rest = sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
    try {
      if (tag == "digest") {
        p.training_digest = std::string(rest);
      } else if (tag == "feat") {
        auto s2 = rest.find(' ');
        if (s2 == std::string_view::npos) throw ParseError("expected 'feat <id> <name>'");
        auto id = parse_int(rest.substr(0, s2));
        if (id != static_cast<std::int64_t>(names.size())) throw ParseError("feature ids must be dense and ordered");
        names.emplace_back(rest.substr(s2 + 1));
      } else if (tag == "b" || tag == "w") {
        auto parts = split_trimmed(rest, ' ');
        auto label = parse_label(parts.at(0));
        if (!label) throw ParseError("unknown label '" + parts[0] + "'");
        if (tag == "b") {
          if (parts.size() != 2) throw ParseError("expected 'b <label> <decimal>'");
          p.bias[label_index(*label)] = parse_double(parts[1]);
        } else {
          if (parts.size() != 3) throw ParseError("expected 'w <label> <id> <decimal>'");
          pending.push_back({label_index(*label), static_cast<std::uint32_t>(parse_int(parts[1])),
                             parse_double(parts[2])});
        }
      } else if (tag == "t") {
        p.training_keys.insert(std::string(rest));
      } else {
        throw ParseError("unknown line tag '" + std::string(tag) + "'");
      }
    } catch (const ParseError& e) {
      throw ParseError(where(i) + e.what());
    } catch (const std::out_of_range&) {
      throw ParseError(where(i) + "truncated line");
    }
  }
  p.vocabulary = Vocabulary::from_names(std::move(names));
  p.weights.assign(kNumLabels * p.dim(), 0.0);
  for (const auto& w : pending) {
    if (w.id >= p.dim()) throw ParseError("weight references unknown feature id " + std::to_string(w.id));
    p.weights[w.label * p.dim() + w.id] = w.value;
  }
  return p;
}

}  // namespace trajforge
