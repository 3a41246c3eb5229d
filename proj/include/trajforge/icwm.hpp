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

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajforge/backends.hpp"
#include "trajforge/core.hpp"
#include "trajforge/envstore.hpp"
#include "trajforge/traj_loop.hpp"

namespace trajforge {

TRAJFORGE_DEFINE_ERROR(SourceMismatch);
TRAJFORGE_DEFINE_ERROR(EmptyTrainingSet);

struct BundleFeatures {
  std::int64_t memory_budget = 0;
  std::int64_t step_limit = 0;
  std::int64_t artifact_count = 0;

  friend bool operator==(const BundleFeatures&, const BundleFeatures&) = default;
};

BundleFeatures bundle_features(const EnvironmentBundle& bundle);

struct TrainingTurn {
  Domain domain = Domain::Reference;
  std::string bundle_digest;
  BundleFeatures bundle_features;
  std::string code;
  Observation true_observation;

  // "<bundle_digest>:<sha256(code)>", the contamination and sort key.
  std::string key() const;

  friend bool operator==(const TrainingTurn&, const TrainingTurn&) = default;
};

// One turn per trajectory turn, in traversal order. Throws SourceMismatch on
// world-model trajectories.
std::vector<TrainingTurn> extract_single_turn_pairs(const std::vector<Trajectory>& trajectories,
                                                    const BundleIndex& bundles);

// Lowercased runs of [A-Za-z0-9_].
std::vector<std::string> tokenize(std::string_view code);

// Feature ids: structural features first (fixed order), then every unigram
// "u:<tok>" and bigram "b:<tok>|<tok>" seen in training, sorted.
class Vocabulary {
 public:
  Vocabulary();

  static Vocabulary build(const std::vector<std::vector<std::string>>& feature_names);
  static const std::vector<std::string>& structural_names();
  static std::size_t structural_count() { return structural_names().size(); }

  std::optional<std::uint32_t> find(std::string_view name) const;
  std::uint32_t oov_id() const { return oov_id_; }
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  std::size_t token_count() const { return names_.size() - structural_count(); }

  // Rebuilds from an id-ordered name list (parameter files).
  static Vocabulary from_names(std::vector<std::string> names);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.names_ == b.names_; }

 private:
  struct Empty {};
  explicit Vocabulary(Empty) {}

  std::vector<std::string> names_;
  std::map<std::string, std::uint32_t, std::less<>> ids_;
  std::uint32_t oov_id_ = 0;
};

// Sorted by id, unique ids, binary weights.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool contains(std::uint32_t id) const;
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Names of all features the input activates, before vocabulary lookup.
std::vector<std::string> feature_names(Domain domain, const BundleFeatures& bf,
                                       std::string_view code);

FeatureVector featurize(Domain domain, const BundleFeatures& bf, std::string_view code,
                        const Vocabulary& vocabulary);

struct WorldModelParameters {
  std::uint64_t version = 0;
  Vocabulary vocabulary;
  std::vector<double> weights;  // kNumLabels rows of vocabulary.size()
  std::array<double, kNumLabels> bias{};
  std::string training_digest;
  std::set<std::string> training_keys;

  std::size_t dim() const { return vocabulary.size(); }
  double weight(OutcomeLabel l, std::uint32_t id) const {
    return weights[label_index(l) * dim() + id];
  }

  friend bool operator==(const WorldModelParameters&, const WorldModelParameters&) = default;
};

// Zero weights with a dominant bias on one label; the "patched proxy" used
// to exercise audits.
WorldModelParameters constant_label_parameters(OutcomeLabel label, std::uint64_t version = 1);

struct TrainingHyper {
  double learning_rate = 0.5;
  std::size_t epochs = 400;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

struct TrainingReport {
  std::vector<double> loss_per_epoch;  // loss before each update, then final
  std::array<std::size_t, kNumLabels> label_counts{};
  double final_loss() const { return loss_per_epoch.empty() ? 0.0 : loss_per_epoch.back(); }
};

// Full-batch gradient descent on mean multinomial cross-entropy plus
// (l2/2)*|W|^2. Inputs are sorted by (key, label) first, so the result does
// not depend on input order.
WorldModelParameters train(const std::vector<TrainingTurn>& turns, const TrainingHyper& hyper,
                           std::uint64_t previous_version = 0, TrainingReport* report = nullptr);

// Objective on an already featurized dataset. Gradients are written when the
// output pointers are non-null.
struct Dataset {
  std::vector<FeatureVector> rows;
  std::vector<std::size_t> labels;
  std::size_t dim = 0;
};

double training_loss(const Dataset& data, std::span<const double> weights,
                     std::span<const double> bias, double l2,
                     std::vector<double>* grad_weights = nullptr,
                     std::vector<double>* grad_bias = nullptr);

// Full-batch descent from the given starting point. A step that would raise
// the objective is halved until it does not, so recorded losses never
// increase. Returns the final loss.
double fit(const Dataset& data, std::vector<double>& weights, std::array<double, kNumLabels>& bias,
           const TrainingHyper& hyper, TrainingReport* report = nullptr);

struct WorldModelPrediction {
  Observation observation;
  std::array<double, kNumLabels> label_scores{};
};

WorldModelPrediction predict(const WorldModelParameters& params, Domain domain,
                             const BundleFeatures& bf, std::string_view code);
WorldModelPrediction predict(const WorldModelParameters& params, const EnvironmentBundle& bundle,
                             std::string_view code);

// Template for a predicted label; "{token}" is replaced by the strongest
// active feature.
std::string_view diagnostic_template(Domain domain, OutcomeLabel label);

class WorldModelOracle final : public ExecutionOracle {
 public:
  explicit WorldModelOracle(std::shared_ptr<const WorldModelParameters> params)
      : params_(std::move(params)) {}
  Observation evaluate(const EnvironmentBundle& bundle, std::string_view code) const override {
    return predict(*params_, bundle, code).observation;
  }
  FeedbackSource feedback_source() const override { return FeedbackSource::WorldModel; }
  const WorldModelParameters& parameters() const { return *params_; }

 private:
  std::shared_ptr<const WorldModelParameters> params_;
};

// Delegates to a real executor but reports itself as the world model.
class PassthroughOracle final : public ExecutionOracle {
 public:
  explicit PassthroughOracle(const ExecutionOracle& real) : real_(real) {}
  Observation evaluate(const EnvironmentBundle& bundle, std::string_view code) const override {
    Observation o = real_.evaluate(bundle, code);
    o.source = ObservationSource::Simulated;
    return o;
  }
  FeedbackSource feedback_source() const override { return FeedbackSource::WorldModel; }

 private:
  const ExecutionOracle& real_;
};

std::unique_ptr<ExecutionOracle> make_world_model_env(
    std::shared_ptr<const WorldModelParameters> params);

// Text parameter file:
//   icwm-params v<version>
//   digest <training digest>
//   feat <id> <name>
//   b <label> <decimal>
//   w <label> <id> <decimal>      (non-zero weights only)
//   t <training key>
std::string serialize_parameters(const WorldModelParameters& params);
WorldModelParameters parse_parameters(std::string_view text);

}  // namespace trajforge
