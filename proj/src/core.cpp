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

#include "trajforge/core.hpp"

namespace trajforge {

namespace {

constexpr std::array<std::string_view, 6> kDomainNames = {
    "gpu_kernel", "chip_design", "embedded", "code_opt", "cad", "reference"};

constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "Pass",         "Compilation_Error", "Memory_Fault",       "Geometry_Error",
    "Wrong_Output", "Timeout",           "Backend_Unavailable"};

}  // namespace

std::string_view to_string(Domain d) {
  return kDomainNames[static_cast<std::size_t>(d)];
}

std::optional<Domain> parse_domain(std::string_view s) {
  for (std::size_t i = 0; i < kDomainNames.size(); ++i)
    if (kDomainNames[i] == s) return static_cast<Domain>(i);
  return std::nullopt;
}

std::string_view to_string(OutcomeLabel l) { return kLabelNames[label_index(l)]; }

std::optional<OutcomeLabel> parse_label(std::string_view s) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i)
    if (kLabelNames[i] == s) return static_cast<OutcomeLabel>(i);
  return std::nullopt;
}

std::string_view to_string(ObservationSource s) {
  return s == ObservationSource::Real ? "Real" : "Simulated";
}

std::optional<ObservationSource> parse_observation_source(std::string_view s) {
  if (s == "Real") return ObservationSource::Real;
  if (s == "Simulated") return ObservationSource::Simulated;
  return std::nullopt;
}

std::string_view to_string(FeedbackSource s) {
  return s == FeedbackSource::RealExecution ? "RealExecution" : "WorldModel";
}

std::optional<FeedbackSource> parse_feedback_source(std::string_view s) {
  if (s == "RealExecution") return FeedbackSource::RealExecution;
  if (s == "WorldModel") return FeedbackSource::WorldModel;
  return std::nullopt;
}

}  // namespace trajforge
