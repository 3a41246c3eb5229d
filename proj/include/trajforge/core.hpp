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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trajforge {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TRAJFORGE_DEFINE_ERROR(Name)   \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

TRAJFORGE_DEFINE_ERROR(UnsupportedDomain);
TRAJFORGE_DEFINE_ERROR(ParseError);

enum class Domain : std::uint8_t {
  GpuKernel,
  ChipDesign,
  Embedded,
  CodeOpt,
  Cad,
  Reference,
};

inline constexpr std::array<Domain, 6> kAllDomains = {
    Domain::GpuKernel, Domain::ChipDesign, Domain::Embedded,
    Domain::CodeOpt,   Domain::Cad,        Domain::Reference};

std::string_view to_string(Domain d);
std::optional<Domain> parse_domain(std::string_view s);

// The order of this enum is the tie-break order used by the world model.
enum class OutcomeLabel : std::uint8_t {
  Pass,
  CompilationError,
  MemoryFault,
  GeometryError,
  WrongOutput,
  Timeout,
  BackendUnavailable,
};

inline constexpr std::size_t kNumLabels = 7;

inline constexpr std::array<OutcomeLabel, kNumLabels> kAllLabels = {
    OutcomeLabel::Pass,          OutcomeLabel::CompilationError,
    OutcomeLabel::MemoryFault,   OutcomeLabel::GeometryError,
    OutcomeLabel::WrongOutput,   OutcomeLabel::Timeout,
    OutcomeLabel::BackendUnavailable};

inline constexpr std::size_t label_index(OutcomeLabel l) {
  return static_cast<std::size_t>(l);
}

std::string_view to_string(OutcomeLabel l);
std::optional<OutcomeLabel> parse_label(std::string_view s);

enum class ObservationSource : std::uint8_t { Real, Simulated };

std::string_view to_string(ObservationSource s);
// Kind of environment that produced a trajectory's feedback.
enum class FeedbackSource : std::uint8_t { RealExecution, WorldModel };

std::string_view to_string(FeedbackSource s);
std::optional<FeedbackSource> parse_feedback_source(std::string_view s);

std::optional<ObservationSource> parse_observation_source(std::string_view s);

// Structured execution feedback for one candidate.
struct Observation {
  OutcomeLabel label = OutcomeLabel::Pass;
  std::string diagnostic;
  std::optional<std::vector<double>> numeric_outputs;
  std::optional<std::string> diff_summary;
  std::int64_t wall_time_ms = 0;
  ObservationSource source = ObservationSource::Real;

  // wall_time_ms is measured, never compared.
  friend bool operator==(const Observation& a, const Observation& b) {
    return a.label == b.label && a.diagnostic == b.diagnostic &&
           a.numeric_outputs == b.numeric_outputs &&
           a.diff_summary == b.diff_summary && a.source == b.source;
  }
};

}  // namespace trajforge
