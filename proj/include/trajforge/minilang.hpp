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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajforge/core.hpp"

namespace trajforge::minilang {

// MiniLang: line 1 is `mem N`; then one op per line from
//   set i v | add i j k | sub i j k | jnz i L | out i
// Blank lines are skipped and cost nothing. `jnz` targets a physical line
// number holding an op. Checks run in a fixed order: compile, memory,
// step limit, outputs.

enum class OpCode : std::uint8_t { Set, Add, Sub, Jnz, Out };

struct Instruction {
  OpCode op;
  std::int64_t args[3] = {0, 0, 0};
  std::size_t line = 0;  // 1-based physical line
};

struct Program {
  std::int64_t declared_memory = 0;
  std::vector<Instruction> code;
  std::size_t line_count = 0;
};

struct CompileError {
  std::size_t line;
  std::string message;
};

// Parses and statically checks syntax; returns the error on failure.
std::optional<CompileError> compile(std::string_view source, Program& out);

struct RunResult {
  OutcomeLabel label;
  std::string diagnostic;
  std::optional<std::vector<double>> outputs;
  std::optional<std::string> diff_summary;
  std::int64_t steps = 0;
};

RunResult run(std::string_view source, std::int64_t memory_budget,
              std::int64_t step_limit, std::span<const std::int64_t> expected);

std::vector<std::int64_t> parse_expected(std::string_view text);

}  // namespace trajforge::minilang
