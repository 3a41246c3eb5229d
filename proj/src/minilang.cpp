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

#include "trajforge/minilang.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include "trajforge/util.hpp"

namespace trajforge::minilang {

namespace {

std::vector<std::string_view> words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool to_int(std::string_view s, std::int64_t& v) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && p == s.data() + s.size();
}

std::string at(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) +
                                   static_cast<std::uint64_t>(b));
}

std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) -
                                   static_cast<std::uint64_t>(b));
}

std::string list(std::span<const std::int64_t> v) {
  std::ostringstream s;
  s << "[";
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  s << "]";
  return s.str();
}

}  // namespace

std::optional<CompileError> compile(std::string_view source, Program& out) {
  out = Program{};
  const auto lines = split_lines(source);
  out.line_count = lines.size();
  if (lines.empty()) return CompileError{1, "expected 'mem N' declaration"};

  auto head = words(lines[0]);
  if (head.size() != 2 || head[0] != "mem")
    return CompileError{1, "expected 'mem N' declaration"};
  if (!to_int(head[1], out.declared_memory) || out.declared_memory <= 0)
    return CompileError{1, "memory size must be a positive integer"};

  std::map<std::size_t, bool> op_lines;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    auto w = words(lines[i]);
    if (w.empty()) continue;
    Instruction ins;
    ins.line = lineno;
    std::size_t arity = 0;
    if (w[0] == "set") {
      ins.op = OpCode::Set;
      arity = 2;
    } else if (w[0] == "add") {
      ins.op = OpCode::Add;
      arity = 3;
    } else if (w[0] == "sub") {
      ins.op = OpCode::Sub;
      arity = 3;
    } else if (w[0] == "jnz") {
      ins.op = OpCode::Jnz;
      arity = 2;
    } else if (w[0] == "out") {
      ins.op = OpCode::Out;
      arity = 1;
    } else if (w[0] == "mem") {
      return CompileError{lineno, "'mem' is only allowed on line 1"};
    } else {
      return CompileError{lineno, "unknown op '" + std::string(w[0]) + "'"};
    }
    if (w.size() - 1 != arity)
      return CompileError{lineno, "'" + std::string(w[0]) + "' expects " +
                                      std::to_string(arity) + " arguments, got " +
                                      std::to_string(w.size() - 1)};
    for (std::size_t a = 0; a < arity; ++a) {
      if (!to_int(w[a + 1], ins.args[a]))
        return CompileError{lineno, "argument '" + std::string(w[a + 1]) +
                                        "' is not an integer"};
      const bool is_value = ins.op == OpCode::Set && a == 1;
      if (!is_value && ins.args[a] < 0)
        return CompileError{lineno, "negative operand " +
                                        std::to_string(ins.args[a])};
    }
    op_lines[lineno] = true;
    out.code.push_back(ins);
  }
  for (const auto& ins : out.code) {
    if (ins.op != OpCode::Jnz) continue;
    const auto target = static_cast<std::size_t>(ins.args[1]);
    if (!op_lines.count(target))
      return CompileError{ins.line, "jump target " + std::to_string(target) +
                                        " is not an op line"};
  }
  return std::nullopt;
}

RunResult run(std::string_view source, std::int64_t memory_budget,
              std::int64_t step_limit, std::span<const std::int64_t> expected) {
  Program prog;
  if (auto err = compile(source, prog))
    return {OutcomeLabel::CompilationError, at(err->line) + err->message, {}, {}, 0};

  if (prog.declared_memory > memory_budget)
    return {OutcomeLabel::MemoryFault,
            at(1) + "memory request exceeds budget: requested " +
                std::to_string(prog.declared_memory) + " vs budget " +
                std::to_string(memory_budget),
            {}, {}, 0};

  auto cell_args = [](const Instruction& ins) -> std::size_t {
    switch (ins.op) {
      case OpCode::Set: return 1;
      case OpCode::Add:
      case OpCode::Sub: return 3;
      case OpCode::Jnz: return 1;
      case OpCode::Out: return 1;
    }
    return 0;
  };
  for (const auto& ins : prog.code) {
    for (std::size_t a = 0; a < cell_args(ins); ++a) {
      if (ins.args[a] >= prog.declared_memory)
        return {OutcomeLabel::MemoryFault,
                at(ins.line) + "cell index " + std::to_string(ins.args[a]) +
                    " out of range for declared memory " +
                    std::to_string(prog.declared_memory),
                {}, {}, 0};
    }
  }

  std::map<std::size_t, std::size_t> line_to_pc;
  for (std::size_t pc = 0; pc < prog.code.size(); ++pc)
    line_to_pc[prog.code[pc].line] = pc;

  std::vector<std::int64_t> cells(static_cast<std::size_t>(prog.declared_memory), 0);
  std::vector<std::int64_t> emitted;
  std::vector<std::size_t> emitted_at;
  std::int64_t steps = 0;
  std::size_t pc = 0;
  while (pc < prog.code.size()) {
    const auto& ins = prog.code[pc];
    if (++steps > step_limit)
      return {OutcomeLabel::Timeout,
              at(ins.line) + "step limit " + std::to_string(step_limit) +
                  " exceeded",
              {}, {}, steps - 1};
    auto cell = [&](int a) -> std::int64_t& {
      return cells[static_cast<std::size_t>(ins.args[a])];
    };
    std::size_t next = pc + 1;
    switch (ins.op) {
      case OpCode::Set: cell(0) = ins.args[1]; break;
      case OpCode::Add: cell(2) = wrap_add(cell(0), cell(1)); break;
      case OpCode::Sub: cell(2) = wrap_sub(cell(0), cell(1)); break;
      case OpCode::Jnz:
        if (cell(0) != 0) next = line_to_pc.at(static_cast<std::size_t>(ins.args[1]));
        break;
      case OpCode::Out:
        emitted.push_back(cell(0));
        emitted_at.push_back(ins.line);
        break;
    }
    pc = next;
  }

  std::vector<double> outputs(emitted.begin(), emitted.end());
  if (emitted != std::vector<std::int64_t>(expected.begin(), expected.end())) {
    std::string diag;
    const std::size_t n = std::min(emitted.size(), expected.size());
    std::size_t pos = 0;
    while (pos < n && emitted[pos] == expected[pos]) ++pos;
    if (pos < n) {
      diag = at(emitted_at[pos]) + "output mismatch at position " +
             std::to_string(pos) + ": expected " + std::to_string(expected[pos]) +
             ", got " + std::to_string(emitted[pos]);
    } else if (emitted.size() > expected.size()) {
      diag = at(emitted_at[pos]) + "unexpected extra output " +
             std::to_string(emitted[pos]);
    } else {
      diag = at(prog.line_count) + "expected " + std::to_string(expected.size()) +
             " outputs, got " + std::to_string(emitted.size());
    }
    return {OutcomeLabel::WrongOutput, diag, std::move(outputs),
            "expected " + list(expected) + " got " + list(emitted), steps};
  }
  return {OutcomeLabel::Pass, "", std::move(outputs), std::nullopt, steps};
}

std::vector<std::int64_t> parse_expected(std::string_view text) {
  std::vector<std::int64_t> out;
  for (auto line : split_lines(text)) {
    auto t = trim(line);
    if (t.empty()) continue;
    out.push_back(parse_int(t));
  }
  return out;
}

}  // namespace trajforge::minilang
