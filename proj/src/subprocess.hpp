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

#include <chrono>
#include <filesystem>
#include <string>

namespace trajforge::detail {

struct ProcessResult {
  bool started = false;
  bool timed_out = false;
  int exit_status = -1;  // 128+signal when killed by a signal
  std::string output;    // stdout and stderr interleaved
};

// Runs `command` through /bin/sh in `cwd`, killing the process group after
// `timeout`.
ProcessResult run_shell(const std::string& command,
                        const std::filesystem::path& cwd,
                        std::chrono::milliseconds timeout);

// True if the first word of command resolves to an executable.
bool command_available(const std::string& command);

}  // namespace trajforge::detail
