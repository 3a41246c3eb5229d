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

#include <atomic>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <unistd.h>

#include "trajforge/envstore.hpp"
#include "trajforge/generator.hpp"

namespace trajforge::testing {

inline std::filesystem::path fixture_path(const std::string& rel) {
  return std::filesystem::path(TRAJFORGE_FIXTURES) / rel;
}

// Removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("trajforge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline EnvironmentBundle reference_bundle(const std::string& id, std::int64_t budget,
                                          std::int64_t step_limit, const std::string& expected) {
  return make_bundle(id, Domain::Reference, "reference", {budget, step_limit, 2000},
                     {{"task.txt", "task " + id + "\n"}, {"tests.expected", expected}});
}

inline BundlePtr reference_bundle_ptr(const std::string& id, std::int64_t budget,
                                      std::int64_t step_limit, const std::string& expected) {
  return std::make_shared<const EnvironmentBundle>(reference_bundle(id, budget, step_limit, expected));
}

inline TaskSeed reference_seed(const std::string& id) {
  return {id, Domain::Reference, "emit the requested value", "MiniLang program"};
}

// Records every context it receives and replays a fixed script.
class RecordingGenerator final : public Generator {
 public:
  explicit RecordingGenerator(std::vector<GeneratorTurnOutput> script)
      : script_(std::move(script)) {}

  GeneratorTurnOutput propose(const GeneratorContext& context) override {
    contexts.push_back(context);
    if (calls_ >= script_.size()) throw ScriptExhausted("recording script exhausted");
    return script_[calls_++];
  }

  std::vector<GeneratorContext> contexts;

 private:
  std::vector<GeneratorTurnOutput> script_;
  std::size_t calls_ = 0;
};

}  // namespace trajforge::testing
