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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace trajforge::cli {

enum ExitCode : int { kOk = 0, kDomainFailure = 1, kConfigFailure = 2 };

// Key-value configuration; relative paths in a file resolve against the
// file's directory. Later assignments win.
class RunConfig {
 public:
  static RunConfig load(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value,
           const std::filesystem::path& base = std::filesystem::current_path());

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback = "") const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::filesystem::path get_path(const std::string& key,
                                 const std::filesystem::path& fallback = {}) const;
  std::vector<std::filesystem::path> get_paths(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  std::filesystem::path out_dir() const { return get_path("out", "out"); }

 private:
  struct Entry {
    std::string value;
    std::filesystem::path base;
  };
  std::map<std::string, Entry> values_;
};

// Entry point shared by the binary and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args);

}  // namespace trajforge::cli
