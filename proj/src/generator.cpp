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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "trajforge/generator.hpp"

#include <httplib.h>
#include <json.hpp>

#include <sstream>

#include "trajforge/util.hpp"

namespace trajforge {

namespace fs = std::filesystem;
using nlohmann::json;

void ScriptedPolicy::add(PolicyKey key, GeneratorTurnOutput output) {
  if (output.code.empty()) throw Error("scripted policy entry for '" + key.seed_id + "' has empty code");
  table_.insert_or_assign(std::move(key), std::move(output));
}

const GeneratorTurnOutput* ScriptedPolicy::find(const PolicyKey& key) const {
  auto it = table_.find(key);
  return it == table_.end() ? nullptr : &it->second;
}

ScriptedPolicy ScriptedPolicy::load(const fs::path& path) {
  ScriptedPolicy policy;
  const auto text = read_file(path);
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    auto parts = split_trimmed(line, '|');
    if (parts.size() != 5) throw ParseError(where + ": expected 5 '|'-separated fields");
    PolicyKey key;
    key.seed_id = parts[0];
    if (parts[1] != "-") {
      auto l = parse_label(parts[1]);
      if (!l) throw ParseError(where + ": unknown label '" + parts[1] + "'");
      key.prior = *l;
    }
    try {
      auto t = parse_int(parts[2]);
      if (t < 0) throw ParseError("negative");
      key.turn = static_cast<std::size_t>(t);
    } catch (const ParseError&) {
      throw ParseError(where + ": bad turn index '" + parts[2] + "'");
    }
    GeneratorTurnOutput out;
    out.reasoning = read_file(path.parent_path() / parts[3]);
    out.code = read_file(path.parent_path() / parts[4]);
    policy.add(std::move(key), std::move(out));
  }
  return policy;
}

void ScriptedPolicy::save(const fs::path& dir, const std::string& file_name) const {
  std::ostringstream index;
  std::size_t n = 0;
  for (const auto& [key, out] : table_) {
    const std::string stem = "entry" + std::to_string(n++);
    write_file_atomic(dir / "policy" / (stem + ".think"), out.reasoning);
    write_file_atomic(dir / "policy" / (stem + ".code"), out.code);
    index << key.seed_id << " | " << (key.prior ? to_string(*key.prior) : "-") << " | "
          << key.turn << " | policy/" << stem << ".think | policy/" << stem << ".code\n";
  }
  write_file_atomic(dir / file_name, index.str());
}

GeneratorTurnOutput ScriptedGenerator::propose(const GeneratorContext& context) {
  PolicyKey key;
  key.seed_id = context.seed.seed_id;
  key.turn = context.history.size();
  if (!context.history.empty()) key.prior = context.history.back().observation.label;
  if (const auto* out = policy_->find(key)) return *out;
  throw ScriptExhausted("no scripted entry for (" + key.seed_id + ", " +
                        (key.prior ? std::string(to_string(*key.prior)) : "-") + ", " +
                        std::to_string(key.turn) + ")");
}

GeneratorFactory scripted_factory(std::shared_ptr<const ScriptedPolicy> policy) {
  return [policy] { return std::make_unique<ScriptedGenerator>(policy); };
}

// ---------------------------------------------------------------------------

std::string RemoteGenerator::build_request(const GeneratorContext& ctx, const std::string& model) {
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", ctx.instructions.instruction_text}});
  std::string task = "Task " + ctx.seed.seed_id + " (" + std::string(to_string(ctx.seed.domain)) +
                     ")\n" + ctx.seed.description;
  if (!ctx.seed.expected_interface.empty())
    task += "\nRequired interface: " + ctx.seed.expected_interface;
  task +=
      "\nReply with your reasoning inside <think></think> followed by the complete code in one "
      "fenced block.";
  messages.push_back({{"role", "user"}, {"content", task}});
  for (const auto& h : ctx.history) {
    messages.push_back({{"role", "assistant"},
                        {"content", "<think>" + h.reasoning + "</think>\n```\n" + h.code + "\n```"}});
    std::string feedback = "Execution result: " + std::string(to_string(h.observation.label));
    if (!h.observation.diagnostic.empty()) feedback += "\nDiagnostic:\n" + h.observation.diagnostic;
    if (h.observation.diff_summary) feedback += "\nDiff: " + *h.observation.diff_summary;
    feedback += "\nDiagnose the fault and produce a revised solution.";
    messages.push_back({{"role", "user"}, {"content", feedback}});
  }
  json body = {{"model", model}, {"messages", messages}};
  return body.dump();
}

std::optional<GeneratorTurnOutput> RemoteGenerator::parse_reply(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  const json* msg = nullptr;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty() &&
      j["choices"][0].contains("message"))
    msg = &j["choices"][0]["message"];
  if (!msg || !msg->contains("content") || !(*msg)["content"].is_string()) return std::nullopt;
  const std::string content = (*msg)["content"].get<std::string>();

  GeneratorTurnOutput out;
  std::string rest = content;
  if (msg->contains("reasoning_content") && (*msg)["reasoning_content"].is_string())
    out.reasoning = (*msg)["reasoning_content"].get<std::string>();
  auto open = content.find("<think>");
  auto close = content.find("</think>");
  if (open != std::string::npos && close != std::string::npos && close > open) {
    out.reasoning = std::string(trim(content.substr(open + 7, close - open - 7)));
    rest = content.substr(close + 8);
  }
  auto fence = rest.find("```");
  if (fence == std::string::npos) return std::nullopt;
  auto body_start = rest.find('\n', fence);
  if (body_start == std::string::npos) return std::nullopt;
  auto fence_end = rest.find("```", body_start + 1);
  if (fence_end == std::string::npos) return std::nullopt;
  out.code = rest.substr(body_start + 1, fence_end - body_start - 1);
  if (!out.code.empty() && out.code.back() == '\n') out.code.pop_back();
  if (trim(out.code).empty()) return std::nullopt;
  return out;
}

GeneratorTurnOutput RemoteGenerator::propose(const GeneratorContext& context) {
  std::string base = config_.url;
  std::string prefix;
  auto scheme = base.find("://");
  auto slash = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash != std::string::npos) {
    prefix = base.substr(slash);
    base = base.substr(0, slash);
  }
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);

  const std::string request = build_request(context, config_.model);
  for (int attempt = 0; attempt <= config_.max_parse_retries; ++attempt) {
    auto res = client.Post(prefix + "/v1/chat/completions", headers, request, "application/json");
    if (!res)
      throw GeneratorUnavailable("generator endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw GeneratorUnavailable("generator endpoint returned HTTP " + std::to_string(res->status));
    if (auto out = parse_reply(res->body)) return *out;
  }
  throw GeneratorUnavailable("generator reply could not be parsed after " +
                             std::to_string(config_.max_parse_retries) + " retries");
}

GeneratorFactory remote_factory(RemoteGeneratorConfig config) {
  return [config] { return std::make_unique<RemoteGenerator>(config); };
}

}  // namespace trajforge
