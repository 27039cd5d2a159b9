#include "caprl/env/env.hpp"

#include <cctype>
#include <mutex>

#include "caprl/env/trajectory.hpp"

namespace caprl::env {

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

struct ToolCallMatch {
  std::string name;
  nlohmann::json args;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Finds the last well-formed `name({...})` in `text`. Brace matching skips
// string literals so JSON values containing braces do not confuse it.
std::optional<ToolCallMatch> find_tool_call(const std::string& text) {
  std::optional<ToolCallMatch> best;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] != '(' || text[i + 1] != '{') continue;
    std::size_t name_end = i;
    std::size_t name_begin = name_end;
    while (name_begin > 0 && is_ident_char(text[name_begin - 1])) --name_begin;
    if (name_begin == name_end) continue;
    if (std::isdigit(static_cast<unsigned char>(text[name_begin]))) continue;

    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t j = i + 1;
    std::size_t json_end = std::string::npos;
    for (; j < text.size(); ++j) {
      char c = text[j];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        --depth;
        if (depth == 0) {
          json_end = j;
          break;
        }
      }
    }
    if (json_end == std::string::npos) continue;
    if (json_end + 1 >= text.size() || text[json_end + 1] != ')') continue;
    nlohmann::json args = nlohmann::json::parse(
        text.substr(i + 1, json_end - i), nullptr, /*allow_exceptions=*/false);
    if (args.is_discarded() || !args.is_object()) continue;
    best = ToolCallMatch{text.substr(name_begin, name_end - name_begin), std::move(args),
                         name_begin, json_end + 2};
  }
  return best;
}

}  // namespace

AgentAction parse_action(const std::string& canonical) {
  AgentAction action;
  if (auto call = find_tool_call(canonical)) {
    action.kind = AgentAction::Kind::kToolCall;
    action.name = call->name;
    action.args = call->args;
    return action;
  }
  action.kind = AgentAction::Kind::kMessage;
  action.text = trim(canonical);
  return action;
}

namespace {

std::map<std::string, ActionExtractor>& extractor_table() {
  static std::map<std::string, ActionExtractor> table = {
      {"tool_call_v1",
       [](const std::string& text) -> std::optional<std::string> {
         if (auto call = find_tool_call(text)) {
           return text.substr(call->begin, call->end - call->begin);
         }
         std::string msg = trim(text);
         if (msg.empty()) return std::nullopt;
         return msg;
       }},
      {"verbatim_token",
       [](const std::string& text) -> std::optional<std::string> {
         std::string t = trim(text);
         if (t.empty()) return std::nullopt;
         std::size_t ws = t.find_first_of(" \t\r\n");
         return ws == std::string::npos ? t : t.substr(0, ws);
       }},
  };
  return table;
}

std::mutex& extractor_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

const ActionExtractor& extractor(const std::string& id) {
  std::lock_guard<std::mutex> lock(extractor_mutex());
  auto& table = extractor_table();
  auto it = table.find(id);
  if (it == table.end()) throw ProtocolError("unknown action extractor '" + id + "'");
  return it->second;
}

void register_extractor(const std::string& id, ActionExtractor fn) {
  std::lock_guard<std::mutex> lock(extractor_mutex());
  auto& table = extractor_table();
  if (table.count(id)) throw ProtocolError("action extractor '" + id + "' already registered");
  table.emplace(id, std::move(fn));
}

bool has_extractor(const std::string& id) {
  std::lock_guard<std::mutex> lock(extractor_mutex());
  return extractor_table().count(id) > 0;
}

void EnvRegistry::register_env(const EnvSpec& spec, EnvFactory factory) {
  if (spec.name.empty()) throw ProtocolError("environment name may not be empty");
  if (entries_.count(spec.name)) {
    throw ProtocolError("environment '" + spec.name + "' already registered");
  }
  if (!has_extractor(spec.action_extractor_id)) {
    throw ProtocolError("environment '" + spec.name + "' names unknown extractor '" +
                        spec.action_extractor_id + "'");
  }
  entries_.emplace(spec.name, Entry{spec, std::move(factory)});
}

bool EnvRegistry::contains(const std::string& name) const { return entries_.count(name) > 0; }

const EnvSpec& EnvRegistry::spec(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ProtocolError("environment '" + name + "' not registered");
  return it->second.spec;
}

std::unique_ptr<EnvState> EnvRegistry::make(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ProtocolError("environment '" + name + "' not registered");
  return it->second.factory();
}

std::vector<std::string> EnvRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

EnvRegistry& global_registry() {
  static EnvRegistry registry;
  return registry;
}

std::string build_prompt(const std::string& system_prompt, const std::vector<Step>& steps) {
  std::string prompt;
  if (!system_prompt.empty()) {
    prompt += system_prompt;
    prompt += '\n';
  }
  for (const auto& s : steps) {
    prompt += s.role == StepRole::kObservation ? "[obs] " : "[act] ";
    prompt += s.text;
    prompt += '\n';
  }
  return prompt;
}

}  // namespace caprl::env
