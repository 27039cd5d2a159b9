#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace caprl::synth {

struct ToolResult {
  bool ok = false;
  std::string text;  // tool output shown to the agent (error text when !ok)
};

// Executes a named tool against the mutable database. Unknown tools and
// malformed arguments come back as ok=false with an explanatory message;
// nothing here throws on bad agent input. Mutations happen in place.
ToolResult execute_tool(const std::string& name, const nlohmann::json& args, nlohmann::json& db);

// Names the executor understands, sorted. Handy for prompts and tests.
std::vector<std::string> known_tools();

}  // namespace caprl::synth
