#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace caprl::env {

// One transcript entry. Observations cover everything shown to the agent
// (initial task message, tool results, simulated-user turns); actions are the
// agent's raw emissions. The first step of a trajectory is always an
// observation, and roles alternate from there.
enum class StepRole { kObservation, kAction };

struct Step {
  StepRole role = StepRole::kObservation;
  std::string text;

  bool operator==(const Step&) const = default;
};

// A finished episode. `reward` is terminal and lies in [0,1]; `success` is
// derived per environment (reward >= the registered success threshold).
struct Trajectory {
  std::string task_id;
  std::uint64_t episode_seed = 0;
  std::string env_name;
  std::vector<Step> steps;
  double reward = 0.0;
  bool success = false;
  std::map<std::string, std::string> metadata;

  bool operator==(const Trajectory&) const = default;

  // Concatenated text of all agent actions, used by evaluators and labelers.
  std::string action_text() const;
  // Concatenated text of every step.
  std::string full_text() const;
  std::size_t action_count() const;
};

inline constexpr int kTrajectorySchemaVersion = 1;

nlohmann::json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);

// JSONL persistence: one object per line, UTF-8, alphabetical field order
// (see docs/formats in README). Returns the number of records written.
std::size_t write_trajectories(const std::filesystem::path& path,
                               const std::vector<Trajectory>& trajectories);

// Reads a trajectory JSONL file. A malformed record raises ProtocolError
// naming the 1-based line number. Empty files yield an empty list.
std::vector<Trajectory> read_trajectories(const std::filesystem::path& path);

}  // namespace caprl::env
