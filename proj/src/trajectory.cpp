#include "caprl/env/trajectory.hpp"

#include <fstream>

#include "caprl/common.hpp"

namespace caprl::env {

std::string Trajectory::action_text() const {
  std::string out;
  for (const auto& s : steps) {
    if (s.role == StepRole::kAction) {
      out += s.text;
      out += '\n';
    }
  }
  return out;
}

std::string Trajectory::full_text() const {
  std::string out;
  for (const auto& s : steps) {
    out += s.text;
    out += '\n';
  }
  return out;
}

std::size_t Trajectory::action_count() const {
  std::size_t n = 0;
  for (const auto& s : steps) {
    if (s.role == StepRole::kAction) ++n;
  }
  return n;
}

nlohmann::json trajectory_to_json(const Trajectory& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"role", s.role == StepRole::kObservation ? "obs" : "act"},
                     {"text", s.text}});
  }
  return {{"schema_version", kTrajectorySchemaVersion},
          {"task_id", t.task_id},
          {"episode_seed", t.episode_seed},
          {"env", t.env_name},
          {"steps", std::move(steps)},
          {"reward", t.reward},
          {"success", t.success},
          {"meta", t.metadata}};
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ProtocolError("trajectory record is not an object");
  int version = j.at("schema_version").get<int>();
  if (version != kTrajectorySchemaVersion) {
    throw ProtocolError("unsupported trajectory schema_version " + std::to_string(version));
  }
  Trajectory t;
  t.task_id = j.at("task_id").get<std::string>();
  t.episode_seed = j.at("episode_seed").get<std::uint64_t>();
  t.env_name = j.at("env").get<std::string>();
  for (const auto& js : j.at("steps")) {
    Step s;
    const auto role = js.at("role").get<std::string>();
    if (role == "obs") {
      s.role = StepRole::kObservation;
    } else if (role == "act") {
      s.role = StepRole::kAction;
    } else {
      throw ProtocolError("unknown step role '" + role + "'");
    }
    s.text = js.at("text").get<std::string>();
    t.steps.push_back(std::move(s));
  }
  t.reward = j.at("reward").get<double>();
  t.success = j.at("success").get<bool>();
  t.metadata = j.at("meta").get<std::map<std::string, std::string>>();
  return t;
}

std::size_t write_trajectories(const std::filesystem::path& path,
                               const std::vector<Trajectory>& trajectories) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ProtocolError("cannot open '" + path.string() + "' for writing");
  for (const auto& t : trajectories) {
    out << trajectory_to_json(t).dump() << '\n';
  }
  out.flush();
  if (!out) throw ProtocolError("write failed for '" + path.string() + "'");
  return trajectories.size();
}

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProtocolError("cannot open '" + path.string() + "' for reading");
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(trajectory_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ProtocolError("malformed trajectory record at " + path.filename().string() +
                          " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace caprl::env
