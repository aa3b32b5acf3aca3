#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "gcntrack/tracker.hpp"

namespace gcntrack {

/// Everything the command-line tool needs for a tracking run.
struct RunConfig {
  TrackerConfig tracker;
  std::filesystem::path sequence_root;
  std::filesystem::path flow_dir;
  std::filesystem::path output_dir;
  int jobs = 1;
};

void to_json(nlohmann::json& j, const TrackerConfig& config);
void from_json(const nlohmann::json& j, TrackerConfig& config);
void to_json(nlohmann::json& j, const RunConfig& config);
void from_json(const nlohmann::json& j, RunConfig& config);

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace gcntrack
