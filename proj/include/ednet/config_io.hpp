#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ednet/model.hpp"

namespace ednet {

struct SolverSettings {
  int budget = 1000;
  int initial_step = 2;

  friend bool operator==(const SolverSettings&, const SolverSettings&) = default;
};

/// Everything one configuration file describes.
struct ProjectConfig {
  NetworkConfig network;
  std::vector<ADPolicy> policies;
  SolverSettings solver;
  RunDesign design;

  const ADPolicy& policy(const std::string& id) const;

  friend bool operator==(const ProjectConfig&, const ProjectConfig&) = default;
};

/// Builds a project from its JSON tree. Structural problems (wrong types,
/// missing fields, duplicate policy ids) throw ConfigError; semantic checks
/// are left to validate_project.
ProjectConfig parse_project(const nlohmann::json& doc);
nlohmann::json to_json(const ProjectConfig& project);

ProjectConfig load_project(const std::filesystem::path& path);
std::string dump_project(const ProjectConfig& project);

/// validate_config plus policy and design checks.
std::vector<Violation> validate_project(const ProjectConfig& project);

/// Reads a whole file; throws ConfigError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace ednet
