#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cwlab/io.hpp"

namespace cwlab {

inline constexpr std::string_view kVersion = "0.3.0";

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string content;
};

struct RunOutput {
  std::vector<OutputFile> files;  // excluding the manifest
  Json manifest;
};

struct RecipeInfo {
  std::string_view name;
  std::string_view description;
};

/// Builtin recipes in a fixed order.
const std::vector<RecipeInfo>& recipe_list();

/// Default config of a builtin recipe. Throws ConfigError for unknown names.
Json recipe_config(std::string_view name);

/// Validates `config` and runs it. Relative mixture_file paths resolve
/// against `base_dir`. Throws ConfigError for invalid configs and
/// NumericalError when a trajectory diverges.
RunOutput run_experiment(const Json& config, const std::filesystem::path& base_dir = ".");

/// Writes every file plus manifest.json into `dir`.
void write_run(const RunOutput& run, const std::filesystem::path& dir);

/// Text printed by `--help` describing config keys and defaults.
std::string config_reference();

}  // namespace cwlab
