#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cwlab/diffusion.hpp"
#include "cwlab/experiment.hpp"
#include "cwlab/io.hpp"
#include "cwlab/parallel.hpp"

namespace fs = std::filesystem;
using namespace cwlab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// One line, no embedded newlines, so callers can parse "cwlab: <class>: <reason>".
std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

Json load_config(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("{}: not valid JSON ({})", path.string(), e.what()));
  }
}

fs::path output_dir(const Json& config, const std::optional<std::string>& flag, const std::string& fallback) {
  if (flag) return *flag;
  if (config.is_object() && config.contains("out") && config["out"].is_string()) return config["out"].get<std::string>();
  return fallback;
}

void execute(const Json& config, const fs::path& base_dir, const fs::path& out) {
  const RunOutput run = run_experiment(config, base_dir);
  write_run(run, out);
  for (const auto& f : run.files) std::cout << (out / f.name).string() << "\n";
  std::cout << (out / "manifest.json").string() << "\n";
}

// `windows` and `mia` accept configs without a kind and reject other kinds.
Json with_kind(Json config, const std::string& kind) {
  if (!config.is_object()) throw ConfigError("config: must be an object");
  if (!config.contains("kind")) config["kind"] = kind;
  if (config["kind"] != kind) throw ConfigError(fmt::format("config.kind: expected '{}' for this subcommand", kind));
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cwlab: critical windows of diffusion models on Gaussian mixtures"};
  app.require_subcommand(1);
  app.footer(config_reference());

  std::optional<std::size_t> threads;
  app.add_option("--threads", threads, "worker threads (default: CWLAB_THREADS, else logical cores)")
      ->check(CLI::PositiveNumber);

  std::string run_config;
  std::optional<std::string> run_out;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", run_config, "JSON config file")->required();
  run->add_option("--out", run_out, "output directory (default: config 'out', else the config file stem)");

  auto* list = app.add_subcommand("list-recipes", "list builtin recipes");

  std::optional<std::string> fig_out;
  std::optional<std::uint64_t> fig_seed;
  auto* fig = app.add_subcommand("reproduce-fig", "occupancy vs noise time for the four-cluster mixture");
  fig->add_option("--out", fig_out, "output directory (default: reproduce-fig)");
  fig->add_option("--seed", fig_seed, "random seed (default: the recipe seed)");

  std::string recipe_name;
  std::optional<std::string> recipe_out;
  std::optional<std::uint64_t> recipe_seed;
  auto* recipe = app.add_subcommand("recipe", "run a builtin recipe by name");
  recipe->add_option("name", recipe_name, "recipe name (see list-recipes)")->required();
  recipe->add_option("--out", recipe_out, "output directory (default: the recipe name)");
  recipe->add_option("--seed", recipe_seed, "random seed (default: the recipe seed)");

  std::string windows_config;
  std::optional<std::string> windows_out;
  auto* windows = app.add_subcommand("windows", "critical-window estimates for a mixture config");
  windows->add_option("config", windows_config, "JSON config file")->required();
  windows->add_option("--out", windows_out, "output directory");

  std::string mia_config;
  std::optional<std::string> mia_out;
  auto* mia = app.add_subcommand("mia", "NoiseDenoise membership-inference experiment");
  mia->add_option("config", mia_config, "JSON config file")->required();
  mia->add_option("--out", mia_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (threads) set_thread_count(*threads);

  try {
    if (list->parsed()) {
      for (const auto& r : recipe_list()) std::cout << fmt::format("{:<18}{}\n", r.name, r.description);
    } else if (fig->parsed()) {
      Json config = recipe_config("reproduce-fig");
      if (fig_seed) config["seed"] = *fig_seed;
      execute(config, ".", output_dir(config, fig_out, "reproduce-fig"));
    } else if (recipe->parsed()) {
      Json config = recipe_config(recipe_name);
      if (recipe_seed) config["seed"] = *recipe_seed;
      execute(config, ".", output_dir(config, recipe_out, recipe_name));
    } else if (run->parsed()) {
      const fs::path path = run_config;
      const Json config = load_config(path);
      execute(config, path.parent_path(), output_dir(config, run_out, path.stem().string()));
    } else if (windows->parsed()) {
      const fs::path path = windows_config;
      const Json config = with_kind(load_config(path), "windows");
      execute(config, path.parent_path(), output_dir(config, windows_out, path.stem().string()));
    } else if (mia->parsed()) {
      const fs::path path = mia_config;
      const Json config = with_kind(load_config(path), "mia");
      execute(config, path.parent_path(), output_dir(config, mia_out, path.stem().string()));
    }
  } catch (const ConfigError& e) {
    std::cerr << "cwlab: config_error: " << one_line(e.what()) << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "cwlab: numerical_error: step=" << e.step() << ": " << one_line(e.what()) << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "cwlab: error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
