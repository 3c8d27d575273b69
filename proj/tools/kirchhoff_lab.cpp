#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kirchhoff/experiment.hpp"

namespace {

int print_schemas(const std::string& name, const std::optional<std::string>& out) {
  using namespace kirchhoff;
  try {
    const auto names = name.empty() ? schema_names() : std::vector<std::string>{name};
    if (out) {
      std::filesystem::create_directories(*out);
      for (const auto& n : names) {
        std::ofstream f(std::filesystem::path(*out) / (n + ".schema.json"), std::ios::binary);
        f << dump(schema(n));
      }
      return kExitOk;
    }
    if (!name.empty()) {
      std::cout << dump(schema(name));
    } else {
      json all = json::object();
      for (const auto& n : names) all[n] = schema(n);
      std::cout << dump(all);
    }
    return kExitOk;
  } catch (const InvalidInput& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral Galerkin laboratory for the Kirchhoff equation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kirchhoff::kToolVersion));

  std::string config;
  std::optional<std::string> out;
  std::size_t jobs = 1;
  const struct {
    const char* name;
    const char* help;
  } stages[] = {
      {"simulate", "integrate Galerkin systems and write trajectories"},
      {"certify", "certify lacunary thresholds of the configured data"},
      {"decompose", "split the data into two lacunary summands"},
      {"converge", "run the Cauchy convergence study and verify every bound"},
  };
  for (const auto& s : stages) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides KIRCHHOFF_OUT_DIR and the config)");
    sub->add_option("--jobs", jobs, "concurrent integrations")->check(CLI::PositiveNumber);
  }
  std::string schema_name;
  auto* schema_cmd = app.add_subcommand("schema", "print the JSON schemas of configs and artifacts");
  schema_cmd->add_option("--name", schema_name, "a single schema by name");
  schema_cmd->add_option("--out", out, "write <name>.schema.json files here instead of printing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kirchhoff::kExitConfig;
  }

  if (schema_cmd->parsed()) return print_schemas(schema_name, out);
  const std::string name = app.get_subcommands().front()->get_name();
  return kirchhoff::run_subcommand(name, config, out, jobs, std::cout, std::cerr);
}
