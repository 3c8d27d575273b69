#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kirchhoff/io.hpp"

namespace kirchhoff {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitBudget = 4,
  kExitBound = 5,
};

struct ExperimentConfig {
  json source;
  json operator_json;
  SpectralOperator op = SpectralOperator::laplacian_1d(1);
  std::optional<Nonlinearity> nl;
  DataSpec data;
  std::optional<GapCertificate> promised;  // from the lacunary generator
  WeightFamily weights;
  std::vector<std::size_t> dims;
  double T = 1.0;
  double epsilon = 0.5;
  std::optional<std::size_t> forced_k;
  std::vector<std::size_t> verify_ks;
  IntegratorControls ctrl;
  bool verify_low = true;
  bool verify_phi = true;
  bool verify_high = true;
  bool verify_F = true;
  bool verify_diff = true;
  std::size_t k_max = 0;
  std::size_t decompose_thresholds = 3;
  std::vector<Band> bands;  // empty: derived from the certificate
  std::optional<std::string> out_dir;
  CsvLayout layout = CsvLayout::long_format;
  std::uint64_t seed = 0;
};

/// Throws ConfigError naming the offending field path.
ExperimentConfig parse_config(const json& source);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunContext {
  std::filesystem::path out_dir;
  std::size_t jobs = 1;
  std::string config_path;
};

int cmd_simulate(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream& log);
int cmd_certify(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream& log);
int cmd_decompose(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream& log);
int cmd_converge(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream& log);

/// Loads the config, resolves the output directory (`out` beats the
/// KIRCHHOFF_OUT_DIR variable, which beats the config) and maps failures to
/// exit codes.
int run_subcommand(std::string_view name, const std::string& config_path,
                   const std::optional<std::string>& out, std::size_t jobs, std::ostream& log,
                   std::ostream& err);

/// Shipped JSON schemas by artifact name.
std::vector<std::string> schema_names();
const json& schema(std::string_view name);

inline constexpr std::string_view kToolName = "kirchhoff_lab";
inline constexpr std::string_view kToolVersion = "1.0.0";

}  // namespace kirchhoff
