#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kirchhoff/data_spec.hpp"
#include "kirchhoff/errors.hpp"
#include "kirchhoff/estimates.hpp"
#include "kirchhoff/lacunary.hpp"
#include "kirchhoff/nonlinearity.hpp"
#include "kirchhoff/solver.hpp"

namespace kirchhoff {

using json = nlohmann::json;

/// Shortest decimal that round-trips to the same double; "inf", "-inf", "nan"
/// for non-finite values.
std::string format_number(double x);

/// Finite values as JSON numbers, the rest as the strings above.
json number_json(double x);

/// A config value that failed validation; `path` locates it, e.g. `$.dims[2]`.
class ConfigError : public InvalidInput {
 public:
  ConfigError(std::string path, const std::string& message)
      : InvalidInput(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Read-only view of a JSON node that remembers where it came from.
class ConfigNode {
 public:
  ConfigNode(const json& node, std::string path) : node_(&node), path_(std::move(path)) {}

  const json& raw() const noexcept { return *node_; }
  const std::string& path() const noexcept { return path_; }

  bool has(std::string_view key) const;
  ConfigNode at(std::string_view key) const;
  ConfigNode at(std::size_t index) const;
  std::size_t size() const;  // arrays only

  double number() const;
  double positive() const;
  std::size_t count() const;  // nonnegative integer
  std::uint64_t u64() const;
  std::string string() const;
  bool boolean() const;
  std::vector<double> numbers() const;
  std::vector<std::size_t> counts() const;

  double number_or(std::string_view key, double fallback) const;
  std::size_t count_or(std::string_view key, std::size_t fallback) const;
  bool boolean_or(std::string_view key, bool fallback) const;
  std::string string_or(std::string_view key, std::string fallback) const;

  /// Rejects object members not in `allowed`.
  void allow_only(std::initializer_list<std::string_view> allowed) const;
  [[noreturn]] void fail(const std::string& message) const;

 private:
  const json* node_;
  std::string path_;
};

json to_json(const Nonlinearity& nl);
Nonlinearity nonlinearity_from_json(const ConfigNode& node);

json to_json(const ConstantBounds& b);
json to_json(const TailBound& tb);
TailBound tail_bound_from_json(const ConfigNode& node);

/// {"u0", "u1", "tail_bound", "generator": {"name", "params"}}.
json to_json(const DataSpec& data);
DataSpec data_spec_from_json(const ConfigNode& node);

json to_json(const WeightFamily& w);
WeightFamily weights_from_json(const ConfigNode& node);

json to_json(const GapCertificate& cert);
json to_json(const BoundReport& r);
json to_json(const EnvelopeConstants& c);
json to_json(const KSelection& s);
json to_json(const StudyReport& r);
json to_json(const Decomposition& d);
json trajectory_summary(const Trajectory& traj);
IntegratorControls integrator_from_json(const ConfigNode& node);
json to_json(const IntegratorControls& ctrl);

/// Canonical text form for every JSON artifact: two-space indent, trailing newline.
std::string dump(const json& j);

}  // namespace kirchhoff
