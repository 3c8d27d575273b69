#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace kirchhoff {

using CoefficientVector = std::vector<double>;

/// Closed-form upper bound on Σ_{i>k} (⟨u₁,e_i⟩² + λ_i²⟨u₀,e_i⟩²) for the part of
/// the data that is not stored explicitly. Only evaluated for k ≥ N_data.
struct TailBound {
  enum class Kind { zero, geometric };

  Kind kind = Kind::zero;
  double amplitude = 0.0;  // geometric: bound(k) = amplitude · ratio^k
  double ratio = 0.0;

  static TailBound zero() { return {}; }
  static TailBound geometric(double amplitude, double ratio);

  double log_at(std::size_t k) const;
  double at(std::size_t k) const;
};

/// Initial data (u₀, u₁) by their eigen-coefficients, mode 1 first.
struct DataSpec {
  CoefficientVector u0;
  CoefficientVector u1;
  TailBound tail_bound;
  std::string generator = "explicit";
  nlohmann::json generator_params = nlohmann::json::object();

  std::size_t size() const noexcept { return u0.size(); }

  /// Pads u0/u1 to a common length and rejects non-finite entries.
  static DataSpec from_coefficients(CoefficientVector u0, CoefficientVector u1,
                                    TailBound tail = TailBound::zero());
  void validate() const;
};

}  // namespace kirchhoff
