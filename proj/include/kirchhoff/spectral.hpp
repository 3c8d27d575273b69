#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kirchhoff/data_spec.hpp"

namespace kirchhoff {

/// The operator A through its eigenvalue square roots: A e_i = λ_i² e_i.
/// Never materialized as a matrix.
class SpectralOperator {
 public:
  explicit SpectralOperator(std::vector<double> eigenvalues);

  /// λ_i = i, the Dirichlet Laplacian on (0, π).
  static SpectralOperator laplacian_1d(std::size_t n);
  /// λ_i = i^p.
  static SpectralOperator power(std::size_t n, double p);
  /// λ_i = r^i.
  static SpectralOperator geometric(std::size_t n, double ratio);

  std::size_t size() const noexcept { return eigenvalues_.size(); }
  /// λ for a 1-based mode index.
  double lambda_at(std::size_t mode) const;
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }

 private:
  std::vector<double> eigenvalues_;
};

/// Snapshot of a Galerkin approximant. `first_mode` is the eigen-index of
/// position[0]; it is 1 except for the high part of a frequency split.
struct GalerkinState {
  double t = 0.0;
  std::size_t first_mode = 1;
  CoefficientVector position;
  CoefficientVector velocity;

  std::size_t dimension() const noexcept { return position.size(); }
  std::size_t last_mode() const noexcept { return first_mode + position.size() - 1; }
};

struct EnergyPair {
  double kinetic = 0.0;             // |u'|²
  double potential_seminorm = 0.0;  // |A^{1/2}u|²
  double total() const noexcept { return kinetic + potential_seminorm; }
};

/// s_{n,k} (modes 1..k) and r_{n,k} (modes k+1..n) of one state.
struct FrequencySplit {
  std::size_t threshold = 0;
  GalerkinState low;
  GalerkinState high;
};

void validate_state(const SpectralOperator& op, const GalerkinState& state);

/// Σ λ_i² v_i², compensated, ascending mode order. `first_mode` is the
/// eigen-index of v[0].
double half_norm_sq(const SpectralOperator& op, std::span<const double> v,
                    std::size_t first_mode = 1);

/// Σ v_i², compensated.
double norm_sq(std::span<const double> v);

EnergyPair energy_pair(const SpectralOperator& op, const GalerkinState& state);

GalerkinState project_data(const SpectralOperator& op, const DataSpec& data, std::size_t n);

/// Keeps modes 1..n of a state that starts at mode 1.
GalerkinState truncate(const GalerkinState& state, std::size_t n);

FrequencySplit split_state(const GalerkinState& state, std::size_t k);
GalerkinState recombine(const FrequencySplit& split);

}  // namespace kirchhoff
