#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kirchhoff/nonlinearity.hpp"
#include "kirchhoff/spectral.hpp"

namespace kirchhoff {

/// How the embedded error estimate is normalised.
///  modal:         each populated mode is measured against its own energy
///                 amplitude hypot(v', λv), so tiny high-frequency modes are
///                 resolved to the same relative accuracy as the bulk.
///  componentwise: classic |δy_j| / (atol + rtol·|y_j|).
enum class ErrorNorm { modal, componentwise };

struct IntegratorControls {
  double rtol = 1e-10;
  double atol = 1e-12;
  std::size_t intervals = 512;  // uniform output grid has intervals + 1 samples
  double drift_guard = 1e-8;
  double work_budget = 2e10;  // cap on Σ (dimension × attempted steps)
  bool record_steps = false;
  ErrorNorm norm = ErrorNorm::modal;

  void validate() const;
};

enum class TrajectoryStatus { ok, step_underflow, drift_guard, budget_exceeded, non_finite };

std::string to_string(TrajectoryStatus status);

struct Trajectory {
  std::vector<GalerkinState> states;  // uniform output grid
  std::vector<double> step_times;     // end points of accepted steps
  std::vector<GalerkinState> step_states;  // only with record_steps
  std::string method = "dormand-prince-5(4)";
  double rtol = 0.0;
  double atol = 0.0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double hamiltonian_drift = 0.0;
  std::size_t range_excursions = 0;
  double max_error_ratio = 0.0;  // replayed schedules only
  TrajectoryStatus status = TrajectoryStatus::ok;
  std::string diagnostic;

  bool ok() const noexcept { return status == TrajectoryStatus::ok; }
  std::size_t dimension() const noexcept {
    return states.empty() ? 0 : states.front().dimension();
  }
  std::vector<double> times() const;
};

struct ModalDerivative {
  CoefficientVector velocity;
  CoefficientVector acceleration;
  bool out_of_range = false;
};

/// v_i'' = −m(Σ λ_j² v_j²) λ_i² v_i in first-order form.
ModalDerivative rhs(const SpectralOperator& op, const Nonlinearity& nl, const GalerkinState& state);

/// |u'|² + M(|A^{1/2}u|²).
double hamiltonian(const SpectralOperator& op, const Nonlinearity& nl, const GalerkinState& state);

/// Adaptive Dormand–Prince 5(4) with PI step control; steps are shortened to
/// land exactly on the uniform output grid.
Trajectory integrate(const SpectralOperator& op, const Nonlinearity& nl,
                     const GalerkinState& initial, double T, const IntegratorControls& ctrl = {});

/// Re-runs the same scheme on a prescribed sequence of step end points (for
/// instance the accepted steps of a larger Galerkin system). The grid times
/// must be among the step end points. The local error estimate is still
/// computed and reported as max_error_ratio.
Trajectory integrate_on_schedule(const SpectralOperator& op, const Nonlinearity& nl,
                                 const GalerkinState& initial, std::span<const double> step_times,
                                 double T, const IntegratorControls& ctrl = {});

/// Galerkin approximants u_n for every n in dims, all sharing the step
/// schedule of the largest system. Replays run on up to `jobs` threads.
std::vector<Trajectory> integrate_family(const SpectralOperator& op, const Nonlinearity& nl,
                                         const DataSpec& data, std::span<const std::size_t> dims,
                                         double T, const IntegratorControls& ctrl,
                                         std::size_t jobs = 1);

struct CoefficientTrace {
  std::vector<double> times;
  std::vector<double> c;
  std::vector<double> lipschitz_quotients;  // one per grid interval
  double max_quotient = 0.0;
  std::size_t out_of_range = 0;
};

/// c(t) = m(|A^{1/2}u_n(t)|²) on the output grid with difference quotients.
CoefficientTrace coefficient_trace(const SpectralOperator& op, const Nonlinearity& nl,
                                   const Trajectory& traj);

enum class CsvLayout { long_format, wide_format };

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, CsvLayout layout);
void write_trace_csv(std::ostream& out, const CoefficientTrace& trace);
void write_hamiltonian_csv(std::ostream& out, const SpectralOperator& op, const Nonlinearity& nl,
                           const Trajectory& traj);

}  // namespace kirchhoff
