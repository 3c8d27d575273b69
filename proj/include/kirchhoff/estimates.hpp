#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kirchhoff/lacunary.hpp"
#include "kirchhoff/nonlinearity.hpp"
#include "kirchhoff/numerics.hpp"
#include "kirchhoff/solver.hpp"
#include "kirchhoff/spectral.hpp"

namespace kirchhoff {

/// Constants entering the high/low frequency envelopes.
struct EnvelopeConstants {
  double H0 = 0.0;
  double mu1 = 1.0;
  double mu2 = 1.0;
  double L = 0.0;
  double nu1 = 1.0;  // min{1, μ₁}
  double nu2 = 1.0;  // max{1, μ₂}
  double L1 = 0.0;   // H₀/ν₁

  static EnvelopeConstants from(const ConstantBounds& bounds, double H0);

  /// 1 + μ₂ + 4LH₀/ν₁², so that a_k = growth_coefficient()·λ_k.
  double growth_coefficient() const noexcept { return 1.0 + mu2 + 4.0 * L * H0 / (nu1 * nu1); }
  double a_k(double lambda_k) const noexcept { return growth_coefficient() * lambda_k; }
};

/// Outcome of checking lhs(t) ≤ rhs(t) on a sample grid. For log-space
/// reports `lhs` and `rhs` hold logarithms and the violation is the log gap.
struct BoundReport {
  std::string bound;
  std::size_t k = 0;
  bool log_space = false;
  double tolerance = 0.0;
  std::vector<double> times;
  std::vector<double> lhs;
  std::vector<double> rhs;
  double max_violation = kNegInf;  // max(lhs − rhs); -inf when every lhs is 0 in log-space
  double worst_time = 0.0;
  bool pass = true;
};

/// F(t) = |r'|² + M(φ + |A^{1/2}r|²) − M(φ) with φ = |A^{1/2}s|².
double F_energy(const SpectralOperator& op, const Nonlinearity& nl, const FrequencySplit& split);

struct FSandwich {
  double lower = 0.0;  // ν₁(|r'|² + |A^{1/2}r|²)
  double F = 0.0;
  double upper = 0.0;  // ν₂(|r'|² + |A^{1/2}r|²)
};

FSandwich F_sandwich(const SpectralOperator& op, const Nonlinearity& nl,
                     const EnvelopeConstants& consts, const FrequencySplit& split);

/// L_k^+(t) = (ν₂/ν₁) exp(LH₀λ_k t/ν₁²).
LogValue Lk_plus(const EnvelopeConstants& consts, double lambda_k, double t);
/// L_k^-(t) = 2L(ν₂/ν₁)² exp(a_k t).
LogValue Lk_minus(const EnvelopeConstants& consts, double lambda_k, double t);

/// |s'|² + |A^{1/2}s|² ≤ H₀/ν₁.
BoundReport verify_low_bound(const SpectralOperator& op, const Trajectory& traj, std::size_t k,
                             const EnvelopeConstants& consts);

/// |φ'(t)| ≤ (H₀/ν₁)·λ_k, φ' = 2Σ_{i≤k} λ_i² v_i v_i'.
BoundReport verify_phi_derivative(const SpectralOperator& op, const Trajectory& traj,
                                  std::size_t k, const EnvelopeConstants& consts);

/// |r'|² + |A^{1/2}r|² ≤ R_k · L_k^+(t), compared in log-space.
BoundReport verify_high_bound(const SpectralOperator& op, const Trajectory& traj, std::size_t k,
                              const DataSpec& data, const EnvelopeConstants& consts);

/// ν₁E ≤ F ≤ ν₂E for the high part, relative tolerance 1e-10.
BoundReport verify_F_sandwich(const SpectralOperator& op, const Nonlinearity& nl,
                              const Trajectory& traj, std::size_t k,
                              const EnvelopeConstants& consts);

/// F(t) ≤ F(0) exp(LH₀λ_k t/ν₁²), log-space.
BoundReport verify_F_envelope(const SpectralOperator& op, const Nonlinearity& nl,
                              const Trajectory& traj, std::size_t k,
                              const EnvelopeConstants& consts);

/// F(0) ≤ ν₂ R_k (single sample at t = 0).
BoundReport verify_F_initial(const SpectralOperator& op, const Nonlinearity& nl,
                             const Trajectory& traj, std::size_t k, const DataSpec& data,
                             const EnvelopeConstants& consts);

/// |s_n' − s_m'|² + |A^{1/2}(s_n − s_m)|² ≤ R_k² · L_k^-(t), log-space.
BoundReport verify_diff_bound(const SpectralOperator& op, const Trajectory& a,
                              const Trajectory& b, std::size_t k, const DataSpec& data,
                              const EnvelopeConstants& consts);

/// Sampled sup_t (|u_n' − u_m'|² + |A^{1/2}(u_n − u_m)|²) over the common grid.
double sup_energy_difference(const SpectralOperator& op, const Trajectory& a, const Trajectory& b);

/// Whole-solution difference against R_k · 5k exp(kλ_k), log-space.
BoundReport verify_cauchy_bound(const SpectralOperator& op, const Trajectory& a,
                                const Trajectory& b, std::size_t k, const DataSpec& data);

struct KSelection {
  std::optional<std::size_t> k;
  double required = 0.0;  // max of the four lower bounds on k
  double lipschitz_term = 0.0;    // 2L(ν₂/ν₁)²
  double ratio_term = 0.0;        // ν₂/ν₁
  double growth_term = 0.0;       // (1 + μ₂ + 4LH₀/ν₁²)T
  double epsilon_term = 0.0;      // 5/ε
  std::string unmet;              // empty when feasible
};

/// Smallest certified threshold satisfying the k-selection rule.
KSelection choose_k(const EnvelopeConstants& consts, const GapCertificate& cert, double T,
                    double eps);

/// Whether k meets the non-certificate part of the selection rule.
bool satisfies_k_rule(const EnvelopeConstants& consts, std::size_t k, double T, double eps);

struct Band {
  std::size_t first = 1;
  std::size_t last = 1;
};

struct MigrationSpectrum {
  std::vector<Band> bands;
  std::vector<double> times;
  std::vector<std::vector<double>> energies;  // energies[band][sample]
  std::vector<double> totals;                 // full |u'|² + |A^{1/2}u|² per sample
};

/// Band energies Σ_{i∈band}(v_i'² + λ_i² v_i²) over time. Bands must
/// partition 1..n.
MigrationSpectrum migration_spectrum(const SpectralOperator& op, const Trajectory& traj,
                                     const std::vector<Band>& bands);

struct StudyOptions {
  double epsilon = 0.5;
  IntegratorControls ctrl;
  std::size_t jobs = 1;
  std::optional<std::size_t> forced_k;
  std::vector<std::size_t> verify_ks;  // extra thresholds for the per-run checks
  bool verify_low = true;
  bool verify_phi = true;
  bool verify_high = true;
  bool verify_F = true;
  bool verify_diff = true;
};

struct DimensionResult {
  std::size_t n = 0;
  TrajectoryStatus status = TrajectoryStatus::ok;
  std::string diagnostic;
  double hamiltonian_drift = 0.0;
  double max_lipschitz_quotient = 0.0;
  std::size_t accepted_steps = 0;
  std::vector<BoundReport> reports;
};

struct CertifiedPairCheck {
  std::size_t k = 0;
  BoundReport report;
};

struct PairResult {
  std::size_t n = 0;
  std::size_t m = 0;
  double sup_difference = 0.0;
  std::optional<BoundReport> cauchy;  // at the chosen k
  std::optional<BoundReport> diff;    // low-frequency envelope at the chosen k
  std::vector<CertifiedPairCheck> certified;  // every admissible certified k < min(n, m)
};

struct StudyReport {
  EnvelopeConstants constants;
  ConstantBounds bounds;
  KSelection selection;
  std::size_t k = 0;
  bool k_forced = false;
  bool choose_k_bypassed = false;
  std::optional<double> k_margin;
  GapCertificate certificate;
  double T = 0.0;
  double epsilon = 0.0;
  std::vector<std::size_t> dims;
  std::size_t grid_intervals = 0;
  std::vector<DimensionResult> dimensions;
  std::vector<PairResult> pairs;
  std::vector<std::pair<std::size_t, double>> sup_difference_by_min_dim;
  bool decay_monotone = true;
  bool all_pass = true;
  std::vector<std::string> failures;
};

struct StudyOutput {
  StudyReport report;
  std::vector<Trajectory> trajectories;
};

/// certify → choose_k → integrate every dimension → verify all bounds.
/// Throws NumericalFailure if any trajectory fails.
StudyOutput cauchy_study(const SpectralOperator& op, const Nonlinearity& nl, const DataSpec& data,
                         const GapCertificate& cert, std::vector<std::size_t> dims, double T,
                         const StudyOptions& options);

}  // namespace kirchhoff
