#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kirchhoff/data_spec.hpp"
#include "kirchhoff/spectral.hpp"

namespace kirchhoff {

/// R_k(u₀,u₁): stored coefficients above k plus the tail bound beyond N_data.
double tail(const SpectralOperator& op, const DataSpec& data, std::size_t k);

/// log R_k evaluated term by term in log-space; -inf for an exactly zero tail.
double log_tail(const SpectralOperator& op, const DataSpec& data, std::size_t k);

/// weight(k) = α_k · exp(β_k λ_k) with α_k = α·k^p, β_k = β·k^q.
/// The standard family is α_k = k², β_k = k.
struct WeightFamily {
  enum class Kind { standard, generalized };

  Kind kind = Kind::standard;
  double alpha_scale = 1.0;
  double alpha_power = 2.0;
  double beta_scale = 1.0;
  double beta_power = 1.0;

  static WeightFamily standard() { return {}; }
  static WeightFamily generalized(double alpha_scale, double alpha_power, double beta_scale,
                                  double beta_power);

  double log_alpha(std::size_t k) const;
  double beta(std::size_t k) const;
  double log_weight(std::size_t k, double lambda_k) const {
    return log_alpha(k) + beta(k) * lambda_k;
  }
  void validate() const;
};

/// Thresholds k ≤ k_max where R_k · weight(k) ≤ 1, with their log margins.
struct GapCertificate {
  WeightFamily weights;
  std::size_t k_max = 0;
  std::vector<std::size_t> thresholds;
  std::vector<double> log_margins;  // -inf for a vanishing tail

  bool contains(std::size_t k) const;
  std::optional<double> margin(std::size_t k) const;
};

double log_margin(const SpectralOperator& op, const DataSpec& data, const WeightFamily& weights,
                  std::size_t k);

GapCertificate certify(const SpectralOperator& op, const DataSpec& data,
                       const WeightFamily& weights, std::size_t k_max);

struct DataBlock {
  std::size_t start = 1;  // first mode
  std::size_t width = 1;
  double energy = 0.0;    // budget: Σ_{block} (⟨u₁,e_i⟩² + λ_i²⟨u₀,e_i⟩²)
  std::size_t end() const noexcept { return start + width - 1; }
};

struct LacunaryProfile {
  std::vector<DataBlock> blocks;
  double velocity_fraction = 0.5;  // share of each mode's energy carried by u₁
  double target_margin = -1.0;
};

struct GeneratedData {
  DataSpec data;
  GapCertificate certificate;
  std::vector<std::size_t> hole_starts;
  std::vector<double> block_log_energies;  // realised, -inf for emptied blocks
};

/// Block-supported data whose tail at every hole-start sits at the target
/// margin under the standard weights. Budgets are upper bounds: a block's
/// energy is lowered until every earlier hole-start is certified.
GeneratedData generate_lacunary(const SpectralOperator& op, const LacunaryProfile& profile);

/// Uniform doubles in [0,1) from std::mt19937_64. The engine's output is fixed
/// by the standard; the mapping to doubles is done here so results do not
/// depend on the library's distribution implementation.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

/// u₀_i = a_i i^{-s}/λ_i, u₁_i = b_i i^{-s} with a_i, b_i uniform in
/// [-amplitude, amplitude], supported on modes 1..support.
DataSpec random_coefficients(const SpectralOperator& op, std::size_t support, std::uint64_t seed,
                     double amplitude = 1.0, double decay = 0.0);

/// λ_i⟨u₀,e_i⟩ = ratio^i on modes 1..support, u₁ = 0. With `continue_tail`
/// the sequence is taken to go on forever and the modes beyond `support` enter
/// through the exact tail bound ratio^{2(k+1)}/(1 − ratio²); needs ratio < 1.
DataSpec geometric_data(const SpectralOperator& op, std::size_t support, double ratio,
                        bool continue_tail = false);

struct DecompositionBlock {
  int owner = 0;  // 0 → first summand, 1 → second
  std::size_t start = 1;
  std::size_t end = 1;
  std::size_t certifies_other_at = 0;  // 0 when the block could not certify
};

struct Decomposition {
  DataSpec first;
  DataSpec second;
  GapCertificate first_certificate;
  GapCertificate second_certificate;
  std::vector<DecompositionBlock> blocks;
  std::size_t requested_thresholds = 3;
  bool feasible = true;
  std::string report;
};

/// Splits any data into two summands, each lacunary at the block boundaries
/// of the other; every mode goes to exactly one summand.
Decomposition sum_decompose(const SpectralOperator& op, const DataSpec& data,
                            const WeightFamily& weights, std::size_t thresholds_per_summand = 3);

/// v + w, component-wise.
DataSpec recombine(const DataSpec& v, const DataSpec& w);

/// FNV-1a over the bit patterns of u0 then u1 (−0.0 folded into +0.0).
std::uint64_t coefficient_checksum(const DataSpec& data);

}  // namespace kirchhoff
