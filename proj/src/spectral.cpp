#include "kirchhoff/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kirchhoff/errors.hpp"
#include "kirchhoff/numerics.hpp"

namespace kirchhoff {

// ----- data specs -------------------------------------------------------------------------

TailBound TailBound::geometric(double amplitude, double ratio) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw InvalidInput("tail bound amplitude must be finite and nonnegative");
  }
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw InvalidInput("geometric tail bound ratio must lie in (0, 1)");
  }
  return {Kind::geometric, amplitude, ratio};
}

double TailBound::log_at(std::size_t k) const {
  if (kind == Kind::zero || amplitude == 0.0) return kNegInf;
  return std::log(amplitude) + static_cast<double>(k) * std::log(ratio);
}

double TailBound::at(std::size_t k) const {
  const double l = log_at(k);
  return l == kNegInf ? 0.0 : std::exp(l);
}

DataSpec DataSpec::from_coefficients(CoefficientVector u0, CoefficientVector u1, TailBound tail) {
  DataSpec d;
  const std::size_t n = std::max(u0.size(), u1.size());
  u0.resize(n, 0.0);
  u1.resize(n, 0.0);
  d.u0 = std::move(u0);
  d.u1 = std::move(u1);
  d.tail_bound = tail;
  d.validate();
  return d;
}

void DataSpec::validate() const {
  if (u0.size() != u1.size()) {
    throw InvalidInput("data: u0 and u1 must have the same length");
  }
  for (std::size_t i = 0; i < u0.size(); ++i) {
    if (!std::isfinite(u0[i]) || !std::isfinite(u1[i])) {
      throw InvalidInput("data: non-finite coefficient at mode " + std::to_string(i + 1));
    }
  }
}

// ----- operator ---------------------------------------------------------------------------

SpectralOperator::SpectralOperator(std::vector<double> eigenvalues)
    : eigenvalues_(std::move(eigenvalues)) {
  if (eigenvalues_.empty()) throw InvalidInput("operator needs at least one eigenvalue");
  for (std::size_t i = 0; i < eigenvalues_.size(); ++i) {
    const double l = eigenvalues_[i];
    if (!std::isfinite(l) || !(l > 0.0)) {
      throw InvalidInput("eigenvalue " + std::to_string(i + 1) + " must be finite and positive");
    }
    if (i > 0 && l < eigenvalues_[i - 1]) {
      throw InvalidInput("eigenvalues must be nondecreasing (mode " + std::to_string(i + 1) + ")");
    }
  }
}

SpectralOperator SpectralOperator::laplacian_1d(std::size_t n) {
  std::vector<double> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = static_cast<double>(i + 1);
  return SpectralOperator(std::move(l));
}

SpectralOperator SpectralOperator::power(std::size_t n, double p) {
  if (!(p > 0.0)) throw InvalidInput("power generator needs p > 0");
  std::vector<double> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = std::pow(static_cast<double>(i + 1), p);
  return SpectralOperator(std::move(l));
}

SpectralOperator SpectralOperator::geometric(std::size_t n, double ratio) {
  if (!(ratio > 1.0)) throw InvalidInput("geometric generator needs ratio > 1");
  std::vector<double> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = std::pow(ratio, static_cast<double>(i + 1));
  return SpectralOperator(std::move(l));
}

double SpectralOperator::lambda_at(std::size_t mode) const {
  if (mode == 0 || mode > eigenvalues_.size()) {
    throw InvalidInput("mode " + std::to_string(mode) + " outside 1.." +
                       std::to_string(eigenvalues_.size()));
  }
  return eigenvalues_[mode - 1];
}

// ----- norms ------------------------------------------------------------------------------

void validate_state(const SpectralOperator& op, const GalerkinState& state) {
  if (state.position.size() != state.velocity.size()) {
    throw InvalidInput("state: position and velocity lengths differ");
  }
  if (state.first_mode == 0) throw InvalidInput("state: modes are 1-based");
  if (!state.position.empty() && state.last_mode() > op.size()) {
    throw InvalidInput("state: mode " + std::to_string(state.last_mode()) +
                       " exceeds operator size " + std::to_string(op.size()));
  }
  for (std::size_t i = 0; i < state.position.size(); ++i) {
    if (!std::isfinite(state.position[i]) || !std::isfinite(state.velocity[i])) {
      throw InvalidInput("state: non-finite coefficient");
    }
  }
}

double half_norm_sq(const SpectralOperator& op, std::span<const double> v, std::size_t first_mode) {
  if (first_mode == 0) throw InvalidInput("half_norm_sq: modes are 1-based");
  if (!v.empty() && first_mode + v.size() - 1 > op.size()) {
    throw InvalidInput("half_norm_sq: vector of length " + std::to_string(v.size()) +
                       " does not fit operator of size " + std::to_string(op.size()));
  }
  const auto lambda = op.eigenvalues().subspan(first_mode - 1, v.size());
  CompensatedSum sum;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = lambda[i] * v[i];
    sum.add(w * w);
  }
  return sum.value();
}

double norm_sq(std::span<const double> v) {
  CompensatedSum sum;
  for (double x : v) sum.add(x * x);
  return sum.value();
}

EnergyPair energy_pair(const SpectralOperator& op, const GalerkinState& state) {
  if (state.position.size() != state.velocity.size()) {
    throw InvalidInput("energy_pair: position and velocity lengths differ");
  }
  return {norm_sq(state.velocity), half_norm_sq(op, state.position, state.first_mode)};
}

// ----- projections and splits ---------------------------------------------------------------

GalerkinState project_data(const SpectralOperator& op, const DataSpec& data, std::size_t n) {
  if (n == 0 || n > op.size()) {
    throw InvalidInput("project_data: n = " + std::to_string(n) + " outside 1.." +
                       std::to_string(op.size()));
  }
  GalerkinState s;
  s.position.assign(n, 0.0);
  s.velocity.assign(n, 0.0);
  const std::size_t stored = std::min(n, data.size());
  std::copy_n(data.u0.begin(), stored, s.position.begin());
  std::copy_n(data.u1.begin(), stored, s.velocity.begin());
  return s;
}

GalerkinState truncate(const GalerkinState& state, std::size_t n) {
  if (state.first_mode != 1 || n > state.dimension()) {
    throw InvalidInput("truncate: needs a state starting at mode 1 with at least n modes");
  }
  GalerkinState out;
  out.t = state.t;
  out.position.assign(state.position.begin(), state.position.begin() + static_cast<long>(n));
  out.velocity.assign(state.velocity.begin(), state.velocity.begin() + static_cast<long>(n));
  return out;
}

FrequencySplit split_state(const GalerkinState& state, std::size_t k) {
  const std::size_t n = state.last_mode();
  if (k < state.first_mode || k >= n) {
    throw InvalidInput("split_state: threshold k = " + std::to_string(k) + " must satisfy " +
                       std::to_string(state.first_mode) + " <= k < " + std::to_string(n));
  }
  const auto cut = static_cast<long>(k - state.first_mode + 1);
  FrequencySplit split;
  split.threshold = k;
  split.low.t = split.high.t = state.t;
  split.low.first_mode = state.first_mode;
  split.low.position.assign(state.position.begin(), state.position.begin() + cut);
  split.low.velocity.assign(state.velocity.begin(), state.velocity.begin() + cut);
  split.high.first_mode = k + 1;
  split.high.position.assign(state.position.begin() + cut, state.position.end());
  split.high.velocity.assign(state.velocity.begin() + cut, state.velocity.end());
  return split;
}

GalerkinState recombine(const FrequencySplit& split) {
  if (split.low.last_mode() + 1 != split.high.first_mode) {
    throw InvalidInput("recombine: low and high parts are not adjacent");
  }
  GalerkinState s = split.low;
  s.position.insert(s.position.end(), split.high.position.begin(), split.high.position.end());
  s.velocity.insert(s.velocity.end(), split.high.velocity.begin(), split.high.velocity.end());
  return s;
}

}  // namespace kirchhoff
