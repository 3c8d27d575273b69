#include "kirchhoff/lacunary.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "kirchhoff/errors.hpp"
#include "kirchhoff/numerics.hpp"

namespace kirchhoff {
namespace {

void require_fits(const SpectralOperator& op, const DataSpec& data, const char* where) {
  if (data.size() > op.size()) {
    throw InvalidInput(std::string(where) + ": data has " + std::to_string(data.size()) +
                       " modes but the operator only " + std::to_string(op.size()));
  }
}

double log_abs(double x) { return x == 0.0 ? kNegInf : std::log(std::abs(x)); }

// Amplitudes below the smallest normal double are dropped to an exact zero.
double amplitude_from_log(double log_amp) {
  if (log_amp == kNegInf) return 0.0;
  const double a = std::exp(log_amp);
  return a < std::numeric_limits<double>::min() ? 0.0 : a;
}

}  // namespace

// ----- tails ------------------------------------------------------------------------------

double tail(const SpectralOperator& op, const DataSpec& data, std::size_t k) {
  require_fits(op, data, "tail");
  const auto lambda = op.eigenvalues();
  CompensatedSum sum;
  for (std::size_t i = k; i < data.size(); ++i) {
    const double w = lambda[i] * data.u0[i];
    sum.add(data.u1[i] * data.u1[i] + w * w);
  }
  sum.add(data.tail_bound.at(std::max(k, data.size())));
  return sum.value();
}

double log_tail(const SpectralOperator& op, const DataSpec& data, std::size_t k) {
  require_fits(op, data, "log_tail");
  const auto lambda = op.eigenvalues();
  LogSum sum;
  for (std::size_t i = k; i < data.size(); ++i) {
    sum.add(2.0 * log_abs(data.u1[i]));
    if (data.u0[i] != 0.0) sum.add(2.0 * (std::log(lambda[i]) + log_abs(data.u0[i])));
  }
  sum.add(data.tail_bound.log_at(std::max(k, data.size())));
  return sum.value();
}

// ----- weights and certificates -----------------------------------------------------------

WeightFamily WeightFamily::generalized(double alpha_scale, double alpha_power, double beta_scale,
                                       double beta_power) {
  WeightFamily w{Kind::generalized, alpha_scale, alpha_power, beta_scale, beta_power};
  w.validate();
  return w;
}

void WeightFamily::validate() const {
  if (kind == Kind::standard) return;
  if (!(alpha_scale > 0.0) || !(beta_scale > 0.0) || !(alpha_power > 0.0) ||
      !(beta_power > 0.0)) {
    throw InvalidInput("generalized weights need positive scales and powers so that "
                       "alpha_k and beta_k diverge");
  }
}

double WeightFamily::log_alpha(std::size_t k) const {
  const double kk = static_cast<double>(k);
  if (kind == Kind::standard) return 2.0 * std::log(kk);
  return std::log(alpha_scale) + alpha_power * std::log(kk);
}

double WeightFamily::beta(std::size_t k) const {
  const double kk = static_cast<double>(k);
  if (kind == Kind::standard) return kk;
  return beta_scale * std::pow(kk, beta_power);
}

bool GapCertificate::contains(std::size_t k) const {
  return std::binary_search(thresholds.begin(), thresholds.end(), k);
}

std::optional<double> GapCertificate::margin(std::size_t k) const {
  const auto it = std::lower_bound(thresholds.begin(), thresholds.end(), k);
  if (it == thresholds.end() || *it != k) return std::nullopt;
  return log_margins[static_cast<std::size_t>(it - thresholds.begin())];
}

double log_margin(const SpectralOperator& op, const DataSpec& data, const WeightFamily& weights,
                  std::size_t k) {
  if (k == 0) throw InvalidInput("log_margin: thresholds start at k = 1");
  const double lt = log_tail(op, data, k);
  if (lt == kNegInf) return kNegInf;
  return lt + weights.log_weight(k, op.lambda_at(k));
}

GapCertificate certify(const SpectralOperator& op, const DataSpec& data,
                       const WeightFamily& weights, std::size_t k_max) {
  weights.validate();
  if (k_max > op.size()) {
    throw InvalidInput("certify: k_max = " + std::to_string(k_max) + " exceeds operator size " +
                       std::to_string(op.size()));
  }
  GapCertificate cert;
  cert.weights = weights;
  cert.k_max = k_max;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double margin = log_margin(op, data, weights, k);
    if (margin <= 0.0) {
      cert.thresholds.push_back(k);
      cert.log_margins.push_back(margin);
    }
  }
  return cert;
}

// ----- generators -------------------------------------------------------------------------

GeneratedData generate_lacunary(const SpectralOperator& op, const LacunaryProfile& profile) {
  const auto& blocks = profile.blocks;
  if (blocks.empty()) throw InvalidInput("lacunary profile needs at least one block");
  if (!(profile.velocity_fraction >= 0.0 && profile.velocity_fraction <= 1.0)) {
    throw InvalidInput("velocity_fraction must lie in [0, 1]");
  }
  if (!(profile.target_margin <= 0.0)) throw InvalidInput("target margin must be <= 0");

  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const auto& b = blocks[j];
    const std::size_t previous_hole = j == 0 ? b.start : blocks[j - 1].end();
    if (b.start == 0 || b.width == 0) throw InvalidInput("blocks need start >= 1 and width >= 1");
    if (!(b.energy >= 0.0) || !std::isfinite(b.energy)) {
      throw InvalidInput("block energies must be finite and nonnegative");
    }
    if (j > 0 && b.start <= blocks[j - 1].end()) {
      throw InfeasibleProfile("block " + std::to_string(j + 1) +
                                  " overlaps its predecessor; no hole after mode " +
                                  std::to_string(previous_hole),
                              previous_hole);
    }
    if (b.end() > op.size()) {
      throw InfeasibleProfile("block " + std::to_string(j + 1) + " ends at mode " +
                                  std::to_string(b.end()) + " beyond operator size " +
                                  std::to_string(op.size()),
                              previous_hole);
    }
  }

  const auto standard = WeightFamily::standard();
  const std::size_t J = blocks.size();
  // Relative safety on the realised tail so rounding cannot push a margin above target.
  constexpr double kLogSafety = 1e-9;

  // S_j = energy of blocks j.. ; S_j is capped by the hole-start that precedes block j.
  std::vector<double> log_suffix(J + 1, kNegInf);
  for (std::size_t jj = J; jj-- > 0;) {
    const double log_budget = blocks[jj].energy == 0.0 ? kNegInf : std::log(blocks[jj].energy);
    double s = log_add(log_budget, log_suffix[jj + 1]);
    if (jj > 0) {
      const std::size_t hole = blocks[jj - 1].end();
      const double cap =
          profile.target_margin - standard.log_weight(hole, op.lambda_at(hole)) - kLogSafety;
      s = std::min(s, cap);
    }
    log_suffix[jj] = s;
  }

  GeneratedData out;
  DataSpec& data = out.data;
  data.u0.assign(blocks.back().end(), 0.0);
  data.u1.assign(blocks.back().end(), 0.0);
  const double log_vf = profile.velocity_fraction == 0.0 ? kNegInf : std::log(profile.velocity_fraction);
  const double log_pf =
      profile.velocity_fraction == 1.0 ? kNegInf : std::log1p(-profile.velocity_fraction);

  for (std::size_t j = 0; j < J; ++j) {
    const auto& b = blocks[j];
    const double log_block = log_sub(log_suffix[j], log_suffix[j + 1]);
    const double log_mode = log_block - std::log(static_cast<double>(b.width));
    LogSum realised;
    for (std::size_t mode = b.start; mode <= b.end(); ++mode) {
      const double lambda = op.lambda_at(mode);
      const double v = amplitude_from_log(0.5 * (log_vf + log_mode));
      const double p =
          log_pf == kNegInf ? 0.0 : amplitude_from_log(0.5 * (log_pf + log_mode) - std::log(lambda));
      data.u1[mode - 1] = v;
      data.u0[mode - 1] = p;
      realised.add(2.0 * log_abs(v));
      if (p != 0.0) realised.add(2.0 * (std::log(lambda) + std::log(p)));
    }
    out.block_log_energies.push_back(realised.value());
    out.hole_starts.push_back(b.end());
  }

  data.generator = "lacunary";
  nlohmann::json jb = nlohmann::json::array();
  for (const auto& b : blocks) jb.push_back({{"start", b.start}, {"width", b.width}, {"energy", b.energy}});
  data.generator_params = {{"blocks", jb},
                           {"velocity_fraction", profile.velocity_fraction},
                           {"target_margin", profile.target_margin}};

  for (std::size_t j = 0; j + 1 < J; ++j) {
    const std::size_t hole = out.hole_starts[j];
    const double margin = log_margin(op, data, standard, hole);
    if (margin > profile.target_margin) {
      throw InfeasibleProfile("hole-start k = " + std::to_string(hole) + " reaches margin " +
                                  std::to_string(margin) + " above the target",
                              hole);
    }
  }
  out.certificate = certify(op, data, standard, op.size());
  return out;
}

DataSpec random_coefficients(const SpectralOperator& op, std::size_t support, std::uint64_t seed,
                     double amplitude, double decay) {
  if (support == 0 || support > op.size()) {
    throw InvalidInput("random data support must lie in 1.." + std::to_string(op.size()));
  }
  PortableRng rng(seed);
  DataSpec d;
  d.u0.resize(support);
  d.u1.resize(support);
  for (std::size_t i = 0; i < support; ++i) {
    const double scale = std::pow(static_cast<double>(i + 1), -decay);
    const double a = rng.uniform(-amplitude, amplitude) * scale;
    const double b = rng.uniform(-amplitude, amplitude) * scale;
    d.u0[i] = a / op.eigenvalues()[i];
    d.u1[i] = b;
  }
  d.generator = "random";
  d.generator_params = {{"support", support}, {"seed", seed}, {"amplitude", amplitude}, {"decay", decay}};
  return d;
}

DataSpec geometric_data(const SpectralOperator& op, std::size_t support, double ratio,
                        bool continue_tail) {
  if (support == 0 || support > op.size()) {
    throw InvalidInput("geometric data support must lie in 1.." + std::to_string(op.size()));
  }
  if (continue_tail && !(ratio > 0.0 && ratio < 1.0)) {
    throw InvalidInput("a continued geometric tail needs 0 < ratio < 1");
  }
  DataSpec d;
  d.u0.resize(support);
  d.u1.assign(support, 0.0);
  for (std::size_t i = 0; i < support; ++i) {
    d.u0[i] = std::pow(ratio, static_cast<double>(i + 1)) / op.eigenvalues()[i];
  }
  if (continue_tail) {
    const double r2 = ratio * ratio;
    d.tail_bound = TailBound::geometric(r2 / (1.0 - r2), r2);
  }
  d.generator = "geometric";
  d.generator_params = {{"support", support}, {"ratio", ratio}, {"continue_tail", continue_tail}};
  return d;
}

// ----- sum property -----------------------------------------------------------------------

Decomposition sum_decompose(const SpectralOperator& op, const DataSpec& data,
                            const WeightFamily& weights, std::size_t thresholds_per_summand) {
  require_fits(op, data, "sum_decompose");
  weights.validate();
  const std::size_t N = data.size();

  Decomposition out;
  out.requested_thresholds = thresholds_per_summand;
  DataSpec* parts[2] = {&out.first, &out.second};
  for (DataSpec* p : parts) {
    p->u0.assign(N, 0.0);
    p->u1.assign(N, 0.0);
  }

  std::vector<double> log_tails(N + 1);
  for (std::size_t e = 0; e <= N; ++e) log_tails[e] = log_tail(op, data, e);

  std::ostringstream report;
  int owner = 0;
  std::size_t start = 1;
  bool infeasible = false;
  while (start <= N) {
    const std::size_t k = start;
    const double lw = weights.log_weight(k, op.lambda_at(k));
    std::size_t end = k;
    while (end < N && log_tails[end] + lw > -1.0) ++end;
    DecompositionBlock block{owner, start, end, k};
    if (log_tails[end] + lw > -1.0) {
      block.certifies_other_at = 0;
      infeasible = true;
      report << "tail bound beyond mode " << N << " is too large to certify the other summand at k = "
             << k << "; ";
    }
    for (std::size_t mode = start; mode <= end; ++mode) {
      parts[owner]->u0[mode - 1] = data.u0[mode - 1];
      parts[owner]->u1[mode - 1] = data.u1[mode - 1];
    }
    out.blocks.push_back(block);
    start = end + 1;
    if (log_tails[end] == kNegInf && start <= N) {
      // everything left is zero; it stays with the current owner
      out.blocks.back().end = N;
      start = N + 1;
    }
    if (start <= N) owner ^= 1;
  }
  // the unstored tail travels with the summand that owns the last block
  parts[owner]->tail_bound = data.tail_bound;

  for (int p = 0; p < 2; ++p) {
    parts[p]->generator = "sum_decompose";
    parts[p]->generator_params = {{"summand", p}, {"source", data.generator}};
  }
  const std::size_t k_max = std::max<std::size_t>(1, std::min(op.size(), std::max<std::size_t>(N, 1)));
  out.first_certificate = certify(op, out.first, weights, k_max);
  out.second_certificate = certify(op, out.second, weights, k_max);

  const std::size_t c1 = out.first_certificate.thresholds.size();
  const std::size_t c2 = out.second_certificate.thresholds.size();
  out.feasible = !infeasible && c1 >= thresholds_per_summand && c2 >= thresholds_per_summand;
  if (c1 < thresholds_per_summand || c2 < thresholds_per_summand) {
    report << "requested " << thresholds_per_summand << " thresholds per summand within N_data = " << N
           << ", found " << c1 << " and " << c2 << "; ";
  }
  out.report = report.str();
  return out;
}

DataSpec recombine(const DataSpec& v, const DataSpec& w) {
  if (v.size() != w.size()) throw InvalidInput("recombine: summands differ in length");
  DataSpec out;
  out.u0.resize(v.size());
  out.u1.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.u0[i] = v.u0[i] + w.u0[i];
    out.u1[i] = v.u1[i] + w.u1[i];
  }
  const auto& a = v.tail_bound;
  const auto& b = w.tail_bound;
  if (a.kind == TailBound::Kind::zero) {
    out.tail_bound = b;
  } else if (b.kind == TailBound::Kind::zero) {
    out.tail_bound = a;
  } else {
    out.tail_bound = TailBound::geometric(a.amplitude + b.amplitude, std::max(a.ratio, b.ratio));
  }
  out.generator = "recombined";
  return out;
}

std::uint64_t coefficient_checksum(const DataSpec& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::uint64_t x) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (x >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(data.size());
  for (const auto* vec : {&data.u0, &data.u1}) {
    for (double x : *vec) mix(std::bit_cast<std::uint64_t>(x == 0.0 ? 0.0 : x));
  }
  return h;
}

}  // namespace kirchhoff
