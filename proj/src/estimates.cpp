#include "kirchhoff/estimates.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "kirchhoff/errors.hpp"

namespace kirchhoff {
namespace {

constexpr double kStepTolerance = 1e-8;
constexpr double kSandwichTolerance = 1e-10;
constexpr double kInitialTolerance = 1e-12;
constexpr double kReplayRatioLimit = 2.0;

BoundReport make_report(std::string name, std::size_t k, bool log_space, double tolerance) {
  BoundReport r;
  r.bound = std::move(name);
  r.k = k;
  r.log_space = log_space;
  r.tolerance = tolerance;
  return r;
}

void record(BoundReport& r, double t, double lhs, double rhs, double violation) {
  r.times.push_back(t);
  r.lhs.push_back(lhs);
  r.rhs.push_back(rhs);
  if (violation > r.max_violation || (std::isnan(violation))) {
    r.max_violation = violation;
    r.worst_time = t;
  }
}

// lhs is a plain nonnegative value, rhs a logarithm. An exact zero lhs passes.
void record_log(BoundReport& r, double t, double lhs, double rhs_log) {
  const double lhs_log = lhs > 0.0 ? std::log(lhs) : kNegInf;
  double gap = kNegInf;
  if (lhs > 0.0) gap = rhs_log == kNegInf ? HUGE_VAL : lhs_log - rhs_log;
  record(r, t, lhs_log, rhs_log, gap);
}

void finish(BoundReport& r) { r.pass = !std::isnan(r.max_violation) && r.max_violation <= r.tolerance; }

void require_split(const Trajectory& traj, std::size_t k, const char* who) {
  if (traj.states.empty()) throw InvalidInput(std::string(who) + ": empty trajectory");
  if (k == 0 || k >= traj.dimension()) {
    throw InvalidInput(std::string(who) + ": threshold k must satisfy 1 <= k < n");
  }
}

void require_common_grid(const Trajectory& a, const Trajectory& b, const char* who) {
  bool same = a.states.size() == b.states.size();
  for (std::size_t j = 0; same && j < a.states.size(); ++j) same = a.states[j].t == b.states[j].t;
  if (!same) throw InvalidInput(std::string(who) + ": trajectories are not on a common grid");
}

EnergyPair high_energy(const SpectralOperator& op, const GalerkinState& s, std::size_t k) {
  return energy_pair(op, split_state(s, k).high);
}

// Energy of a − b on modes first..last (1-based), absent modes counting as 0.
double difference_energy(const SpectralOperator& op, const GalerkinState& a, const GalerkinState& b,
                         std::size_t last) {
  CompensatedSum kin;
  CompensatedSum pot;
  for (std::size_t i = 0; i < last; ++i) {
    const double va = i < a.dimension() ? a.position[i] : 0.0;
    const double vb = i < b.dimension() ? b.position[i] : 0.0;
    const double wa = i < a.dimension() ? a.velocity[i] : 0.0;
    const double wb = i < b.dimension() ? b.velocity[i] : 0.0;
    const double dw = wa - wb;
    const double dv = op.lambda_at(i + 1) * (va - vb);
    kin.add(dw * dw);
    pot.add(dv * dv);
  }
  return kin.value() + pot.value();
}

}  // namespace

EnvelopeConstants EnvelopeConstants::from(const ConstantBounds& bounds, double H0) {
  if (!(H0 >= 0.0)) throw InvalidInput("envelope constants: H0 must be nonnegative");
  EnvelopeConstants c;
  c.H0 = H0;
  c.mu1 = bounds.mu1;
  c.mu2 = bounds.mu2;
  c.L = bounds.lip;
  c.nu1 = std::min(1.0, bounds.mu1);
  c.nu2 = std::max(1.0, bounds.mu2);
  c.L1 = H0 / c.nu1;
  return c;
}

double F_energy(const SpectralOperator& op, const Nonlinearity& nl, const FrequencySplit& split) {
  const double phi = half_norm_sq(op, split.low.position, split.low.first_mode);
  const double p = half_norm_sq(op, split.high.position, split.high.first_mode);
  return norm_sq(split.high.velocity) + nl.M_increment(phi, p);
}

FSandwich F_sandwich(const SpectralOperator& op, const Nonlinearity& nl,
                     const EnvelopeConstants& consts, const FrequencySplit& split) {
  const EnergyPair e = energy_pair(op, split.high);
  return {consts.nu1 * e.total(), F_energy(op, nl, split), consts.nu2 * e.total()};
}

LogValue Lk_plus(const EnvelopeConstants& consts, double lambda_k, double t) {
  if (t < 0.0) throw InvalidInput("Lk_plus: t must be nonnegative");
  return LogValue::from_log(std::log(consts.nu2 / consts.nu1) +
                            consts.L * consts.H0 * lambda_k * t / (consts.nu1 * consts.nu1));
}

LogValue Lk_minus(const EnvelopeConstants& consts, double lambda_k, double t) {
  if (t < 0.0) throw InvalidInput("Lk_minus: t must be nonnegative");
  if (consts.L == 0.0) return LogValue::from_log(kNegInf);
  return LogValue::from_log(std::log(2.0 * consts.L) + 2.0 * std::log(consts.nu2 / consts.nu1) +
                            consts.a_k(lambda_k) * t);
}

BoundReport verify_low_bound(const SpectralOperator& op, const Trajectory& traj, std::size_t k,
                             const EnvelopeConstants& consts) {
  require_split(traj, k, "verify_low_bound");
  auto r = make_report("low_frequency_energy", k, false, kStepTolerance * std::max(consts.H0, 1.0));
  const double rhs = consts.L1;
  for (const auto& s : traj.states) {
    const double lhs = energy_pair(op, split_state(s, k).low).total();
    record(r, s.t, lhs, rhs, lhs - rhs);
  }
  finish(r);
  return r;
}

BoundReport verify_phi_derivative(const SpectralOperator& op, const Trajectory& traj,
                                  std::size_t k, const EnvelopeConstants& consts) {
  require_split(traj, k, "verify_phi_derivative");
  const double rhs = consts.L1 * op.lambda_at(k);
  auto r = make_report("phi_derivative", k, false, kStepTolerance * rhs);
  for (const auto& s : traj.states) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < k; ++i) {
      const double l = op.lambda_at(i + 1);
      acc.add(l * l * s.position[i] * s.velocity[i]);
    }
    const double lhs = std::abs(2.0 * acc.value());
    record(r, s.t, lhs, rhs, lhs - rhs);
  }
  finish(r);
  return r;
}

BoundReport verify_high_bound(const SpectralOperator& op, const Trajectory& traj, std::size_t k,
                              const DataSpec& data, const EnvelopeConstants& consts) {
  require_split(traj, k, "verify_high_bound");
  auto r = make_report("high_frequency_energy", k, true, kStepTolerance);
  const double log_R = log_tail(op, data, k);
  const double lambda_k = op.lambda_at(k);
  for (const auto& s : traj.states) {
    const double lhs = high_energy(op, s, k).total();
    record_log(r, s.t, lhs, log_R + Lk_plus(consts, lambda_k, s.t).log);
  }
  finish(r);
  return r;
}

BoundReport verify_F_sandwich(const SpectralOperator& op, const Nonlinearity& nl,
                              const Trajectory& traj, std::size_t k,
                              const EnvelopeConstants& consts) {
  require_split(traj, k, "verify_F_sandwich");
  // violation is relative to the upper comparison quantity
  auto r = make_report("F_sandwich", k, false, kSandwichTolerance);
  for (const auto& s : traj.states) {
    const FSandwich fs = F_sandwich(op, nl, consts, split_state(s, k));
    const double scale = std::max(fs.upper, DBL_MIN);
    record(r, s.t, fs.F, fs.upper, std::max(fs.lower - fs.F, fs.F - fs.upper) / scale);
  }
  finish(r);
  return r;
}

BoundReport verify_F_envelope(const SpectralOperator& op, const Nonlinearity& nl,
                              const Trajectory& traj, std::size_t k,
                              const EnvelopeConstants& consts) {
  require_split(traj, k, "verify_F_envelope");
  auto r = make_report("F_envelope", k, true, kStepTolerance);
  const double lambda_k = op.lambda_at(k);
  const double F0 = F_energy(op, nl, split_state(traj.states.front(), k));
  const double log_F0 = F0 > 0.0 ? std::log(F0) : kNegInf;
  const double rate = consts.L * consts.H0 * lambda_k / (consts.nu1 * consts.nu1);
  for (const auto& s : traj.states) {
    record_log(r, s.t, F_energy(op, nl, split_state(s, k)), log_F0 + rate * s.t);
  }
  finish(r);
  return r;
}

BoundReport verify_F_initial(const SpectralOperator& op, const Nonlinearity& nl,
                             const Trajectory& traj, std::size_t k, const DataSpec& data,
                             const EnvelopeConstants& consts) {
  require_split(traj, k, "verify_F_initial");
  const double rhs = consts.nu2 * tail(op, data, k);
  auto r = make_report("F_initial", k, false, kInitialTolerance * rhs);
  const auto& s = traj.states.front();
  const double lhs = F_energy(op, nl, split_state(s, k));
  record(r, s.t, lhs, rhs, lhs - rhs);
  finish(r);
  return r;
}

BoundReport verify_diff_bound(const SpectralOperator& op, const Trajectory& a,
                              const Trajectory& b, std::size_t k, const DataSpec& data,
                              const EnvelopeConstants& consts) {
  require_split(a, k, "verify_diff_bound");
  require_split(b, k, "verify_diff_bound");
  require_common_grid(a, b, "verify_diff_bound");
  auto r = make_report("low_frequency_difference", k, true, kStepTolerance);
  const double log_R2 = 2.0 * log_tail(op, data, k);
  const double lambda_k = op.lambda_at(k);
  for (std::size_t j = 0; j < a.states.size(); ++j) {
    const double t = a.states[j].t;
    const double lhs = difference_energy(op, a.states[j], b.states[j], k);
    record_log(r, t, lhs, log_R2 + Lk_minus(consts, lambda_k, t).log);
  }
  finish(r);
  return r;
}

double sup_energy_difference(const SpectralOperator& op, const Trajectory& a, const Trajectory& b) {
  require_common_grid(a, b, "sup_energy_difference");
  const std::size_t n = std::max(a.dimension(), b.dimension());
  double sup = 0.0;
  for (std::size_t j = 0; j < a.states.size(); ++j) {
    sup = std::max(sup, difference_energy(op, a.states[j], b.states[j], n));
  }
  return sup;
}

BoundReport verify_cauchy_bound(const SpectralOperator& op, const Trajectory& a,
                                const Trajectory& b, std::size_t k, const DataSpec& data) {
  require_split(a, k, "verify_cauchy_bound");
  require_split(b, k, "verify_cauchy_bound");
  require_common_grid(a, b, "verify_cauchy_bound");
  auto r = make_report("cauchy_difference", k, true, kStepTolerance);
  const double kd = static_cast<double>(k);
  const double rhs = log_tail(op, data, k) + std::log(5.0 * kd) + kd * op.lambda_at(k);
  const std::size_t n = std::max(a.dimension(), b.dimension());
  for (std::size_t j = 0; j < a.states.size(); ++j) {
    record_log(r, a.states[j].t, difference_energy(op, a.states[j], b.states[j], n), rhs);
  }
  finish(r);
  return r;
}

namespace {

struct RuleTerms {
  double lipschitz, ratio, growth, epsilon;
  double required() const { return std::max({lipschitz, ratio, growth, epsilon}); }
};

RuleTerms rule_terms(const EnvelopeConstants& c, double T, double eps) {
  if (!(T > 0.0)) throw InvalidInput("choose_k: T must be positive");
  if (!(eps > 0.0)) throw InvalidInput("choose_k: eps must be positive");
  const double ratio = c.nu2 / c.nu1;
  return {2.0 * c.L * ratio * ratio, ratio, c.growth_coefficient() * T, 5.0 / eps};
}

}  // namespace

bool satisfies_k_rule(const EnvelopeConstants& consts, std::size_t k, double T, double eps) {
  return static_cast<double>(k) >= rule_terms(consts, T, eps).required();
}

KSelection choose_k(const EnvelopeConstants& consts, const GapCertificate& cert, double T,
                    double eps) {
  const RuleTerms terms = rule_terms(consts, T, eps);
  KSelection sel;
  sel.lipschitz_term = terms.lipschitz;
  sel.ratio_term = terms.ratio;
  sel.growth_term = terms.growth;
  sel.epsilon_term = terms.epsilon;
  sel.required = terms.required();
  for (std::size_t k : cert.thresholds) {
    if (static_cast<double>(k) >= sel.required) {
      sel.k = k;
      return sel;
    }
  }
  if (cert.thresholds.empty()) {
    sel.unmet = "certificate is empty";
    return sel;
  }
  const double top = static_cast<double>(cert.thresholds.back());
  std::ostringstream msg;
  msg << "largest certified threshold " << cert.thresholds.back() << " fails ";
  if (top < terms.lipschitz) {
    msg << "k >= 2L(nu2/nu1)^2 = " << terms.lipschitz;
  } else if (top < terms.ratio) {
    msg << "k >= nu2/nu1 = " << terms.ratio;
  } else if (top < terms.growth) {
    msg << "k >= (1+mu2+4L*H0/nu1^2)T = " << terms.growth;
  } else {
    msg << "k >= 5/eps = " << terms.epsilon;
  }
  sel.unmet = msg.str();
  return sel;
}

MigrationSpectrum migration_spectrum(const SpectralOperator& op, const Trajectory& traj,
                                     const std::vector<Band>& bands) {
  const std::size_t n = traj.dimension();
  if (bands.empty()) throw InvalidInput("migration_spectrum: no bands");
  std::size_t next = 1;
  for (const auto& b : bands) {
    if (b.first != next || b.last < b.first) {
      throw InvalidInput("migration_spectrum: bands must partition 1..n in order without overlap");
    }
    next = b.last + 1;
  }
  if (next != n + 1) throw InvalidInput("migration_spectrum: bands must cover 1..n");

  MigrationSpectrum ms;
  ms.bands = bands;
  ms.energies.assign(bands.size(), {});
  for (const auto& s : traj.states) {
    ms.times.push_back(s.t);
    ms.totals.push_back(energy_pair(op, s).total());
    for (std::size_t b = 0; b < bands.size(); ++b) {
      CompensatedSum kin;
      CompensatedSum pot;
      for (std::size_t i = bands[b].first; i <= bands[b].last; ++i) {
        const double w = s.velocity[i - 1];
        const double v = op.lambda_at(i) * s.position[i - 1];
        kin.add(w * w);
        pot.add(v * v);
      }
      ms.energies[b].push_back(kin.value() + pot.value());
    }
  }
  return ms;
}

StudyOutput cauchy_study(const SpectralOperator& op, const Nonlinearity& nl, const DataSpec& data,
                         const GapCertificate& cert, std::vector<std::size_t> dims, double T,
                         const StudyOptions& options) {
  if (dims.empty()) throw InvalidInput("cauchy_study: no dimensions");
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (dims[j] == 0 || dims[j] > op.size()) throw InvalidInput("cauchy_study: dims must lie in 1..N");
    if (j > 0 && dims[j] <= dims[j - 1]) throw InvalidInput("cauchy_study: dims must be strictly increasing");
  }

  StudyOutput out;
  StudyReport& rep = out.report;
  rep.T = T;
  rep.epsilon = options.epsilon;
  rep.dims = dims;
  rep.grid_intervals = options.ctrl.intervals;
  rep.certificate = cert;

  const double H0 = compute_H0(op, nl, data);
  rep.bounds = nl.bounds() ? *nl.bounds() : certify_for_data(op, nl, data);
  rep.constants = EnvelopeConstants::from(rep.bounds, H0);
  rep.selection = choose_k(rep.constants, cert, T, options.epsilon);
  if (options.forced_k) {
    rep.k = *options.forced_k;
    rep.k_forced = true;
    rep.choose_k_bypassed = rep.selection.k != rep.k;
  } else if (rep.selection.k) {
    rep.k = *rep.selection.k;
  } else {
    throw InvalidInput("cauchy_study: no admissible threshold: " + rep.selection.unmet);
  }
  if (rep.k == 0 || dims.front() <= rep.k) {
    throw InvalidInput("cauchy_study: every dimension must exceed the threshold k = " +
                       std::to_string(rep.k));
  }
  rep.k_margin = cert.margin(rep.k);

  const Nonlinearity bounded = nl.with_bounds(rep.bounds);
  out.trajectories = integrate_family(op, bounded, data, dims, T, options.ctrl, options.jobs);
  for (std::size_t j = 0; j < dims.size(); ++j) {
    const auto& tr = out.trajectories[j];
    if (!tr.ok()) {
      throw TrajectoryFailure("cauchy_study: integration for n = " + std::to_string(dims[j]) +
                                  " failed (" + to_string(tr.status) + "): " + tr.diagnostic,
                              tr.status == TrajectoryStatus::budget_exceeded);
    }
  }

  const auto note = [&rep](const BoundReport& r, const std::string& where) {
    if (!r.pass) {
      rep.all_pass = false;
      rep.failures.push_back(r.bound + " at k = " + std::to_string(r.k) + " (" + where + ")");
    }
  };

  std::vector<std::size_t> ks{rep.k};
  for (std::size_t k : options.verify_ks) {
    if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
  }

  for (std::size_t j = 0; j < dims.size(); ++j) {
    const auto& tr = out.trajectories[j];
    DimensionResult dr;
    dr.n = dims[j];
    dr.status = tr.status;
    dr.diagnostic = tr.diagnostic;
    dr.hamiltonian_drift = tr.hamiltonian_drift;
    dr.max_lipschitz_quotient = coefficient_trace(op, bounded, tr).max_quotient;
    dr.accepted_steps = tr.accepted;
    if (tr.max_error_ratio > kReplayRatioLimit) {
      rep.all_pass = false;
      rep.failures.push_back("replayed step schedule for n = " + std::to_string(dr.n) +
                             " exceeds the local error target");
    }
    const std::string where = "n = " + std::to_string(dr.n);
    for (std::size_t k : ks) {
      if (k == 0 || k >= dr.n) continue;
      if (options.verify_low) dr.reports.push_back(verify_low_bound(op, tr, k, rep.constants));
      if (options.verify_phi) dr.reports.push_back(verify_phi_derivative(op, tr, k, rep.constants));
      if (options.verify_high) dr.reports.push_back(verify_high_bound(op, tr, k, data, rep.constants));
      if (options.verify_F) {
        dr.reports.push_back(verify_F_sandwich(op, bounded, tr, k, rep.constants));
        dr.reports.push_back(verify_F_envelope(op, bounded, tr, k, rep.constants));
        dr.reports.push_back(verify_F_initial(op, bounded, tr, k, data, rep.constants));
      }
    }
    for (const auto& r : dr.reports) note(r, where);
    rep.dimensions.push_back(std::move(dr));
  }

  for (std::size_t i = 0; i < dims.size(); ++i) {
    for (std::size_t j = i + 1; j < dims.size(); ++j) {
      const auto& a = out.trajectories[i];
      const auto& b = out.trajectories[j];
      PairResult pr;
      pr.n = dims[i];
      pr.m = dims[j];
      pr.sup_difference = sup_energy_difference(op, a, b);
      const std::string where = "pair " + std::to_string(pr.n) + "," + std::to_string(pr.m);
      pr.cauchy = verify_cauchy_bound(op, a, b, rep.k, data);
      note(*pr.cauchy, where);
      if (options.verify_diff) {
        pr.diff = verify_diff_bound(op, a, b, rep.k, data, rep.constants);
        note(*pr.diff, where);
      }
      for (std::size_t k : cert.thresholds) {
        if (k >= pr.n) break;
        if (!satisfies_k_rule(rep.constants, k, T, options.epsilon)) continue;
        CertifiedPairCheck c{k, verify_cauchy_bound(op, a, b, k, data)};
        note(c.report, where);
        pr.certified.push_back(std::move(c));
      }
      rep.pairs.push_back(std::move(pr));
    }
  }

  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    double worst = 0.0;
    for (const auto& pr : rep.pairs) {
      if (pr.n == dims[i]) worst = std::max(worst, pr.sup_difference);
    }
    rep.sup_difference_by_min_dim.emplace_back(dims[i], worst);
  }
  for (std::size_t i = 1; i < rep.sup_difference_by_min_dim.size(); ++i) {
    const double prev = rep.sup_difference_by_min_dim[i - 1].second;
    const double cur = rep.sup_difference_by_min_dim[i].second;
    if (cur > prev * (1.0 + 1e-9)) rep.decay_monotone = false;
  }
  if (!rep.decay_monotone) {
    rep.all_pass = false;
    rep.failures.push_back("sup differences are not nonincreasing in min(n, m)");
  }
  return out;
}

}  // namespace kirchhoff
