#include "kirchhoff/solver.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "kirchhoff/errors.hpp"
#include "kirchhoff/io.hpp"
#include "kirchhoff/numerics.hpp"

namespace kirchhoff {
namespace {

// Dormand–Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

// PI step control, Hairer–Wanner constants for DOPRI5.
constexpr double kSafety = 0.9;
constexpr double kMaxShrink = 5.0;  // h_new ≥ h / 5
constexpr double kMaxGrow = 0.1;    // h_new ≤ 10 h
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - 0.75 * kBeta;

// Scale floor so modal ratios never divide by subnormal amplitudes.
constexpr double kModalFloor = 1e-280;

// First-order modal system y = [v; v'] of a Galerkin truncation starting at mode 1.
class ModalSystem {
 public:
  ModalSystem(const SpectralOperator& op, const Nonlinearity& nl, std::size_t n)
      : nl_(nl), n_(n), lambda_(op.eigenvalues().begin(), op.eigenvalues().begin() + static_cast<long>(n)) {
    lambda_sq_.resize(n);
    for (std::size_t i = 0; i < n; ++i) lambda_sq_[i] = lambda_[i] * lambda_[i];
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return 2 * n_; }
  double lambda(std::size_t i) const noexcept { return lambda_[i]; }

  double sigma(const double* y) const {
    CompensatedSum s;
    for (std::size_t i = 0; i < n_; ++i) {
      const double w = lambda_[i] * y[i];
      s.add(w * w);
    }
    return s.value();
  }

  void eval(const double* y, double* dy) const {
    const double c = nl_.m(sigma(y));
    for (std::size_t i = 0; i < n_; ++i) {
      dy[i] = y[n_ + i];
      dy[n_ + i] = -c * lambda_sq_[i] * y[i];
    }
  }

  double hamiltonian(const double* y) const {
    CompensatedSum kin;
    for (std::size_t i = 0; i < n_; ++i) kin.add(y[n_ + i] * y[n_ + i]);
    return kin.value() + nl_.M(sigma(y));
  }

  bool in_range(const double* y) const { return nl_.in_working_range(sigma(y)); }

 private:
  const Nonlinearity& nl_;
  std::size_t n_;
  std::vector<double> lambda_;
  std::vector<double> lambda_sq_;
};

class Stepper {
 public:
  explicit Stepper(const ModalSystem& sys)
      : sys_(sys), dim_(sys.size()), k_{}, ytmp_(dim_), ynew_(dim_), err_(dim_) {
    for (auto& k : k_) k.resize(dim_);
  }

  // k1 must hold f(y) on entry; on success ynew() and k7 (= f(ynew)) are filled.
  void attempt(const std::vector<double>& y, double h) {
    auto& [k1, k2, k3, k4, k5, k6, k7] = k_;
    for (std::size_t j = 0; j < dim_; ++j) ytmp_[j] = y[j] + h * a21 * k1[j];
    sys_.eval(ytmp_.data(), k2.data());
    for (std::size_t j = 0; j < dim_; ++j) ytmp_[j] = y[j] + h * (a31 * k1[j] + a32 * k2[j]);
    sys_.eval(ytmp_.data(), k3.data());
    for (std::size_t j = 0; j < dim_; ++j)
      ytmp_[j] = y[j] + h * (a41 * k1[j] + a42 * k2[j] + a43 * k3[j]);
    sys_.eval(ytmp_.data(), k4.data());
    for (std::size_t j = 0; j < dim_; ++j)
      ytmp_[j] = y[j] + h * (a51 * k1[j] + a52 * k2[j] + a53 * k3[j] + a54 * k4[j]);
    sys_.eval(ytmp_.data(), k5.data());
    for (std::size_t j = 0; j < dim_; ++j)
      ytmp_[j] = y[j] + h * (a61 * k1[j] + a62 * k2[j] + a63 * k3[j] + a64 * k4[j] + a65 * k5[j]);
    sys_.eval(ytmp_.data(), k6.data());
    for (std::size_t j = 0; j < dim_; ++j)
      ynew_[j] = y[j] + h * (a71 * k1[j] + a73 * k3[j] + a74 * k4[j] + a75 * k5[j] + a76 * k6[j]);
    sys_.eval(ynew_.data(), k7.data());
    for (std::size_t j = 0; j < dim_; ++j)
      err_[j] = h * (e1 * k1[j] + e3 * k3[j] + e4 * k4[j] + e5 * k5[j] + e6 * k6[j] + e7 * k7[j]);
  }

  double error_ratio(const std::vector<double>& y, const IntegratorControls& ctrl) const {
    const std::size_t n = sys_.n();
    double worst = 0.0;
    if (ctrl.norm == ErrorNorm::modal) {
      for (std::size_t i = 0; i < n; ++i) {
        const double l = sys_.lambda(i);
        const double e = std::hypot(err_[n + i], l * err_[i]);
        if (e == 0.0) continue;
        const double amp = std::max(std::hypot(y[n + i], l * y[i]), std::hypot(ynew_[n + i], l * ynew_[i]));
        worst = std::max(worst, e / (ctrl.rtol * amp + kModalFloor));
      }
    } else {
      for (std::size_t j = 0; j < dim_; ++j) {
        const double sc = ctrl.atol + ctrl.rtol * std::max(std::abs(y[j]), std::abs(ynew_[j]));
        worst = std::max(worst, std::abs(err_[j]) / sc);
      }
    }
    for (double v : ynew_) {
      if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
    }
    return worst;
  }

  std::vector<double>& k1() { return k_[0]; }
  const std::vector<double>& k7() const { return k_[6]; }
  const std::vector<double>& ynew() const { return ynew_; }

 private:
  const ModalSystem& sys_;
  std::size_t dim_;
  std::array<std::vector<double>, 7> k_;
  std::vector<double> ytmp_, ynew_, err_;
};

std::vector<double> pack(const GalerkinState& s) {
  std::vector<double> y(s.position);
  y.insert(y.end(), s.velocity.begin(), s.velocity.end());
  return y;
}

GalerkinState unpack(const std::vector<double>& y, double t) {
  const std::size_t n = y.size() / 2;
  GalerkinState s;
  s.t = t;
  s.position.assign(y.begin(), y.begin() + static_cast<long>(n));
  s.velocity.assign(y.begin() + static_cast<long>(n), y.end());
  return s;
}

std::vector<double> uniform_grid(double T, std::size_t intervals) {
  std::vector<double> g(intervals + 1);
  for (std::size_t j = 0; j < intervals; ++j) {
    g[j] = T * static_cast<double>(j) / static_cast<double>(intervals);
  }
  g[intervals] = T;
  return g;
}

void check_initial(const SpectralOperator& op, const GalerkinState& initial, double T,
                   const IntegratorControls& ctrl) {
  validate_state(op, initial);
  if (initial.first_mode != 1) throw InvalidInput("integrate: initial state must start at mode 1");
  if (initial.dimension() == 0) throw InvalidInput("integrate: empty state");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("integrate: T must be positive");
  ctrl.validate();
}

// Shared bookkeeping for both drivers: sampling, drift guard, range flags.
struct Recorder {
  const ModalSystem& sys;
  const IntegratorControls& ctrl;
  Trajectory& traj;
  double H_initial = 0.0;

  bool sample(const std::vector<double>& y, double t) {
    traj.states.push_back(unpack(y, t));
    const double drift = std::abs(sys.hamiltonian(y.data()) - H_initial) / std::max(H_initial, 1.0);
    traj.hamiltonian_drift = std::max(traj.hamiltonian_drift, drift);
    if (!(drift <= ctrl.drift_guard)) {
      traj.status = TrajectoryStatus::drift_guard;
      std::ostringstream msg;
      msg << "relative Hamiltonian drift " << drift << " at t = " << t << " exceeds guard "
          << ctrl.drift_guard;
      traj.diagnostic = msg.str();
      return false;
    }
    return true;
  }

  void accepted(const std::vector<double>& y, double t) {
    ++traj.accepted;
    traj.step_times.push_back(t);
    if (!sys.in_range(y.data())) ++traj.range_excursions;
    if (ctrl.record_steps) traj.step_states.push_back(unpack(y, t));
  }
};

double initial_step(const ModalSystem& sys, const Nonlinearity& nl, const std::vector<double>& y,
                    double rtol, double cap) {
  const std::size_t n = sys.n();
  std::size_t top = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 0.0 || y[n + i] != 0.0) top = i + 1;
  }
  if (top == 0) return cap;
  const double omega = std::sqrt(std::max(nl.m(sys.sigma(y.data())), 1e-300)) * sys.lambda(top - 1);
  return std::min(0.1 * std::pow(rtol, 0.2) / std::max(omega, 1e-12), cap);
}

}  // namespace

void IntegratorControls::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw InvalidInput("integrator tolerances must be positive");
  if (intervals == 0) throw InvalidInput("integrator needs at least one output interval");
  if (!(drift_guard > 0.0)) throw InvalidInput("drift guard must be positive");
  if (!(work_budget > 0.0)) throw InvalidInput("work budget must be positive");
}

std::string to_string(TrajectoryStatus status) {
  switch (status) {
    case TrajectoryStatus::ok: return "ok";
    case TrajectoryStatus::step_underflow: return "step_underflow";
    case TrajectoryStatus::drift_guard: return "drift_guard";
    case TrajectoryStatus::budget_exceeded: return "budget_exceeded";
    case TrajectoryStatus::non_finite: return "non_finite";
  }
  return "unknown";
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t(states.size());
  for (std::size_t j = 0; j < states.size(); ++j) t[j] = states[j].t;
  return t;
}

ModalDerivative rhs(const SpectralOperator& op, const Nonlinearity& nl, const GalerkinState& state) {
  validate_state(op, state);
  const double sigma = half_norm_sq(op, state.position, state.first_mode);
  const MValue c = eval_m(nl, sigma);
  ModalDerivative d;
  d.velocity = state.velocity;
  d.acceleration.resize(state.dimension());
  const auto lambda = op.eigenvalues().subspan(state.first_mode - 1, state.dimension());
  for (std::size_t i = 0; i < state.dimension(); ++i) {
    d.acceleration[i] = -c.value * lambda[i] * lambda[i] * state.position[i];
    if (!std::isfinite(d.acceleration[i])) throw NumericalFailure("rhs: non-finite acceleration");
  }
  d.out_of_range = c.out_of_range;
  return d;
}

double hamiltonian(const SpectralOperator& op, const Nonlinearity& nl, const GalerkinState& state) {
  const EnergyPair e = energy_pair(op, state);
  return e.kinetic + nl.M(e.potential_seminorm);
}

Trajectory integrate(const SpectralOperator& op, const Nonlinearity& nl,
                     const GalerkinState& initial, double T, const IntegratorControls& ctrl) {
  check_initial(op, initial, T, ctrl);
  const ModalSystem sys(op, nl, initial.dimension());
  Trajectory traj;
  traj.rtol = ctrl.rtol;
  traj.atol = ctrl.atol;
  const auto grid = uniform_grid(T, ctrl.intervals);

  std::vector<double> y = pack(initial);
  Recorder rec{sys, ctrl, traj, sys.hamiltonian(y.data())};
  if (!std::isfinite(rec.H_initial)) {
    traj.status = TrajectoryStatus::non_finite;
    traj.diagnostic = "initial Hamiltonian is not finite";
    return traj;
  }
  rec.sample(y, 0.0);

  Stepper stepper(sys);
  sys.eval(y.data(), stepper.k1().data());
  double t = 0.0;
  double h = initial_step(sys, nl, y, ctrl.rtol, grid[1] - grid[0]);
  double facold = 1e-4;
  bool last_rejected = false;
  double work = 0.0;
  std::size_t next = 1;

  while (next < grid.size()) {
    const double target = grid[next];
    const bool landing = t + 1.01 * h >= target;
    // the step is taken as t_new − t so a replay of the recorded end points is bit-identical
    const double t_new = landing ? target : t + h;
    const double step = t_new - t;
    if (!(step > std::abs(t) * 1e-14) || step < 1e-300) {
      traj.status = TrajectoryStatus::step_underflow;
      std::ostringstream msg;
      msg << "step size " << step << " underflows at t = " << t;
      traj.diagnostic = msg.str();
      return traj;
    }
    work += static_cast<double>(sys.n());
    if (work > ctrl.work_budget) {
      traj.status = TrajectoryStatus::budget_exceeded;
      std::ostringstream msg;
      msg << "work budget " << ctrl.work_budget << " exhausted at t = " << t << " of " << T;
      traj.diagnostic = msg.str();
      return traj;
    }

    stepper.attempt(y, step);
    const double err = stepper.error_ratio(y, ctrl);
    if (!std::isfinite(err)) {
      ++traj.rejected;
      h = step * 0.1;
      last_rejected = true;
      continue;
    }
    const double fac11 = std::pow(std::max(err, 1e-300), kExpo);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(facold, kBeta);
      fac = std::clamp(fac / kSafety, kMaxGrow, kMaxShrink);
      double hnew = step / fac;
      if (last_rejected) hnew = std::min(hnew, step);
      facold = std::max(err, 1e-4);
      last_rejected = false;

      y = stepper.ynew();
      stepper.k1() = stepper.k7();
      t = t_new;
      rec.accepted(y, t);
      if (landing) {
        if (!rec.sample(y, t)) return traj;
        ++next;
        // keep the controller's proposal rather than the shortened landing step
        h = std::max(hnew, h);
      } else {
        h = hnew;
      }
    } else {
      ++traj.rejected;
      h = step / std::min(kMaxShrink, fac11 / kSafety);
      last_rejected = true;
    }
  }
  return traj;
}

Trajectory integrate_on_schedule(const SpectralOperator& op, const Nonlinearity& nl,
                                 const GalerkinState& initial, std::span<const double> step_times,
                                 double T, const IntegratorControls& ctrl) {
  check_initial(op, initial, T, ctrl);
  if (step_times.empty() || step_times.back() != T) {
    throw InvalidInput("integrate_on_schedule: schedule must end at T");
  }
  const ModalSystem sys(op, nl, initial.dimension());
  Trajectory traj;
  traj.method += " (replayed schedule)";
  traj.rtol = ctrl.rtol;
  traj.atol = ctrl.atol;
  const auto grid = uniform_grid(T, ctrl.intervals);
  {
    std::size_t g = 1;
    for (double t_step : step_times) {
      if (g < grid.size() && t_step == grid[g]) ++g;
    }
    if (g != grid.size()) {
      throw InvalidInput("integrate_on_schedule: output grid times are not step end points");
    }
  }

  std::vector<double> y = pack(initial);
  Recorder rec{sys, ctrl, traj, sys.hamiltonian(y.data())};
  rec.sample(y, 0.0);
  Stepper stepper(sys);
  sys.eval(y.data(), stepper.k1().data());
  double t = 0.0;
  std::size_t next = 1;
  for (double t_next : step_times) {
    if (!(t_next > t)) throw InvalidInput("integrate_on_schedule: step times must increase");
    stepper.attempt(y, t_next - t);
    const double err = stepper.error_ratio(y, ctrl);
    if (!std::isfinite(err)) {
      traj.status = TrajectoryStatus::non_finite;
      traj.diagnostic = "non-finite state on the replayed schedule";
      return traj;
    }
    traj.max_error_ratio = std::max(traj.max_error_ratio, err);
    y = stepper.ynew();
    stepper.k1() = stepper.k7();
    t = t_next;
    rec.accepted(y, t);
    if (next < grid.size() && t == grid[next]) {
      if (!rec.sample(y, t)) return traj;
      ++next;
    }
  }
  return traj;
}

std::vector<Trajectory> integrate_family(const SpectralOperator& op, const Nonlinearity& nl,
                                         const DataSpec& data, std::span<const std::size_t> dims,
                                         double T, const IntegratorControls& ctrl,
                                         std::size_t jobs) {
  if (dims.empty()) throw InvalidInput("integrate_family: no dimensions");
  for (std::size_t j = 1; j < dims.size(); ++j) {
    if (dims[j] <= dims[j - 1]) throw InvalidInput("integrate_family: dims must be strictly increasing");
  }
  std::vector<Trajectory> out(dims.size());
  const std::size_t largest = dims.size() - 1;
  out[largest] = integrate(op, nl, project_data(op, data, dims[largest]), T, ctrl);
  if (!out[largest].ok()) {
    for (std::size_t j = 0; j < largest; ++j) {
      out[j].status = out[largest].status;
      out[j].diagnostic = "reference integration (n = " + std::to_string(dims[largest]) +
                          ") failed: " + out[largest].diagnostic;
    }
    return out;
  }
  const auto& schedule = out[largest].step_times;
  std::atomic<std::size_t> cursor{0};
  const auto worker = [&]() {
    for (std::size_t j = cursor++; j < largest; j = cursor++) {
      out[j] = integrate_on_schedule(op, nl, project_data(op, data, dims[j]), schedule, T, ctrl);
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(largest, 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < threads; ++j) pool.emplace_back(worker);
  }
  return out;
}

CoefficientTrace coefficient_trace(const SpectralOperator& op, const Nonlinearity& nl,
                                   const Trajectory& traj) {
  CoefficientTrace tr;
  for (const auto& s : traj.states) {
    const MValue c = eval_m(nl, half_norm_sq(op, s.position, s.first_mode));
    tr.times.push_back(s.t);
    tr.c.push_back(c.value);
    if (c.out_of_range) ++tr.out_of_range;
  }
  for (std::size_t j = 0; j + 1 < tr.c.size(); ++j) {
    const double q = std::abs(tr.c[j + 1] - tr.c[j]) / (tr.times[j + 1] - tr.times[j]);
    tr.lipschitz_quotients.push_back(q);
    tr.max_quotient = std::max(tr.max_quotient, q);
  }
  return tr;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, CsvLayout layout) {
  const std::size_t n = traj.dimension();
  if (layout == CsvLayout::long_format) {
    out << "t,i,position,velocity\n";
    for (const auto& s : traj.states) {
      for (std::size_t i = 0; i < s.dimension(); ++i) {
        out << format_number(s.t) << ',' << s.first_mode + i << ',' << format_number(s.position[i])
            << ',' << format_number(s.velocity[i]) << '\n';
      }
    }
    return;
  }
  out << 't';
  for (std::size_t i = 1; i <= n; ++i) out << ",v" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",w" << i;
  out << '\n';
  for (const auto& s : traj.states) {
    out << format_number(s.t);
    for (double v : s.position) out << ',' << format_number(v);
    for (double w : s.velocity) out << ',' << format_number(w);
    out << '\n';
  }
}

void write_trace_csv(std::ostream& out, const CoefficientTrace& trace) {
  out << "t,c,lipschitz_quotient\n";
  for (std::size_t j = 0; j < trace.times.size(); ++j) {
    out << format_number(trace.times[j]) << ',' << format_number(trace.c[j]) << ',';
    // the quotient of interval [t_j, t_{j+1}] is reported on its left end point
    if (j < trace.lipschitz_quotients.size()) out << format_number(trace.lipschitz_quotients[j]);
    out << '\n';
  }
}

void write_hamiltonian_csv(std::ostream& out, const SpectralOperator& op, const Nonlinearity& nl,
                           const Trajectory& traj) {
  out << "t,hamiltonian,relative_drift\n";
  if (traj.states.empty()) return;
  const double H0 = hamiltonian(op, nl, traj.states.front());
  for (const auto& s : traj.states) {
    const double H = hamiltonian(op, nl, s);
    out << format_number(s.t) << ',' << format_number(H) << ','
        << format_number(std::abs(H - H0) / std::max(H0, 1.0)) << '\n';
  }
}

}  // namespace kirchhoff
