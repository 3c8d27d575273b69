// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "instances.hpp"
#include "kirchhoff/estimates.hpp"
#include "kirchhoff/experiment.hpp"
#include "oracles.hpp"

using namespace kirchhoff;
namespace fs = std::filesystem;

namespace {

// tolerances
constexpr double kOracleTol = 1e-8;
constexpr double kOracleSeconds = 5.0;
constexpr double kDriftTol = 1e-8;
constexpr double kDriftReduction = 10.0;
constexpr std::size_t kCertifyInstances = 100;
constexpr std::size_t kDecomposeInstances = 50;

struct Outcome {
  bool pass = true;
  std::string detail;
};

fs::path config_path(const std::string& name) {
  return fs::path(KIRCHHOFF_SOURCE_DIR) / "configs" / name;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kirchhoff_acceptance" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

int converge(const fs::path& out, std::string& log) {
  std::ostringstream l, e;
  const int code = run_subcommand("converge", config_path("lacunary_converge.json").string(),
                                  out.string(), 1, l, e);
  log = l.str() + e.str();
  return code;
}

// Shared run for criteria 2 to 4.
struct EnergyRun {
  ExperimentConfig cfg;
  Nonlinearity nl = Nonlinearity::constant(1.0);
  EnvelopeConstants consts;
  Trajectory standard;
  Trajectory tight;
};

const EnergyRun& energy_run() {
  static const EnergyRun run = [] {
    EnergyRun r;
    r.cfg = load_config(config_path("lacunary_n64.json"));
    const auto& op = r.cfg.op;
    const std::size_t N = op.size();
    const auto bounds = certify_for_data(op, *r.cfg.nl, r.cfg.data);
    r.nl = r.cfg.nl->with_bounds(bounds);
    r.consts = EnvelopeConstants::from(bounds, compute_H0(op, *r.cfg.nl, r.cfg.data));
    const auto init = project_data(op, r.cfg.data, N);
    r.standard = integrate(op, r.nl, init, r.cfg.T, IntegratorControls{});
    IntegratorControls tight;
    tight.rtol *= 1e-2;
    r.tight = integrate(op, r.nl, init, r.cfg.T, tight);
    return r;
  }();
  return run;
}

Outcome criterion1() {
  const auto cfg = load_config(config_path("constant_random.json"));
  const auto init = project_data(cfg.op, cfg.data, cfg.dims.back());
  const auto start = std::chrono::steady_clock::now();
  const auto tr = integrate(cfg.op, *cfg.nl, init, cfg.T, cfg.ctrl);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!tr.ok()) return {false, "integration failed: " + tr.diagnostic};
  double worst = 0.0;
  for (const auto& s : tr.states) {
    for (std::size_t i = 0; i < s.dimension(); ++i) {
      const double l = cfg.op.lambda_at(i + 1);
      worst = std::max(worst, std::abs(s.position[i] -
                                       oracle::linear_position(init.position[i], init.velocity[i], l, s.t)));
    }
  }
  return {worst <= kOracleTol && seconds <= kOracleSeconds,
          "max abs error " + sci(worst) + " (tol " + sci(kOracleTol) + "), " + sci(seconds) + " s"};
}

Outcome criterion2() {
  const auto& r = energy_run();
  if (!r.standard.ok() || !r.tight.ok()) return {false, "integration failed"};
  const double a = r.standard.hamiltonian_drift;
  const double b = r.tight.hamiltonian_drift;
  const bool pass = a <= kDriftTol && b * kDriftReduction <= a;
  return {pass, "drift " + sci(a) + " at rtol " + sci(r.standard.rtol) + ", " + sci(b) + " at rtol " +
                    sci(r.tight.rtol) + " (reduction x" + sci(a / b) + ")"};
}

Outcome criterion3() {
  const auto& r = energy_run();
  if (!r.standard.ok()) return {false, "integration failed"};
  Outcome o;
  for (std::size_t k : {4u, 8u, 16u}) {
    for (const auto& rep : {verify_low_bound(r.cfg.op, r.standard, k, r.consts),
                            verify_phi_derivative(r.cfg.op, r.standard, k, r.consts)}) {
      if (!rep.pass) {
        o.pass = false;
        o.detail += rep.bound + " k=" + std::to_string(k) + " violation " + sci(rep.max_violation) + "; ";
      }
    }
  }
  if (o.pass) o.detail = "low-frequency energy and phi' bounds hold for k in {4, 8, 16}";
  return o;
}

Outcome criterion4() {
  const auto& r = energy_run();
  if (!r.standard.ok()) return {false, "integration failed"};
  Outcome o;
  double worst_sandwich = -HUGE_VAL;
  for (std::size_t k : {4u, 8u, 16u}) {
    const auto sandwich = verify_F_sandwich(r.cfg.op, r.nl, r.standard, k, r.consts);
    worst_sandwich = std::max(worst_sandwich, sandwich.max_violation);
    for (const auto& rep : {sandwich, verify_F_envelope(r.cfg.op, r.nl, r.standard, k, r.consts),
                            verify_F_initial(r.cfg.op, r.nl, r.standard, k, r.cfg.data, r.consts)}) {
      if (!rep.pass) {
        o.pass = false;
        o.detail += rep.bound + " k=" + std::to_string(k) + " violation " + sci(rep.max_violation) + "; ";
      }
    }
  }
  if (o.pass) {
    o.detail = "sandwich, envelope and F(0) bounds hold for k in {4, 8, 16}; worst relative sandwich gap " +
               sci(worst_sandwich);
  }
  return o;
}

Outcome criterion5() {
  const auto cfg = load_config(config_path("lacunary_converge.json"));
  if (cfg.T != 2.0 || cfg.epsilon != 0.5) return {false, "shipped config no longer uses T = 2, eps = 0.5"};
  const auto cert = certify(cfg.op, cfg.data, cfg.weights, cfg.k_max);
  StudyOptions opt;
  opt.epsilon = cfg.epsilon;
  opt.ctrl = cfg.ctrl;
  const auto study = cauchy_study(cfg.op, *cfg.nl, cfg.data, cert, cfg.dims, cfg.T, opt);
  const auto& rep = study.report;
  if (rep.choose_k_bypassed || !cert.contains(rep.k)) return {false, "k was not chosen from the certificate"};
  Outcome o;
  std::size_t checked = 0;
  for (const auto& p : rep.pairs) {
    const bool wanted = (p.n == 32 && p.m == 64) || (p.n == 64 && p.m == 128);
    if (!wanted) continue;
    ++checked;
    if (!p.diff || !p.diff->pass) {
      o.pass = false;
      o.detail += "(" + std::to_string(p.n) + "," + std::to_string(p.m) + ") failed; ";
    }
  }
  if (checked != 2) return {false, "pairs (32,64) and (64,128) not both present"};
  if (o.pass) o.detail = "difference envelope holds for (32,64) and (64,128) at k = " + std::to_string(rep.k);
  return o;
}

Outcome criterion6() {
  const auto out = scratch("c6");
  std::string log;
  const int code = converge(out, log);
  if (code != kExitOk) return {false, "converge exited " + std::to_string(code) + ": " + log};
  const auto study = json::parse(slurp(out / "study.json"));
  std::size_t checks = 0;
  bool pass = true;
  for (const auto& p : study["pairs"]) {
    for (const auto& c : p["certified"]) {
      ++checks;
      pass = pass && c["pass"].get<bool>();
    }
  }
  std::vector<double> sups;
  for (const auto& s : study["sup_difference_by_min_dim"]) sups.push_back(s["sup_difference"].get<double>());
  bool monotone = true;
  for (std::size_t j = 1; j < sups.size(); ++j) monotone = monotone && sups[j] <= sups[j - 1];
  std::string seq;
  for (double s : sups) seq += sci(s) + " ";
  return {pass && monotone && checks > 0 && study["decay_monotone"].get<bool>(),
          std::to_string(checks) + " certified pair checks, sup differences by min dim: " + seq};
}

Outcome criterion7() {
  std::size_t compared = 0, disagreements = 0;
  for (std::uint64_t seed = 0; seed < kCertifyInstances; ++seed) {
    const auto inst = instances::random_instance(1000 + seed);
    const auto cert = certify(inst.op, inst.data, WeightFamily::standard(), inst.op.size());
    std::vector<double> lambda(inst.op.eigenvalues().begin(), inst.op.eigenvalues().end());
    for (std::size_t k = 1; k <= inst.op.size(); ++k) {
      const auto direct = oracle::certified(lambda, inst.data.u0, inst.data.u1, k);
      if (!direct) continue;
      ++compared;
      if (*direct != cert.contains(k)) ++disagreements;
    }
  }
  std::size_t bad_decompositions = 0;
  for (std::uint64_t seed = 0; seed < kDecomposeInstances; ++seed) {
    const auto inst = instances::random_decomposable(2000 + seed);
    const auto d = sum_decompose(inst.op, inst.data, WeightFamily::standard());
    const auto back = recombine(d.first, d.second);
    const auto k_max = d.first_certificate.k_max;
    const bool ok = back.u0 == inst.data.u0 && back.u1 == inst.data.u1 &&
                    certify(inst.op, d.first, WeightFamily::standard(), k_max).thresholds ==
                        d.first_certificate.thresholds &&
                    certify(inst.op, d.second, WeightFamily::standard(), k_max).thresholds ==
                        d.second_certificate.thresholds;
    if (!ok) ++bad_decompositions;
  }
  return {disagreements == 0 && bad_decompositions == 0 && compared > 0,
          std::to_string(disagreements) + " disagreements in " + std::to_string(compared) +
              " representable thresholds over " + std::to_string(kCertifyInstances) + " instances; " +
              std::to_string(bad_decompositions) + " of " + std::to_string(kDecomposeInstances) +
              " decompositions failed"};
}

Outcome criterion8() {
  std::vector<std::string> failed;
  const auto expect = [&failed](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };
  const auto state = [](std::vector<double> p, std::vector<double> v) {
    GalerkinState s;
    s.position = std::move(p);
    s.velocity = std::move(v);
    return s;
  };
  const auto one = Nonlinearity::constant(1.0);
  const auto affine = Nonlinearity::affine(1, 1);
  const SpectralOperator op3({1, 2, 3});
  const auto op8 = SpectralOperator::laplacian_1d(8);

  // zero data
  const auto zero = DataSpec::from_coefficients(std::vector<double>(8, 0.0), std::vector<double>(8, 0.0));
  expect(half_norm_sq(op3, std::vector<double>{0, 0, 0}) == 0.0, "half_norm_sq(0)");
  expect(compute_H0(op8, affine, zero) == 0.0, "H0(zero)");
  expect(hamiltonian(op8, affine, project_data(op8, zero, 8)) == 0.0, "hamiltonian(zero)");
  expect(tail(op8, zero, 0) == 0.0, "tail(zero)");
  {
    const auto c = certify(op8, zero, WeightFamily::standard(), 8);
    bool all = c.thresholds.size() == 8;
    for (double m : c.log_margins) all = all && m == kNegInf;
    expect(all, "certify(zero)");
  }
  const auto rz = rhs(op8, affine, state(std::vector<double>(8, 0.0), std::vector<double>(8, 0.5)));
  expect(std::all_of(rz.acceleration.begin(), rz.acceleration.end(), [](double a) { return a == 0.0; }),
         "rhs at equilibrium");
  {
    const auto tr = integrate(op8, affine, project_data(op8, zero, 8), 1.0);
    const auto consts = EnvelopeConstants::from(certify_for_data(op8, affine, zero), 0.0);
    expect(tr.ok() && verify_low_bound(op8, tr, 4, consts).pass && verify_phi_derivative(op8, tr, 4, consts).pass,
           "low/phi bounds on zero data");
    bool zero_phi = true;
    for (double v : verify_phi_derivative(op8, tr, 4, consts).lhs) zero_phi = zero_phi && v == 0.0;
    expect(zero_phi, "phi' = 0 at equilibrium");
    StudyOptions opt;
    opt.epsilon = 1.0;
    const auto op16 = SpectralOperator::laplacian_1d(16);
    const auto zero16 = DataSpec::from_coefficients(std::vector<double>(16, 0.0), std::vector<double>(16, 0.0));
    const auto st = cauchy_study(op16, affine, zero16, certify(op16, zero16, WeightFamily::standard(), 16),
                                 {12, 16}, 1.0, opt);
    expect(st.report.pairs.size() == 1 && st.report.pairs[0].sup_difference == 0.0, "cauchy_study(zero)");
  }

  // single-mode data
  const SpectralOperator unit({1.0});
  const auto e1 = DataSpec::from_coefficients({1.0}, {0.0});
  expect(half_norm_sq(op3, std::vector<double>{1, 0, 0}) == 1.0, "half_norm_sq(e1)");
  expect(compute_H0(unit, one, e1) == 1.0, "H0(e1)");
  expect(hamiltonian(unit, one, state({1}, {0})) == 1.0, "hamiltonian(e1)");
  {
    const auto ep = energy_pair(unit, state({1}, {0}));
    expect(ep.kinetic == 0.0 && ep.potential_seminorm == 1.0, "energy_pair(e1)");
    const auto d = rhs(unit, one, state({1}, {0}));
    expect(d.acceleration == std::vector<double>{-1.0}, "rhs harmonic oscillator");
    const auto c = certify(op8, e1, WeightFamily::standard(), 8);
    expect(c.thresholds.size() == 8, "certify(e1)");
    const auto dec = sum_decompose(op8, e1, WeightFamily::standard());
    expect(dec.first.u0 == e1.u0 && dec.second.u0 == std::vector<double>{0.0} &&
               dec.second.u1 == std::vector<double>{0.0},
           "sum_decompose(e1)");
    const auto split = split_state(state({1, 2, 3}, {4, 5, 6}), 1);
    expect(split.low.position == std::vector<double>{1} && split.high.position == std::vector<double>{2, 3},
           "split_state");
    const auto ones = SpectralOperator({1.0, 1.0});
    expect(F_energy(ones, affine, split_state(state({1, 0}, {0, 0}), 1)) == 0.0, "F with zero high part");
    const auto fz = F_sandwich(ones, affine, EnvelopeConstants::from(certify_constants(affine, 3.0), 1.0),
                               split_state(state({1, 0}, {0, 0}), 1));
    expect(fz.lower == 0.0 && fz.F == 0.0 && fz.upper == 0.0, "F_sandwich with zero high part");
  }

  // n = m
  {
    const auto data = random_coefficients(op8, 8, 4, 0.3);
    const auto consts = EnvelopeConstants::from(certify_for_data(op8, affine, data), compute_H0(op8, affine, data));
    const auto tr = integrate(op8, affine, project_data(op8, data, 8), 1.0);
    const auto d = verify_diff_bound(op8, tr, tr, 4, data, consts);
    bool zero_lhs = d.pass;
    for (double v : d.lhs) zero_lhs = zero_lhs && v == kNegInf;
    expect(zero_lhs && sup_energy_difference(op8, tr, tr) == 0.0, "n = m differences vanish");
  }

  // L = 0
  {
    ConstantBounds flat{1.0, 1.0, 0.0, 1.0, false};
    const auto c = EnvelopeConstants::from(flat, 1.0);
    bool ok = true;
    for (double t : {0.0, 1.0, 50.0}) {
      ok = ok && Lk_plus(c, 7.0, t).value == 1.0 && Lk_minus(c, 7.0, t).value == 0.0;
    }
    expect(ok, "L_k envelopes with L = 0");
    const auto cc = certify_constants(one, 10.0);
    expect(cc.mu1 == 1.0 && cc.mu2 == 1.0 && cc.lip == 0.0, "certify_constants(m = 1)");
    expect(eval_m(one, 7.3).value == 1.0 && eval_M(one, 5.0) == 5.0 && eval_M(affine, 0.0) == 0.0, "m and M");
    const auto data = random_coefficients(op8, 8, 9);
    const auto tr = integrate(op8, one, project_data(op8, data, 8), 2.0);
    const auto trace = coefficient_trace(op8, one, tr);
    expect(std::all_of(trace.c.begin(), trace.c.end(), [](double v) { return v == 1.0; }) &&
               trace.max_quotient == 0.0,
           "coefficient trace with m = 1");
    const auto s = split_state(tr.states.back(), 3);
    const auto e = energy_pair(op8, s.high);
    const auto fs = F_sandwich(op8, one, c, s);
    expect(fs.lower == fs.upper && std::abs(fs.F - e.total()) <= 1e-15 * e.total(), "F_sandwich with m = 1");
    GapCertificate cert;
    expect(!choose_k(c, cert, 1.0, 0.5).k.has_value(), "choose_k on an empty certificate");
  }

  Outcome o;
  o.pass = failed.empty();
  if (o.pass) {
    o.detail = "zero data, single mode, n = m and L = 0 cases return their exact values";
  } else {
    for (const auto& f : failed) o.detail += f + "; ";
  }
  return o;
}

Outcome criterion9() {
  const auto a = scratch("c9a");
  const auto b = scratch("c9b");
  std::string log;
  if (converge(a, log) != kExitOk || converge(b, log) != kExitOk) return {false, "converge failed: " + log};
  std::size_t files = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    ++files;
    if (name == "manifest.json") {
      auto ma = json::parse(slurp(entry.path()));
      auto mb = json::parse(slurp(b / name));
      ma.erase("timestamp");
      mb.erase("timestamp");
      if (ma != mb) differing.push_back(name.string());
    } else if (slurp(entry.path()) != slurp(b / name)) {
      differing.push_back(name.string());
    }
  }
  std::string detail = std::to_string(files) + " artifacts compared";
  for (const auto& d : differing) detail += ", differs: " + d;
  return {differing.empty() && files > 0, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"constant-m oracle equivalence", criterion1},
      {"energy equality", criterion2},
      {"a-priori bounds", criterion3},
      {"F machinery", criterion4},
      {"difference envelope", criterion5},
      {"Cauchy decay", criterion6},
      {"lacunary toolkit soundness", criterion7},
      {"degenerate cases", criterion8},
      {"determinism", criterion9},
  };
  int failures = 0;
  for (std::size_t j = 0; j < criteria.size(); ++j) {
    Outcome o;
    try {
      o = criteria[j].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << j + 1 << " (" << criteria[j].first
              << "): " << o.detail << '\n';
  }
  return failures;
}
