#include "kirchhoff/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace kirchhoff {
namespace fs = std::filesystem;

namespace {

// ----- config -------------------------------------------------------------------------------

SpectralOperator parse_operator(const ConfigNode& node) {
  node.allow_only({"generator", "N", "params", "eigenvalues"});
  const std::string gen = node.at("generator").string();
  if (gen == "custom") {
    auto ev = node.at("eigenvalues").numbers();
    if (node.has("N") && node.at("N").count() != ev.size()) {
      node.at("N").fail("does not match the number of eigenvalues");
    }
    try {
      return SpectralOperator(std::move(ev));
    } catch (const InvalidInput& e) {
      node.at("eigenvalues").fail(e.what());
    }
  }
  const std::size_t N = node.at("N").count();
  if (N == 0) node.at("N").fail("must be at least 1");
  try {
    if (gen == "laplacian_1d") return SpectralOperator::laplacian_1d(N);
    if (gen == "power") return SpectralOperator::power(N, node.at("params").at("p").number());
    if (gen == "geometric") {
      return SpectralOperator::geometric(N, node.at("params").at("ratio").number());
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    node.at("params").fail(e.what());
  }
  node.at("generator").fail("unknown operator generator '" + gen +
                            "' (expected laplacian_1d, power, geometric or custom)");
}

DataSpec padded(DataSpec d) {
  d.u0.resize(std::max(d.u0.size(), std::size_t{1}), 0.0);
  d.u1.resize(d.u0.size(), 0.0);
  return d;
}

void parse_data(const ConfigNode& node, ExperimentConfig& cfg) {
  const SpectralOperator& op = cfg.op;
  if (node.has("u0")) {
    cfg.data = data_spec_from_json(node);
  } else {
    node.allow_only({"generator", "params"});
    const std::string gen = node.at("generator").string();
    const json empty = json::object();
    const ConfigNode p = node.has("params") ? node.at("params") : ConfigNode(empty, node.path() + ".params");
    try {
      if (gen == "zero") {
        p.allow_only({"support"});
        const std::size_t support = p.count_or("support", op.size());
        cfg.data = DataSpec::from_coefficients(std::vector<double>(support, 0.0), {});
        cfg.data.generator = "zero";
      } else if (gen == "single_mode") {
        p.allow_only({"mode", "position", "velocity"});
        const std::size_t mode = p.count_or("mode", 1);
        if (mode == 0 || mode > op.size()) p.at("mode").fail("must lie in 1..N");
        std::vector<double> u0(mode, 0.0), u1(mode, 0.0);
        u0[mode - 1] = p.number_or("position", 1.0);
        u1[mode - 1] = p.number_or("velocity", 0.0);
        cfg.data = DataSpec::from_coefficients(u0, u1);
        cfg.data.generator = "single_mode";
        cfg.data.generator_params = p.raw();
      } else if (gen == "random") {
        p.allow_only({"support", "amplitude", "decay"});
        cfg.data = random_coefficients(op, p.count_or("support", op.size()), cfg.seed,
                               p.number_or("amplitude", 1.0), p.number_or("decay", 0.0));
      } else if (gen == "geometric") {
        p.allow_only({"support", "ratio", "continue_tail"});
        cfg.data = geometric_data(op, p.count_or("support", op.size()), p.at("ratio").number(),
                                  p.boolean_or("continue_tail", false));
      } else if (gen == "lacunary") {
        p.allow_only({"blocks", "velocity_fraction", "target_margin"});
        LacunaryProfile prof;
        const ConfigNode blocks = p.at("blocks");
        for (std::size_t j = 0; j < blocks.size(); ++j) {
          const ConfigNode b = blocks.at(j);
          b.allow_only({"start", "width", "energy"});
          prof.blocks.push_back({b.at("start").count(), b.at("width").count(), b.at("energy").number()});
        }
        prof.velocity_fraction = p.number_or("velocity_fraction", prof.velocity_fraction);
        prof.target_margin = p.number_or("target_margin", prof.target_margin);
        try {
          GeneratedData g = generate_lacunary(op, prof);
          cfg.data = std::move(g.data);
          cfg.promised = std::move(g.certificate);
        } catch (const InfeasibleProfile& e) {
          blocks.fail(std::string(e.what()) + " (first failing hole-start k = " +
                      std::to_string(e.failing_k()) + ")");
        }
      } else {
        node.at("generator").fail("unknown data generator '" + gen +
                                  "' (expected zero, single_mode, random, geometric or lacunary)");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidInput& e) {
      p.fail(e.what());
    }
  }
  cfg.data = padded(std::move(cfg.data));
  if (cfg.data.size() > op.size()) {
    node.fail("data has " + std::to_string(cfg.data.size()) + " coefficients but operator N = " +
              std::to_string(op.size()));
  }
}

}  // namespace

ExperimentConfig parse_config(const json& source) {
  const ConfigNode root(source, "$");
  root.allow_only({"description", "operator", "nonlinearity", "data", "weights", "dims", "T",
                   "epsilon", "force_k", "verify_ks", "integrator", "verify", "certify",
                   "decompose", "bands", "output", "seed"});
  ExperimentConfig cfg;
  cfg.source = source;
  cfg.seed = root.has("seed") ? root.at("seed").u64() : 0;
  cfg.operator_json = root.at("operator").raw();
  cfg.op = parse_operator(root.at("operator"));
  const std::size_t N = cfg.op.size();
  if (root.has("nonlinearity")) cfg.nl = nonlinearity_from_json(root.at("nonlinearity"));
  parse_data(root.at("data"), cfg);
  if (root.has("weights")) cfg.weights = weights_from_json(root.at("weights"));

  if (root.has("dims")) {
    const ConfigNode d = root.at("dims");
    cfg.dims = d.counts();
    if (cfg.dims.empty()) d.fail("must list at least one dimension");
    for (std::size_t j = 0; j < cfg.dims.size(); ++j) {
      if (cfg.dims[j] == 0) d.at(j).fail("must be at least 1");
      if (cfg.dims[j] > N) d.at(j).fail("exceeds operator N = " + std::to_string(N));
      if (j > 0 && cfg.dims[j] <= cfg.dims[j - 1]) d.at(j).fail("dims must be strictly increasing");
    }
  } else {
    cfg.dims = {N};
  }
  if (root.has("T")) cfg.T = root.at("T").positive();
  if (root.has("epsilon")) cfg.epsilon = root.at("epsilon").positive();
  if (root.has("force_k")) {
    cfg.forced_k = root.at("force_k").count();
    if (*cfg.forced_k == 0 || *cfg.forced_k >= N) root.at("force_k").fail("must lie in 1..N-1");
  }
  if (root.has("verify_ks")) cfg.verify_ks = root.at("verify_ks").counts();
  if (root.has("integrator")) cfg.ctrl = integrator_from_json(root.at("integrator"));
  if (root.has("verify")) {
    const ConfigNode v = root.at("verify");
    v.allow_only({"low", "phi", "high", "F", "diff"});
    cfg.verify_low = v.boolean_or("low", true);
    cfg.verify_phi = v.boolean_or("phi", true);
    cfg.verify_high = v.boolean_or("high", true);
    cfg.verify_F = v.boolean_or("F", true);
    cfg.verify_diff = v.boolean_or("diff", true);
  }
  cfg.k_max = N;
  if (root.has("certify")) {
    const ConfigNode c = root.at("certify");
    c.allow_only({"k_max"});
    cfg.k_max = c.count_or("k_max", N);
    if (cfg.k_max > N) c.at("k_max").fail("exceeds operator N = " + std::to_string(N));
  }
  if (root.has("decompose")) {
    const ConfigNode c = root.at("decompose");
    c.allow_only({"thresholds"});
    cfg.decompose_thresholds = c.count_or("thresholds", 3);
  }
  if (root.has("bands")) {
    const ConfigNode b = root.at("bands");
    for (std::size_t j = 0; j < b.size(); ++j) {
      const ConfigNode pair = b.at(j);
      if (pair.size() != 2) pair.fail("a band is [first, last]");
      cfg.bands.push_back({pair.at(0).count(), pair.at(1).count()});
    }
  }
  if (root.has("output")) {
    const ConfigNode o = root.at("output");
    o.allow_only({"dir", "csv_layout"});
    if (o.has("dir")) cfg.out_dir = o.at("dir").string();
    const std::string layout = o.string_or("csv_layout", "long");
    if (layout == "long") {
      cfg.layout = CsvLayout::long_format;
    } else if (layout == "wide") {
      cfg.layout = CsvLayout::wide_format;
    } else {
      o.at("csv_layout").fail("expected long or wide");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

namespace {

// ----- artifacts ----------------------------------------------------------------------------

class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    names_.push_back(name);
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    return out;
  }
  void write_json(const std::string& name, const json& j) { open(name) << dump(j); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_manifest(Artifacts& art, std::string_view subcommand, const ExperimentConfig& cfg,
                    const RunContext& ctx, int exit_code) {
  json outputs = art.names();
  json m = {{"tool", kToolName},
            {"version", kToolVersion},
            {"subcommand", subcommand},
            {"config_path", ctx.config_path},
            {"config", cfg.source},
            {"seed", cfg.seed},
            {"jobs", ctx.jobs},
            {"integrator", to_json(cfg.ctrl)},
            {"outputs", outputs},
            {"exit_code", exit_code},
            {"timestamp", utc_timestamp()},
            {"build",
             {{"compiler", __VERSION__},
              {"cxx_standard", __cplusplus},
              {"nlohmann_json",
               std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                   "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
  art.write_json("manifest.json", m);
}

const Nonlinearity& require_nl(const ExperimentConfig& cfg) {
  if (!cfg.nl) throw ConfigError("$.nonlinearity", "missing required field");
  return *cfg.nl;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

json data_summary(const ExperimentConfig& cfg) {
  return {{"generator", cfg.data.generator},
          {"params", cfg.data.generator_params},
          {"size", cfg.data.size()},
          {"tail_bound", to_json(cfg.data.tail_bound)},
          {"checksum", hex64(coefficient_checksum(cfg.data))}};
}

json bound_detail(const BoundReport& r) {
  json j = to_json(r);
  json t = json::array(), lhs = json::array(), rhs = json::array();
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    t.push_back(r.times[i]);
    lhs.push_back(number_json(r.lhs[i]));
    rhs.push_back(number_json(r.rhs[i]));
  }
  j["samples"] = {{"t", t}, {"lhs", lhs}, {"rhs", rhs}};
  return j;
}

std::vector<Band> default_bands(const GapCertificate& cert, std::size_t n) {
  std::vector<Band> bands;
  std::size_t first = 1;
  for (std::size_t j = 0; j < cert.thresholds.size(); ++j) {
    const std::size_t k = cert.thresholds[j];
    const bool run_start = j == 0 || cert.thresholds[j - 1] + 1 != k;
    if (!run_start || k < first || k >= n) continue;
    bands.push_back({first, k});
    first = k + 1;
  }
  bands.push_back({first, n});
  return bands;
}

}  // namespace

// ----- subcommands --------------------------------------------------------------------------

int cmd_simulate(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream& log) {
  const Nonlinearity& nl = require_nl(cfg);
  const ConstantBounds bounds = certify_for_data(cfg.op, nl, cfg.data);
  const Nonlinearity bounded = nl.with_bounds(bounds);
  const double H0 = compute_H0(cfg.op, nl, cfg.data);
  const auto trajs = integrate_family(cfg.op, bounded, cfg.data, cfg.dims, cfg.T, cfg.ctrl, ctx.jobs);

  Artifacts art(ctx.out_dir);
  json runs = json::array();
  int code = kExitOk;
  for (std::size_t j = 0; j < trajs.size(); ++j) {
    const auto& tr = trajs[j];
    const std::string tag = "_n" + std::to_string(cfg.dims[j]);
    json run = trajectory_summary(tr);
    run["n"] = cfg.dims[j];
    if (!tr.states.empty()) {
      auto out = art.open("trajectory" + tag + ".csv");
      write_trajectory_csv(out, tr, cfg.layout);
      auto ham = art.open("hamiltonian" + tag + ".csv");
      write_hamiltonian_csv(ham, cfg.op, bounded, tr);
      const CoefficientTrace trace = coefficient_trace(cfg.op, bounded, tr);
      auto tc = art.open("coefficient_trace" + tag + ".csv");
      write_trace_csv(tc, trace);
      run["max_lipschitz_quotient"] = trace.max_quotient;
      run["trace_out_of_range"] = trace.out_of_range;
    }
    if (cfg.ctrl.record_steps && !tr.step_states.empty()) {
      Trajectory steps;
      steps.states = tr.step_states;
      auto out = art.open("steps" + tag + ".csv");
      write_trajectory_csv(out, steps, cfg.layout);
    }
    if (!tr.ok()) {
      if (tr.status == TrajectoryStatus::budget_exceeded) {
        code = kExitBudget;
      } else if (code == kExitOk) {
        code = kExitNumerical;
      }
      log << "n = " << cfg.dims[j] << ": " << to_string(tr.status) << ": " << tr.diagnostic << '\n';
    } else {
      log << "n = " << cfg.dims[j] << ": ok, " << tr.accepted << " steps, drift "
          << format_number(tr.hamiltonian_drift) << '\n';
    }
    runs.push_back(run);
  }
  art.write_json("simulation.json", {{"operator", cfg.operator_json},
                                     {"nonlinearity", to_json(nl)},
                                     {"bounds", to_json(bounds)},
                                     {"H0", H0},
                                     {"T", cfg.T},
                                     {"data", data_summary(cfg)},
                                     {"integrator", to_json(cfg.ctrl)},
                                     {"runs", runs}});
  write_manifest(art, "simulate", cfg, ctx, code);
  return code;
}

int cmd_certify(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream& log) {
  const GapCertificate cert = certify(cfg.op, cfg.data, cfg.weights, cfg.k_max);
  Artifacts art(ctx.out_dir);
  json j = to_json(cert);
  j["data"] = data_summary(cfg);
  if (cfg.promised) {
    bool match = true;
    for (std::size_t k : cfg.promised->thresholds) {
      if (k <= cfg.k_max && !cert.contains(k)) match = false;
    }
    j["generator_certificate_confirmed"] = match;
  }
  art.write_json("certificate.json", j);

  std::ostringstream table;
  table << std::left << std::setw(6) << "k" << std::setw(24) << "lambda_k" << std::setw(24)
        << "log R_k" << std::setw(24) << "log weight" << std::setw(24) << "log margin"
        << "certified\n";
  for (std::size_t k = 1; k <= cfg.k_max; ++k) {
    const double lam = cfg.op.lambda_at(k);
    const double lt = log_tail(cfg.op, cfg.data, k);
    const double lw = cfg.weights.log_weight(k, lam);
    table << std::setw(6) << k << std::setw(24) << format_number(lam) << std::setw(24)
          << format_number(lt) << std::setw(24) << format_number(lw) << std::setw(24)
          << format_number(log_margin(cfg.op, cfg.data, cfg.weights, k))
          << (cert.contains(k) ? "yes" : "no") << '\n';
  }
  art.open("margins.txt") << table.str();
  log << cert.thresholds.size() << " of " << cfg.k_max << " thresholds certified\n";
  write_manifest(art, "certify", cfg, ctx, kExitOk);
  return kExitOk;
}

int cmd_decompose(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream& log) {
  const Decomposition d = sum_decompose(cfg.op, cfg.data, cfg.weights, cfg.decompose_thresholds);
  const DataSpec back = recombine(d.first, d.second);
  const std::uint64_t want = coefficient_checksum(cfg.data);
  const std::uint64_t got = coefficient_checksum(back);

  Artifacts art(ctx.out_dir);
  json first = to_json(d.first);
  first["certificate"] = to_json(d.first_certificate);
  json second = to_json(d.second);
  second["certificate"] = to_json(d.second_certificate);
  art.write_json("summand_first.json", first);
  art.write_json("summand_second.json", second);
  json j = to_json(d);
  j["data"] = data_summary(cfg);
  j["checksum"] = {{"data", hex64(want)}, {"recombined", hex64(got)}, {"match", want == got}};
  art.write_json("decomposition.json", j);
  if (!d.feasible) log << "warning: " << d.report << '\n';
  log << "recombination checksum " << hex64(got) << (want == got ? " OK" : " MISMATCH") << '\n';
  const int code = want == got ? kExitOk : kExitNumerical;
  write_manifest(art, "decompose", cfg, ctx, code);
  return code;
}

int cmd_converge(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream& log) {
  const Nonlinearity& nl = require_nl(cfg);
  const GapCertificate cert = certify(cfg.op, cfg.data, cfg.weights, cfg.k_max);
  StudyOptions opt;
  opt.epsilon = cfg.epsilon;
  opt.ctrl = cfg.ctrl;
  opt.jobs = ctx.jobs;
  opt.forced_k = cfg.forced_k;
  opt.verify_ks = cfg.verify_ks;
  opt.verify_low = cfg.verify_low;
  opt.verify_phi = cfg.verify_phi;
  opt.verify_high = cfg.verify_high;
  opt.verify_F = cfg.verify_F;
  opt.verify_diff = cfg.verify_diff;
  const StudyOutput study = cauchy_study(cfg.op, nl, cfg.data, cert, cfg.dims, cfg.T, opt);
  const StudyReport& rep = study.report;

  Artifacts art(ctx.out_dir);
  json j = to_json(rep);
  j["operator"] = cfg.operator_json;
  j["nonlinearity"] = to_json(nl);
  j["weights"] = to_json(cfg.weights);
  j["data"] = data_summary(cfg);
  j["integrator"] = to_json(cfg.ctrl);
  json failing = json::array();
  const auto collect = [&failing](const BoundReport& r) {
    if (!r.pass) failing.push_back(bound_detail(r));
  };
  for (const auto& d : rep.dimensions) std::for_each(d.reports.begin(), d.reports.end(), collect);
  for (const auto& p : rep.pairs) {
    if (p.cauchy) collect(*p.cauchy);
    if (p.diff) collect(*p.diff);
    for (const auto& c : p.certified) collect(c.report);
  }
  j["failing_reports"] = failing;
  art.write_json("study.json", j);

  {
    auto out = art.open("sup_differences.csv");
    out << "min_dim,sup_difference\n";
    for (const auto& [n, v] : rep.sup_difference_by_min_dim) out << n << ',' << format_number(v) << '\n';
  }
  {
    auto out = art.open("pair_differences.csv");
    out << "n,m,k,sup_difference,log_rhs\n";
    for (const auto& p : rep.pairs) {
      const double rhs = p.cauchy && !p.cauchy->rhs.empty() ? p.cauchy->rhs.front() : kNegInf;
      out << p.n << ',' << p.m << ',' << rep.k << ',' << format_number(p.sup_difference) << ','
          << format_number(rhs) << '\n';
    }
  }
  {
    auto out = art.open("lipschitz_growth.csv");
    out << "n,max_lipschitz_quotient\n";
    for (const auto& d : rep.dimensions) out << d.n << ',' << format_number(d.max_lipschitz_quotient) << '\n';
  }
  {
    const Trajectory& top = study.trajectories.back();
    const auto bands = cfg.bands.empty() ? default_bands(cert, top.dimension()) : cfg.bands;
    const MigrationSpectrum ms = migration_spectrum(cfg.op, top, bands);
    auto out = art.open("band_energies.csv");
    out << "t,band,first,last,energy\n";
    for (std::size_t s = 0; s < ms.times.size(); ++s) {
      for (std::size_t b = 0; b < bands.size(); ++b) {
        out << format_number(ms.times[s]) << ',' << b + 1 << ',' << bands[b].first << ','
            << bands[b].last << ',' << format_number(ms.energies[b][s]) << '\n';
      }
    }
  }

  log << "k = " << rep.k << (rep.choose_k_bypassed ? " (forced; choose_k bypassed)" : "") << ", "
      << rep.pairs.size() << " pairs, " << (rep.all_pass ? "all bounds pass" : "FAILURES") << '\n';
  for (const auto& f : rep.failures) log << "  failed: " << f << '\n';
  const int code = rep.all_pass ? kExitOk : kExitBound;
  write_manifest(art, "converge", cfg, ctx, code);
  return code;
}

int run_subcommand(std::string_view name, const std::string& config_path,
                   const std::optional<std::string>& out, std::size_t jobs, std::ostream& log,
                   std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_config(config_path);
    RunContext ctx;
    ctx.jobs = std::max<std::size_t>(jobs, 1);
    ctx.config_path = config_path;
    if (out) {
      ctx.out_dir = *out;
    } else if (const char* env = std::getenv("KIRCHHOFF_OUT_DIR"); env && *env) {
      ctx.out_dir = env;
    } else if (cfg.out_dir) {
      ctx.out_dir = *cfg.out_dir;
    } else {
      ctx.out_dir = "out";
    }
    if (name == "simulate") return cmd_simulate(cfg, ctx, log);
    if (name == "certify") return cmd_certify(cfg, ctx, log);
    if (name == "decompose") return cmd_decompose(cfg, ctx, log);
    if (name == "converge") return cmd_converge(cfg, ctx, log);
    err << "unknown subcommand '" << name << "'\n";
    return kExitConfig;
  } catch (const InvalidInput& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TrajectoryFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return e.budget_exceeded() ? kExitBudget : kExitNumerical;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace kirchhoff
