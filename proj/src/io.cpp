#include "kirchhoff/io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <type_traits>

namespace kirchhoff {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

json number_json(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

// ----- ConfigNode ---------------------------------------------------------------------------

bool ConfigNode::has(std::string_view key) const {
  return node_->is_object() && node_->contains(key) && !(*node_)[std::string(key)].is_null();
}

ConfigNode ConfigNode::at(std::string_view key) const {
  if (!node_->is_object()) fail("expected an object");
  const auto it = node_->find(key);
  if (it == node_->end()) {
    throw ConfigError(path_ + "." + std::string(key), "missing required field");
  }
  return ConfigNode(*it, path_ + "." + std::string(key));
}

ConfigNode ConfigNode::at(std::size_t index) const {
  if (!node_->is_array()) fail("expected an array");
  if (index >= node_->size()) fail("index " + std::to_string(index) + " out of range");
  return ConfigNode((*node_)[index], path_ + "[" + std::to_string(index) + "]");
}

std::size_t ConfigNode::size() const {
  if (!node_->is_array()) fail("expected an array");
  return node_->size();
}

double ConfigNode::number() const {
  if (node_->is_number()) {
    const double v = node_->get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  fail("expected a number");
}

double ConfigNode::positive() const {
  const double v = number();
  if (!(v > 0.0)) fail("must be positive");
  return v;
}

std::size_t ConfigNode::count() const {
  if (node_->is_number_unsigned()) return node_->get<std::size_t>();
  if (node_->is_number_integer()) {
    const auto v = node_->get<std::int64_t>();
    if (v < 0) fail("must be nonnegative");
    return static_cast<std::size_t>(v);
  }
  fail("expected a nonnegative integer");
}

std::uint64_t ConfigNode::u64() const {
  if (node_->is_number_unsigned()) return node_->get<std::uint64_t>();
  if (node_->is_number_integer() && node_->get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(node_->get<std::int64_t>());
  }
  fail("expected a nonnegative integer");
}

std::string ConfigNode::string() const {
  if (!node_->is_string()) fail("expected a string");
  return node_->get<std::string>();
}

bool ConfigNode::boolean() const {
  if (!node_->is_boolean()) fail("expected true or false");
  return node_->get<bool>();
}

std::vector<double> ConfigNode::numbers() const {
  std::vector<double> out(size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = at(j).number();
  return out;
}

std::vector<std::size_t> ConfigNode::counts() const {
  std::vector<std::size_t> out(size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = at(j).count();
  return out;
}

double ConfigNode::number_or(std::string_view key, double fallback) const {
  return has(key) ? at(key).number() : fallback;
}
std::size_t ConfigNode::count_or(std::string_view key, std::size_t fallback) const {
  return has(key) ? at(key).count() : fallback;
}
bool ConfigNode::boolean_or(std::string_view key, bool fallback) const {
  return has(key) ? at(key).boolean() : fallback;
}
std::string ConfigNode::string_or(std::string_view key, std::string fallback) const {
  return has(key) ? at(key).string() : fallback;
}

void ConfigNode::allow_only(std::initializer_list<std::string_view> allowed) const {
  if (!node_->is_object()) fail("expected an object");
  for (const auto& [key, value] : node_->items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) throw ConfigError(path_ + "." + key, "unknown field");
  }
}

void ConfigNode::fail(const std::string& message) const { throw ConfigError(path_, message); }

namespace {

// Library validation errors surface at the node that produced them.
template <class F>
auto located(const ConfigNode& node, F&& make) -> decltype(make()) {
  try {
    return make();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    node.fail(e.what());
  }
}

}  // namespace

// ----- nonlinearity -------------------------------------------------------------------------

json to_json(const Nonlinearity& nl) {
  json params = std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Nonlinearity::Constant>) {
          return {{"value", p.value}};
        } else if constexpr (std::is_same_v<P, Nonlinearity::Affine>) {
          return {{"a", p.a}, {"b", p.b}};
        } else if constexpr (std::is_same_v<P, Nonlinearity::Sine>) {
          return {{"base", p.base}, {"amplitude", p.amplitude}, {"frequency", p.frequency}};
        } else if constexpr (std::is_same_v<P, Nonlinearity::Tabulated>) {
          return {{"sigma", p.sigma}, {"values", p.values}};
        } else {
          return {{"name", p.name}};
        }
      },
      nl.profile());
  return {{"kind", nl.kind_name()}, {"params", params}};
}

Nonlinearity nonlinearity_from_json(const ConfigNode& node) {
  node.allow_only({"kind", "params"});
  const std::string kind = node.at("kind").string();
  const ConfigNode p = node.at("params");
  return located(node, [&] {
    if (kind == "constant") {
      p.allow_only({"value"});
      return Nonlinearity::constant(p.at("value").number());
    }
    if (kind == "affine") {
      p.allow_only({"a", "b"});
      return Nonlinearity::affine(p.at("a").number(), p.at("b").number());
    }
    if (kind == "sine") {
      p.allow_only({"base", "amplitude", "frequency"});
      return Nonlinearity::sine(p.at("base").number(), p.at("amplitude").number(),
                                p.at("frequency").number());
    }
    if (kind == "tabulated") {
      p.allow_only({"sigma", "values"});
      return Nonlinearity::tabulated(p.at("sigma").numbers(), p.at("values").numbers());
    }
    node.at("kind").fail("unknown nonlinearity kind '" + kind +
                         "' (expected constant, affine, sine or tabulated)");
  });
}

json to_json(const ConstantBounds& b) {
  return {{"mu1", b.mu1}, {"mu2", b.mu2}, {"lip", b.lip}, {"sigma_max", b.sigma_max},
          {"approximate", b.approximate}};
}

// ----- data ---------------------------------------------------------------------------------

json to_json(const TailBound& tb) {
  if (tb.kind == TailBound::Kind::zero) return {{"kind", "zero"}};
  return {{"kind", "geometric"}, {"amplitude", tb.amplitude}, {"ratio", tb.ratio}};
}

TailBound tail_bound_from_json(const ConfigNode& node) {
  const std::string kind = node.at("kind").string();
  if (kind == "zero") {
    node.allow_only({"kind"});
    return TailBound::zero();
  }
  if (kind == "geometric") {
    node.allow_only({"kind", "amplitude", "ratio"});
    return located(node, [&] {
      return TailBound::geometric(node.at("amplitude").number(), node.at("ratio").number());
    });
  }
  node.at("kind").fail("unknown tail bound kind '" + kind + "' (expected zero or geometric)");
}

json to_json(const DataSpec& data) {
  json u0 = json::array();
  json u1 = json::array();
  for (double x : data.u0) u0.push_back(x);
  for (double x : data.u1) u1.push_back(x);
  return {{"u0", u0},
          {"u1", u1},
          {"tail_bound", to_json(data.tail_bound)},
          {"generator", {{"name", data.generator}, {"params", data.generator_params}}}};
}

DataSpec data_spec_from_json(const ConfigNode& node) {
  node.allow_only({"u0", "u1", "tail_bound", "generator"});
  auto u0 = node.at("u0").numbers();
  auto u1 = node.has("u1") ? node.at("u1").numbers() : std::vector<double>{};
  const TailBound tb = node.has("tail_bound") ? tail_bound_from_json(node.at("tail_bound"))
                                              : TailBound::zero();
  DataSpec d = located(node, [&] { return DataSpec::from_coefficients(u0, u1, tb); });
  if (node.has("generator")) {
    const ConfigNode g = node.at("generator");
    d.generator = g.string_or("name", "explicit");
    if (g.has("params")) d.generator_params = g.at("params").raw();
  }
  return d;
}

// ----- lacunary -----------------------------------------------------------------------------

json to_json(const WeightFamily& w) {
  return {{"kind", w.kind == WeightFamily::Kind::standard ? "standard" : "generalized"},
          {"alpha_scale", w.alpha_scale},
          {"alpha_power", w.alpha_power},
          {"beta_scale", w.beta_scale},
          {"beta_power", w.beta_power}};
}

WeightFamily weights_from_json(const ConfigNode& node) {
  node.allow_only({"kind", "alpha_scale", "alpha_power", "beta_scale", "beta_power"});
  const std::string kind = node.string_or("kind", "standard");
  if (kind == "standard") {
    const WeightFamily std_w = WeightFamily::standard();
    for (auto key : {"alpha_scale", "alpha_power", "beta_scale", "beta_power"}) {
      if (node.has(key)) {
        const double expected = std::string_view(key) == "alpha_power" ? 2.0 : 1.0;
        if (node.at(key).number() != expected) node.at(key).fail("fixed by the standard weights");
      }
    }
    return std_w;
  }
  if (kind == "generalized") {
    return located(node, [&] {
      return WeightFamily::generalized(node.number_or("alpha_scale", 1.0), node.number_or("alpha_power", 2.0),
                                       node.number_or("beta_scale", 1.0), node.number_or("beta_power", 1.0));
    });
  }
  node.at("kind").fail("unknown weight family '" + kind + "' (expected standard or generalized)");
}

json to_json(const GapCertificate& cert) {
  json margins = json::array();
  for (double m : cert.log_margins) margins.push_back(number_json(m));
  return {{"weights", to_json(cert.weights)},
          {"k_max", cert.k_max},
          {"thresholds", cert.thresholds},
          {"log_margins", margins}};
}

json to_json(const Decomposition& d) {
  json blocks = json::array();
  for (const auto& b : d.blocks) {
    blocks.push_back({{"owner", b.owner == 0 ? "first" : "second"},
                      {"start", b.start},
                      {"end", b.end},
                      {"certifies_other_at", b.certifies_other_at}});
  }
  return {{"requested_thresholds", d.requested_thresholds},
          {"feasible", d.feasible},
          {"report", d.report},
          {"blocks", blocks},
          {"first_certificate", to_json(d.first_certificate)},
          {"second_certificate", to_json(d.second_certificate)}};
}

// ----- solver / estimates -------------------------------------------------------------------

json to_json(const IntegratorControls& c) {
  return {{"rtol", c.rtol},
          {"atol", c.atol},
          {"intervals", c.intervals},
          {"drift_guard", c.drift_guard},
          {"work_budget", c.work_budget},
          {"norm", c.norm == ErrorNorm::modal ? "modal" : "componentwise"},
          {"record_steps", c.record_steps}};
}

IntegratorControls integrator_from_json(const ConfigNode& node) {
  node.allow_only({"rtol", "atol", "intervals", "drift_guard", "work_budget", "norm", "record_steps"});
  IntegratorControls c;
  if (node.has("rtol")) c.rtol = node.at("rtol").positive();
  if (node.has("atol")) c.atol = node.at("atol").positive();
  if (node.has("intervals")) {
    c.intervals = node.at("intervals").count();
    if (c.intervals == 0) node.at("intervals").fail("must be at least 1");
  }
  if (node.has("drift_guard")) c.drift_guard = node.at("drift_guard").positive();
  if (node.has("work_budget")) c.work_budget = node.at("work_budget").positive();
  if (node.has("norm")) {
    const std::string n = node.at("norm").string();
    if (n == "modal") {
      c.norm = ErrorNorm::modal;
    } else if (n == "componentwise") {
      c.norm = ErrorNorm::componentwise;
    } else {
      node.at("norm").fail("expected modal or componentwise");
    }
  }
  c.record_steps = node.boolean_or("record_steps", false);
  return c;
}

json trajectory_summary(const Trajectory& traj) {
  return {{"dimension", traj.dimension()},
          {"method", traj.method},
          {"rtol", traj.rtol},
          {"atol", traj.atol},
          {"status", to_string(traj.status)},
          {"diagnostic", traj.diagnostic},
          {"samples", traj.states.size()},
          {"t_final", traj.states.empty() ? 0.0 : traj.states.back().t},
          {"accepted_steps", traj.accepted},
          {"rejected_steps", traj.rejected},
          {"hamiltonian_drift", traj.hamiltonian_drift},
          {"range_excursions", traj.range_excursions},
          {"max_error_ratio", traj.max_error_ratio}};
}

json to_json(const BoundReport& r) {
  json grid = {{"samples", r.times.size()},
               {"t_first", r.times.empty() ? 0.0 : r.times.front()},
               {"t_last", r.times.empty() ? 0.0 : r.times.back()}};
  return {{"bound", r.bound},
          {"k", r.k},
          {"log_space", r.log_space},
          {"tolerance", r.tolerance},
          {"max_violation", number_json(r.max_violation)},
          {"worst_time", r.worst_time},
          {"pass", r.pass},
          {"grid", grid}};
}

json to_json(const EnvelopeConstants& c) {
  return {{"H0", c.H0}, {"mu1", c.mu1}, {"mu2", c.mu2}, {"L", c.L},
          {"nu1", c.nu1}, {"nu2", c.nu2}, {"L1", c.L1},
          {"growth_coefficient", c.growth_coefficient()}};
}

json to_json(const KSelection& s) {
  return {{"k", s.k ? json(*s.k) : json(nullptr)},
          {"required", s.required},
          {"lipschitz_term", s.lipschitz_term},
          {"ratio_term", s.ratio_term},
          {"growth_term", s.growth_term},
          {"epsilon_term", s.epsilon_term},
          {"unmet", s.unmet}};
}

json to_json(const StudyReport& r) {
  json dims = json::array();
  for (const auto& d : r.dimensions) {
    json reports = json::array();
    for (const auto& b : d.reports) reports.push_back(to_json(b));
    dims.push_back({{"n", d.n},
                    {"status", to_string(d.status)},
                    {"diagnostic", d.diagnostic},
                    {"hamiltonian_drift", d.hamiltonian_drift},
                    {"max_lipschitz_quotient", d.max_lipschitz_quotient},
                    {"accepted_steps", d.accepted_steps},
                    {"reports", reports}});
  }
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    json certified = json::array();
    for (const auto& c : p.certified) certified.push_back(to_json(c.report));
    pairs.push_back({{"n", p.n},
                     {"m", p.m},
                     {"sup_difference", p.sup_difference},
                     {"cauchy", p.cauchy ? to_json(*p.cauchy) : json(nullptr)},
                     {"diff", p.diff ? to_json(*p.diff) : json(nullptr)},
                     {"certified", certified}});
  }
  json decay = json::array();
  for (const auto& [n, v] : r.sup_difference_by_min_dim) {
    decay.push_back({{"min_dim", n}, {"sup_difference", v}});
  }
  return {{"constants", to_json(r.constants)},
          {"bounds", to_json(r.bounds)},
          {"selection", to_json(r.selection)},
          {"k", r.k},
          {"k_forced", r.k_forced},
          {"choose_k_bypassed", r.choose_k_bypassed},
          {"k_margin", r.k_margin ? number_json(*r.k_margin) : json(nullptr)},
          {"certificate", to_json(r.certificate)},
          {"T", r.T},
          {"epsilon", r.epsilon},
          {"dims", r.dims},
          {"grid", {{"intervals", r.grid_intervals}, {"samples", r.grid_intervals + 1}, {"t_first", 0.0}, {"t_last", r.T}}},
          {"dimensions", dims},
          {"pairs", pairs},
          {"sup_difference_by_min_dim", decay},
          {"decay_monotone", r.decay_monotone},
          {"all_pass", r.all_pass},
          {"failures", r.failures}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace kirchhoff
