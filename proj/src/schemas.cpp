#include <map>

#include "kirchhoff/experiment.hpp"

namespace kirchhoff {
namespace {

constexpr const char* kDefs = R"json({
  "count": {"type": "integer", "minimum": 0},
  "real": {"type": "number"},
  "extended_real": {"oneOf": [{"type": "number"}, {"enum": ["-inf", "inf", "nan"]}]},
  "nonlinearity": {
    "type": "object",
    "required": ["kind", "params"],
    "additionalProperties": false,
    "properties": {
      "kind": {"enum": ["constant", "affine", "sine", "tabulated", "custom"]},
      "params": {"type": "object"}
    }
  },
  "tail_bound": {
    "oneOf": [
      {"type": "object", "required": ["kind"], "additionalProperties": false,
       "properties": {"kind": {"const": "zero"}}},
      {"type": "object", "required": ["kind", "amplitude", "ratio"], "additionalProperties": false,
       "properties": {"kind": {"const": "geometric"}, "amplitude": {"type": "number", "minimum": 0},
                      "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}}}
    ]
  },
  "weights": {
    "type": "object",
    "required": ["kind", "alpha_scale", "alpha_power", "beta_scale", "beta_power"],
    "additionalProperties": false,
    "properties": {
      "kind": {"enum": ["standard", "generalized"]},
      "alpha_scale": {"type": "number"}, "alpha_power": {"type": "number"},
      "beta_scale": {"type": "number"}, "beta_power": {"type": "number"}
    }
  },
  "certificate": {
    "type": "object",
    "required": ["weights", "k_max", "thresholds", "log_margins"],
    "properties": {
      "weights": {"$ref": "#/$defs/weights"},
      "k_max": {"$ref": "#/$defs/count"},
      "thresholds": {"type": "array", "items": {"type": "integer", "minimum": 1}},
      "log_margins": {"type": "array", "items": {"oneOf": [{"type": "number", "maximum": 0}, {"const": "-inf"}]}}
    }
  },
  "data_spec": {
    "type": "object",
    "required": ["u0", "u1", "tail_bound", "generator"],
    "properties": {
      "u0": {"type": "array", "items": {"type": "number"}},
      "u1": {"type": "array", "items": {"type": "number"}},
      "tail_bound": {"$ref": "#/$defs/tail_bound"},
      "generator": {"type": "object", "required": ["name", "params"],
                    "properties": {"name": {"type": "string"}, "params": {}}},
      "certificate": {"$ref": "#/$defs/certificate"}
    }
  },
  "data_summary": {
    "type": "object",
    "required": ["generator", "params", "size", "tail_bound", "checksum"],
    "properties": {
      "generator": {"type": "string"},
      "size": {"$ref": "#/$defs/count"},
      "tail_bound": {"$ref": "#/$defs/tail_bound"},
      "checksum": {"type": "string", "pattern": "^[0-9a-f]{16}$"}
    }
  },
  "integrator": {
    "type": "object",
    "additionalProperties": false,
    "properties": {
      "rtol": {"type": "number", "exclusiveMinimum": 0},
      "atol": {"type": "number", "exclusiveMinimum": 0},
      "intervals": {"type": "integer", "minimum": 1},
      "drift_guard": {"type": "number", "exclusiveMinimum": 0},
      "work_budget": {"type": "number", "exclusiveMinimum": 0},
      "norm": {"enum": ["modal", "componentwise"]},
      "record_steps": {"type": "boolean"}
    }
  },
  "bound_report": {
    "type": "object",
    "required": ["bound", "k", "log_space", "tolerance", "max_violation", "worst_time", "pass", "grid"],
    "properties": {
      "bound": {"enum": ["low_frequency_energy", "phi_derivative", "high_frequency_energy", "F_sandwich",
                         "F_envelope", "F_initial", "low_frequency_difference", "cauchy_difference"]},
      "k": {"type": "integer", "minimum": 1},
      "log_space": {"type": "boolean"},
      "tolerance": {"type": "number", "minimum": 0},
      "max_violation": {"$ref": "#/$defs/extended_real"},
      "worst_time": {"type": "number"},
      "pass": {"type": "boolean"},
      "grid": {"type": "object", "required": ["samples", "t_first", "t_last"],
               "properties": {"samples": {"$ref": "#/$defs/count"}, "t_first": {"type": "number"},
                              "t_last": {"type": "number"}}},
      "samples": {"type": "object", "required": ["t", "lhs", "rhs"]}
    }
  }
})json";

constexpr const char* kConfig = R"json({
  "title": "experiment config",
  "type": "object",
  "required": ["operator", "data"],
  "additionalProperties": false,
  "properties": {
    "description": {"type": "string"},
    "operator": {
      "type": "object",
      "required": ["generator"],
      "additionalProperties": false,
      "properties": {
        "generator": {"enum": ["laplacian_1d", "power", "geometric", "custom"]},
        "N": {"type": "integer", "minimum": 1},
        "params": {"type": "object"},
        "eigenvalues": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}
      }
    },
    "nonlinearity": {"$ref": "#/$defs/nonlinearity"},
    "data": {
      "oneOf": [
        {"type": "object", "required": ["u0"], "additionalProperties": false,
         "properties": {"u0": {"type": "array", "items": {"type": "number"}},
                        "u1": {"type": "array", "items": {"type": "number"}},
                        "tail_bound": {"$ref": "#/$defs/tail_bound"},
                        "generator": {"type": "object"}}},
        {"type": "object", "required": ["generator"], "additionalProperties": false,
         "properties": {"generator": {"enum": ["zero", "single_mode", "random", "geometric", "lacunary"]},
                        "params": {"type": "object"}}}
      ]
    },
    "weights": {"type": "object", "properties": {"kind": {"enum": ["standard", "generalized"]}}},
    "dims": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
    "T": {"type": "number", "exclusiveMinimum": 0},
    "epsilon": {"type": "number", "exclusiveMinimum": 0},
    "force_k": {"type": ["integer", "null"], "minimum": 1},
    "verify_ks": {"type": "array", "items": {"type": "integer", "minimum": 1}},
    "integrator": {"$ref": "#/$defs/integrator"},
    "verify": {"type": "object", "additionalProperties": false,
               "properties": {"low": {"type": "boolean"}, "phi": {"type": "boolean"}, "high": {"type": "boolean"},
                              "F": {"type": "boolean"}, "diff": {"type": "boolean"}}},
    "certify": {"type": "object", "additionalProperties": false,
                "properties": {"k_max": {"type": "integer", "minimum": 0}}},
    "decompose": {"type": "object", "additionalProperties": false,
                  "properties": {"thresholds": {"type": "integer", "minimum": 0}}},
    "bands": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                          "items": {"type": "integer", "minimum": 1}}},
    "output": {"type": "object", "additionalProperties": false,
               "properties": {"dir": {"type": "string"}, "csv_layout": {"enum": ["long", "wide"]}}},
    "seed": {"type": "integer", "minimum": 0}
  }
})json";

constexpr const char* kCertificate = R"json({
  "title": "certificate.json",
  "allOf": [{"$ref": "#/$defs/certificate"}],
  "required": ["data"],
  "properties": {
    "data": {"$ref": "#/$defs/data_summary"},
    "generator_certificate_confirmed": {"type": "boolean"}
  }
})json";

constexpr const char* kSummand = R"json({
  "title": "summand_first.json / summand_second.json",
  "allOf": [{"$ref": "#/$defs/data_spec"}],
  "required": ["certificate"]
})json";

constexpr const char* kDecomposition = R"json({
  "title": "decomposition.json",
  "type": "object",
  "required": ["requested_thresholds", "feasible", "report", "blocks", "first_certificate",
               "second_certificate", "checksum", "data"],
  "properties": {
    "requested_thresholds": {"$ref": "#/$defs/count"},
    "feasible": {"type": "boolean"},
    "report": {"type": "string"},
    "blocks": {"type": "array", "items": {
      "type": "object", "required": ["owner", "start", "end", "certifies_other_at"],
      "properties": {"owner": {"enum": ["first", "second"]}, "start": {"type": "integer", "minimum": 1},
                     "end": {"type": "integer", "minimum": 1}, "certifies_other_at": {"$ref": "#/$defs/count"}}}},
    "first_certificate": {"$ref": "#/$defs/certificate"},
    "second_certificate": {"$ref": "#/$defs/certificate"},
    "checksum": {"type": "object", "required": ["data", "recombined", "match"],
                 "properties": {"match": {"type": "boolean"}}},
    "data": {"$ref": "#/$defs/data_summary"}
  }
})json";

constexpr const char* kSimulation = R"json({
  "title": "simulation.json",
  "type": "object",
  "required": ["operator", "nonlinearity", "bounds", "H0", "T", "data", "integrator", "runs"],
  "properties": {
    "nonlinearity": {"$ref": "#/$defs/nonlinearity"},
    "bounds": {"type": "object", "required": ["mu1", "mu2", "lip", "sigma_max", "approximate"]},
    "H0": {"type": "number", "minimum": 0},
    "T": {"type": "number", "exclusiveMinimum": 0},
    "data": {"$ref": "#/$defs/data_summary"},
    "integrator": {"$ref": "#/$defs/integrator"},
    "runs": {"type": "array", "items": {
      "type": "object",
      "required": ["n", "dimension", "method", "rtol", "atol", "status", "diagnostic", "samples", "t_final",
                   "accepted_steps", "rejected_steps", "hamiltonian_drift", "range_excursions"],
      "properties": {
        "n": {"type": "integer", "minimum": 1},
        "status": {"enum": ["ok", "step_underflow", "drift_guard", "budget_exceeded", "non_finite"]},
        "hamiltonian_drift": {"type": "number", "minimum": 0}
      }}}
  }
})json";

constexpr const char* kStudy = R"json({
  "title": "study.json",
  "type": "object",
  "required": ["constants", "bounds", "selection", "k", "k_forced", "choose_k_bypassed", "k_margin",
               "certificate", "T", "epsilon", "dims", "grid", "dimensions", "pairs",
               "sup_difference_by_min_dim", "decay_monotone", "all_pass", "failures", "failing_reports",
               "operator", "nonlinearity", "weights", "data", "integrator"],
  "properties": {
    "constants": {"type": "object", "required": ["H0", "mu1", "mu2", "L", "nu1", "nu2", "L1", "growth_coefficient"]},
    "selection": {"type": "object", "required": ["k", "required", "lipschitz_term", "ratio_term", "growth_term",
                                                 "epsilon_term", "unmet"],
                  "properties": {"k": {"type": ["integer", "null"]}}},
    "k": {"type": "integer", "minimum": 1},
    "k_forced": {"type": "boolean"},
    "choose_k_bypassed": {"type": "boolean"},
    "k_margin": {"oneOf": [{"type": "null"}, {"type": "number", "maximum": 0}, {"const": "-inf"}]},
    "certificate": {"$ref": "#/$defs/certificate"},
    "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}},
    "grid": {"type": "object", "required": ["intervals", "samples", "t_first", "t_last"]},
    "dimensions": {"type": "array", "items": {
      "type": "object",
      "required": ["n", "status", "diagnostic", "hamiltonian_drift", "max_lipschitz_quotient", "accepted_steps", "reports"],
      "properties": {"reports": {"type": "array", "items": {"$ref": "#/$defs/bound_report"}}}}},
    "pairs": {"type": "array", "items": {
      "type": "object",
      "required": ["n", "m", "sup_difference", "cauchy", "diff", "certified"],
      "properties": {
        "sup_difference": {"type": "number", "minimum": 0},
        "cauchy": {"oneOf": [{"type": "null"}, {"$ref": "#/$defs/bound_report"}]},
        "diff": {"oneOf": [{"type": "null"}, {"$ref": "#/$defs/bound_report"}]},
        "certified": {"type": "array", "items": {"$ref": "#/$defs/bound_report"}}}}},
    "sup_difference_by_min_dim": {"type": "array", "items": {
      "type": "object", "required": ["min_dim", "sup_difference"]}},
    "decay_monotone": {"type": "boolean"},
    "all_pass": {"type": "boolean"},
    "failures": {"type": "array", "items": {"type": "string"}},
    "failing_reports": {"type": "array", "items": {"$ref": "#/$defs/bound_report"}},
    "nonlinearity": {"$ref": "#/$defs/nonlinearity"},
    "weights": {"$ref": "#/$defs/weights"},
    "data": {"$ref": "#/$defs/data_summary"},
    "integrator": {"$ref": "#/$defs/integrator"}
  }
})json";

constexpr const char* kManifest = R"json({
  "title": "manifest.json",
  "type": "object",
  "required": ["tool", "version", "subcommand", "config_path", "config", "seed", "jobs", "integrator",
               "outputs", "exit_code", "timestamp", "build"],
  "properties": {
    "subcommand": {"enum": ["simulate", "certify", "decompose", "converge"]},
    "config": {"type": "object"},
    "seed": {"$ref": "#/$defs/count"},
    "jobs": {"type": "integer", "minimum": 1},
    "integrator": {"$ref": "#/$defs/integrator"},
    "outputs": {"type": "array", "items": {"type": "string"}},
    "exit_code": {"type": "integer"},
    "timestamp": {"type": "string", "pattern": "^[0-9]{4}-[0-9]{2}-[0-9]{2}T[0-9]{2}:[0-9]{2}:[0-9]{2}Z$"},
    "build": {"type": "object"}
  }
})json";

const std::map<std::string, json, std::less<>>& registry() {
  static const std::map<std::string, json, std::less<>> schemas = [] {
    const json defs = json::parse(kDefs);
    const std::pair<const char*, const char*> raw[] = {
        {"config", kConfig},         {"certificate", kCertificate}, {"summand", kSummand},
        {"decomposition", kDecomposition}, {"simulation", kSimulation}, {"study", kStudy},
        {"manifest", kManifest}};
    std::map<std::string, json, std::less<>> out;
    for (const auto& [name, text] : raw) {
      json s = json::parse(text);
      s["$schema"] = "https://json-schema.org/draft/2020-12/schema";
      s["$id"] = std::string("kirchhoff_lab/") + name + ".schema.json";
      s["$defs"] = defs;
      out.emplace(name, std::move(s));
    }
    return out;
  }();
  return schemas;
}

}  // namespace

std::vector<std::string> schema_names() {
  std::vector<std::string> names;
  for (const auto& [name, s] : registry()) names.push_back(name);
  return names;
}

const json& schema(std::string_view name) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw InvalidInput("unknown schema '" + std::string(name) + "'");
  return it->second;
}

}  // namespace kirchhoff
