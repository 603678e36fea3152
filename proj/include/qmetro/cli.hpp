#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qmetro/errors.hpp"
#include "qmetro/fisher.hpp"
#include "qmetro/io.hpp"
#include "qmetro/measurement.hpp"
#include "qmetro/radar.hpp"
#include "qmetro/states.hpp"
#include "qmetro/tradeoff.hpp"

namespace qmetro::cli {

using io::json;

enum class Command { Example, Bound, Measure, RadarSim, Sweep };
enum class Format { Json, Csv };

inline Command parse_command(const std::string& s) {
  if (s == "example") return Command::Example;
  if (s == "bound") return Command::Bound;
  if (s == "measure") return Command::Measure;
  if (s == "radar-sim") return Command::RadarSim;
  if (s == "sweep") return Command::Sweep;
  throw InputError("unknown command \"" + s + "\"; expected example, bound, measure, radar-sim or sweep");
}

inline std::string to_string(Command c) {
  switch (c) {
    case Command::Example: return "example";
    case Command::Bound: return "bound";
    case Command::Measure: return "measure";
    case Command::RadarSim: return "radar-sim";
    case Command::Sweep: return "sweep";
  }
  return "";
}

inline Format parse_format(const std::string& s) {
  if (s == "json") return Format::Json;
  if (s == "csv") return Format::Csv;
  throw InputError("--format: expected json or csv");
}

struct SweepSpec {
  std::string variable;
  double lo = 0.0;
  double hi = 0.0;
  int steps = 1;

  std::vector<double> grid() const {
    std::vector<double> out;
    for (int i = 0; i < steps; ++i)
      out.push_back(steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1));
    return out;
  }
};

// VAR:LO:HI:STEPS, with STEPS grid points including both ends.
inline SweepSpec parse_sweep(const std::string& text) {
  const std::string hint = "--sweep: expected VAR:LO:HI:STEPS with VAR in {kappa, theta, x3}";
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 4) throw InputError(hint);
  SweepSpec s;
  s.variable = parts[0];
  if (s.variable != "kappa" && s.variable != "theta" && s.variable != "x3") throw InputError(hint);
  try {
    std::size_t used = 0;
    s.lo = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw InputError(hint);
    s.hi = std::stod(parts[2], &used);
    if (used != parts[2].size()) throw InputError(hint);
    s.steps = std::stoi(parts[3], &used);
    if (used != parts[3].size()) throw InputError(hint);
  } catch (const std::logic_error&) {
    throw InputError(hint);
  }
  if (!std::isfinite(s.lo) || !std::isfinite(s.hi)) throw InputError(hint);
  if (s.steps < 1 || s.hi < s.lo || (s.steps > 1 && s.hi == s.lo))
    throw InputError("--sweep: empty range");
  return s;
}

struct RunConfig {
  Command command = Command::Example;
  std::optional<std::string> input_path;
  std::optional<std::string> output_path;  // stdout when empty
  std::optional<Format> format;
  std::uint64_t seed = 12345;
  std::optional<std::string> example;
  std::vector<double> params;
  std::optional<double> kappa;
  std::optional<double> varphi;
  std::optional<long long> shots;
  std::optional<int> batches;
  std::optional<SweepSpec> sweep;
  std::optional<bool> construct;
  double tol = kSaturationTol;

  Format resolved_format() const {
    if (format) return *format;
    return command == Command::RadarSim || command == Command::Sweep ? Format::Csv : Format::Json;
  }

  void validate() const {
    const std::string cmd = to_string(command);
    auto reject = [&](bool present, const char* flag) {
      if (present) throw InputError(cmd + ": " + flag + " does not apply");
    };
    reject(shots.has_value() && command != Command::RadarSim, "--shots");
    reject(batches.has_value() && command != Command::RadarSim, "--batches");
    reject(sweep.has_value() && command != Command::Sweep, "--sweep");
    reject(construct.has_value() && command != Command::Bound, "--construct");
    switch (command) {
      case Command::Example:
        if (!example) throw InputError("example: --example NAME is required");
        reject(input_path.has_value(), "--input");
        break;
      case Command::Bound:
        if (!input_path) throw InputError("bound: --input FILE is required");
        reject(example.has_value(), "--example");
        break;
      case Command::Measure:
      case Command::RadarSim:
        if (example.has_value() == input_path.has_value())
          throw InputError(cmd + ": give exactly one of --example and --input");
        break;
      case Command::Sweep:
        if (!sweep) throw InputError("sweep: --sweep VAR:LO:HI:STEPS is required");
        reject(input_path.has_value(), "--input");
        break;
    }
    if (input_path) reject(!params.empty(), "--params");
    if (shots && *shots < 1) throw InputError("--shots must be positive");
    if (batches && *batches < 2) throw InputError("--batches must be at least 2");
    if (!(tol > 0.0) || !std::isfinite(tol)) throw InputError("saturation tolerance must be positive");
    if (varphi && !std::isfinite(*varphi)) throw InputError("--varphi must be finite");
    if (kappa && !(*kappa >= 0.0 && *kappa < 1.0)) throw InputError("--kappa must lie in [0, 1)");
  }
};

// QMETRO_TOL, when set, replaces the saturation-gap tolerance.
inline double tolerance_from_env(const char* value) {
  if (!value || !*value) return kSaturationTol;
  char* end = nullptr;
  const double t = std::strtod(value, &end);
  if (end == value || *end != '\0' || !(t > 0.0) || !std::isfinite(t))
    throw InputError("QMETRO_TOL: expected a positive number");
  return t;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline bool is_radar_example(const std::string& name) { return name == "radar-sep" || name == "radar-ent"; }

inline Params default_params(const std::string& name) {
  if (name == "qubit" || name == "qutrit") return {0.0, std::numbers::pi / 4};
  if (name == "squeezed") return {0.0, 0.0, 0.0};
  if (is_radar_example(name)) return {1.0, 10.0, 0.0, 0.0};
  throw InputError("--example: expected qubit, qutrit, squeezed, radar-sep or radar-ent");
}

inline std::string param_hint(const std::string& name) {
  if (name == "qubit" || name == "qutrit") return "ALPHA,THETA";
  if (name == "squeezed") return "X1,X2,X3";
  return "SIGMA0,OMEGA0,X,V";
}

// Radar params are (sigma0, omega0, x, v); kappa defaults to 0.6 for the entangled source.
inline RadarModel radar_example(const std::string& name, const Params& p, std::optional<double> kappa) {
  RadarModel m;
  m.sigma0 = p[0];
  m.omega0 = p[1];
  m.x = p[2];
  m.v = p[3];
  if (name == "radar-ent") {
    m.source = RadarSource::BiPhoton;
    m.kappa = kappa.value_or(0.6);
  } else if (kappa && *kappa != 0.0) {
    throw InputError("radar-sep: --kappa applies only to radar-ent");
  }
  m.validate();
  return m;
}

struct Evaluation {
  std::string example;
  std::string label;
  Params params;
  TradeoffReport report;
  std::optional<Measurement> measurement;
  std::optional<RadarModel> radar;
  std::optional<ReturnedSignal> signal;
};

inline Evaluation evaluate_state(const ParametrizedPureState& s, bool construct, const RunConfig& cfg,
                                 PerpPolicy policy = PerpPolicy::Ancilla) {
  Evaluation e;
  e.label = s.label;
  e.params = s.params;
  if (!construct) {
    e.report = report(fisher_bundle(sld_vectors(s)), std::nullopt, s.space_dim());
    return e;
  }
  ConstructionOptions opt;
  opt.policy = policy;
  opt.varphi = cfg.varphi.value_or(0.0);
  opt.tol = cfg.tol;
  const OptimalMeasurement om = construct_optimal_measurement(s, opt);
  e.report = om.report;
  e.measurement = om.measurement;
  return e;
}

inline Evaluation evaluate_example(const std::string& name, Params p, std::optional<double> kappa,
                                   const RunConfig& cfg) {
  const Params defaults = default_params(name);
  if (p.empty()) p = defaults;
  if (p.size() != defaults.size())
    throw InputError("--params: " + name + " expects " + param_hint(name));
  Evaluation e;
  if (is_radar_example(name)) {
    const RadarModel m = radar_example(name, p, kappa);
    const ReturnedSignal sig = returned_state(m);
    e = evaluate_state(radar_state(sig), true, cfg, PerpPolicy::SystemComplement);
    e.radar = m;
    e.signal = sig;
  } else if (kappa) {
    throw InputError(name + ": --kappa applies only to radar examples");
  } else if (name == "qubit") {
    e = evaluate_state(qubit_fixture(p[0], p[1]), true, cfg);
  } else if (name == "qutrit") {
    e = evaluate_state(qutrit_fixture(p[0], p[1]), true, cfg);
  } else {
    e = evaluate_state(squeezed_fixture(p[0], p[1], p[2]), true, cfg);
  }
  e.example = name;
  e.params = p;
  return e;
}

inline std::optional<double> radar_product(const Evaluation& e) {
  if (!e.radar || !e.report.F_C) return std::nullopt;
  return uncertainty_product(*e.report.F_C);
}

inline json evaluation_to_json(Command cmd, const Evaluation& e) {
  json j;
  j["schema"] = io::kSchemaVersion;
  j["command"] = to_string(cmd);
  j["example"] = e.example.empty() ? json(nullptr) : json(e.example);
  j["label"] = e.label;
  j["params"] = e.params;
  j["report"] = io::report_to_json(e.report);
  j["measurement"] = e.measurement ? io::measurement_to_json(*e.measurement) : json(nullptr);
  if (e.radar) {
    j["radar"] = {{"model", io::radar_model_to_json(*e.radar)},
                  {"t_bar", e.signal->t_bar},
                  {"omega_bar", e.signal->omega_bar},
                  {"kappa", e.radar->kappa},
                  {"product", io::optional_json(radar_product(e))},
                  {"refined_bound", refined_ak_bound(e.radar->kappa)}};
  } else {
    j["radar"] = nullptr;
  }
  return j;
}

// Re-validates an emitted document: report schema, basis orthonormality, and saturation when present.
inline void validate_document(const json& j, double tol = kSaturationTol) {
  const TradeoffReport r = io::report_from_json(io::detail::field(j, "report", "document"));
  const json& m = io::detail::field(j, "measurement", "document");
  if (!m.is_null()) {
    const Measurement meas = io::measurement_from_json(m);
    if (!r.gap) throw InputError("document: measurement without an achieved value");
    if (std::abs(*r.gap) > tol) throw NumericalError("document: reported gap exceeds tolerance");
    if (meas.betas.size() * 2 > r.n) throw InputError("document: more blocks than parameters");
  }
}

inline const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols{"label", "n", "tight_bound", "achieved", "gap", "matsumoto_lower",
                                             "frobenius_quarter", "frobenius_fifth", "gill_massar", "product"};
  return cols;
}

inline std::string evaluation_csv(const Evaluation& e) {
  io::CsvTable t(summary_columns());
  const TradeoffReport& r = e.report;
  t.add({e.example.empty() ? e.label : e.example, std::to_string(r.n), io::fmt(r.tight_bound), io::cell(r.achieved),
         io::cell(r.gap), io::fmt(r.matsumoto_lower), io::fmt(r.frobenius_quarter), io::fmt(r.frobenius_fifth),
         io::cell(r.gill_massar), io::cell(radar_product(e))});
  return t.str();
}

inline std::string measurement_csv(const Measurement& m) {
  io::CsvTable t({"outcome", "component", "re", "im"});
  const auto basis = m.basis();
  for (std::size_t k = 0; k < basis.size(); ++k)
    for (Eigen::Index c = 0; c < basis[k].size(); ++c)
      t.add({std::to_string(k), std::to_string(c), io::fmt(basis[k](c).real()), io::fmt(basis[k](c).imag())});
  return t.str();
}

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{"variable", "value", "n", "tight_bound", "achieved",
                                             "gap", "matsumoto_lower", "frobenius_quarter", "frobenius_fifth", "product"};
  return cols;
}

inline std::vector<Evaluation> run_sweep(const RunConfig& cfg) {
  const SweepSpec& sw = *cfg.sweep;
  std::string name;
  if (sw.variable == "kappa") {
    name = cfg.example.value_or("radar-ent");
    if (name != "radar-ent") throw InputError("sweep kappa: only radar-ent carries kappa");
  } else if (sw.variable == "theta") {
    name = cfg.example.value_or("qutrit");
    if (name != "qubit" && name != "qutrit") throw InputError("sweep theta: use --example qubit or qutrit");
  } else {
    name = cfg.example.value_or("squeezed");
    if (name != "squeezed") throw InputError("sweep x3: only squeezed carries x3");
  }
  if (cfg.kappa && sw.variable == "kappa") throw InputError("sweep kappa: --kappa conflicts with the sweep");
  Params p = cfg.params.empty() ? default_params(name) : cfg.params;
  const std::vector<double> grid = sw.grid();
  std::vector<Evaluation> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Params q = p;
    std::optional<double> kappa = cfg.kappa;
    if (sw.variable == "kappa") kappa = grid[i];
    else if (sw.variable == "theta") q.at(1) = grid[i];
    else q.at(2) = grid[i];
    out[i] = evaluate_example(name, q, kappa, cfg);
  }
  return out;
}

inline std::string sweep_output(const RunConfig& cfg, const std::vector<Evaluation>& rows) {
  const SweepSpec& sw = *cfg.sweep;
  const std::vector<double> grid = sw.grid();
  if (cfg.resolved_format() == Format::Json) {
    json j;
    j["schema"] = io::kSchemaVersion;
    j["command"] = "sweep";
    j["variable"] = sw.variable;
    j["rows"] = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      json row = evaluation_to_json(Command::Sweep, rows[i]);
      row["value"] = grid[i];
      j["rows"].push_back(row);
    }
    return j.dump(2) + "\n";
  }
  io::CsvTable t(sweep_columns());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TradeoffReport& r = rows[i].report;
    t.add({sw.variable, io::fmt(grid[i]), std::to_string(r.n), io::fmt(r.tight_bound), io::cell(r.achieved),
           io::cell(r.gap), io::fmt(r.matsumoto_lower), io::fmt(r.frobenius_quarter), io::fmt(r.frobenius_fifth),
           io::cell(radar_product(rows[i]))});
  }
  return t.str();
}

inline RadarModel radar_sim_model(const RunConfig& cfg) {
  if (cfg.input_path) {
    json j = read_json_file(*cfg.input_path);
    if (cfg.kappa) j["kappa"] = *cfg.kappa;
    return io::parse_radar_model(j);
  }
  const std::string& name = *cfg.example;
  if (!is_radar_example(name)) throw InputError("radar-sim: --example must be radar-sep or radar-ent");
  Params p = cfg.params.empty() ? default_params(name) : cfg.params;
  if (p.size() != 4) throw InputError("--params: " + name + " expects " + param_hint(name));
  return radar_example(name, p, cfg.kappa);
}

inline std::string radar_sim_output(const RunConfig& cfg) {
  const RadarModel model = radar_sim_model(cfg);
  SimulationOptions opt;
  if (cfg.shots) opt.shots = *cfg.shots;
  if (cfg.batches) opt.batches = *cfg.batches;
  opt.seed = cfg.seed;
  const EstimationRun run = simulate(returned_state(model), opt);
  const double emp_t = std::sqrt(run.empirical_cov(0, 0)), emp_w = std::sqrt(run.empirical_cov(1, 1));
  const double crb_t = std::sqrt(run.crb(0, 0)), crb_w = std::sqrt(run.crb(1, 1));

  if (cfg.resolved_format() == Format::Json) {
    json j;
    j["schema"] = io::kSchemaVersion;
    j["command"] = "radar-sim";
    j["model"] = io::radar_model_to_json(model);
    j["kappa"] = run.kappa;
    j["shots"] = run.shots;
    j["batches"] = run.batches;
    j["seed"] = run.seed;
    j["truth"] = run.truth;
    j["excluded"] = run.excluded;
    j["estimates"] = run.estimates;
    j["empirical_std"] = {emp_t, emp_w};
    j["predicted_std"] = {crb_t, crb_w};
    j["empirical_product"] = run.empirical_product;
    j["predicted_product"] = run.predicted_product;
    return j.dump(2) + "\n";
  }
  io::CsvTable t({"kappa", "shots", "batch", "t_hat", "omega_hat"});
  const std::string k = io::fmt(run.kappa), nu = std::to_string(run.shots);
  for (std::size_t b = 0; b < run.estimates.size(); ++b)
    t.add({k, nu, std::to_string(b), io::fmt(run.estimates[b][0]), io::fmt(run.estimates[b][1])});
  t.add({k, nu, "empirical_std", io::fmt(emp_t), io::fmt(emp_w)});
  t.add({k, nu, "predicted_std", io::fmt(crb_t), io::fmt(crb_w)});
  return t.str();
}

// Executes one command and returns the bytes to write.
inline std::string run(const RunConfig& cfg) {
  cfg.validate();
  const Format fmt = cfg.resolved_format();
  switch (cfg.command) {
    case Command::Sweep:
      return sweep_output(cfg, run_sweep(cfg));
    case Command::RadarSim:
      return radar_sim_output(cfg);
    default:
      break;
  }
  Evaluation e;
  if (cfg.example) {
    e = evaluate_example(*cfg.example, cfg.params, cfg.kappa, cfg);
  } else {
    const bool construct = cfg.command == Command::Measure || cfg.construct.value_or(false);
    if (cfg.kappa) throw InputError(to_string(cfg.command) + ": --kappa applies only to radar examples");
    e = evaluate_state(io::parse_state(read_json_file(*cfg.input_path)), construct, cfg);
  }
  if (fmt == Format::Csv)
    return cfg.command == Command::Measure ? measurement_csv(*e.measurement) : evaluation_csv(e);
  const json doc = evaluation_to_json(cfg.command, e);
  validate_document(json::parse(doc.dump()), cfg.tol);
  return doc.dump(2) + "\n";
}

}  // namespace qmetro::cli
