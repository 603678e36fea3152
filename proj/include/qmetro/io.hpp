#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmetro/errors.hpp"
#include "qmetro/linalg.hpp"
#include "qmetro/measurement.hpp"
#include "qmetro/radar.hpp"
#include "qmetro/states.hpp"
#include "qmetro/tradeoff.hpp"

namespace qmetro::io {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

// Shortest text that round-trips the double.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

inline json to_json(const RMatrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

inline json to_json(const std::vector<double>& v) { return json(v); }

template <class T>
json optional_json(const std::optional<T>& x) {
  return x ? to_json(*x) : json(nullptr);
}

inline json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

namespace detail {

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw InputError(where + ": expected a number");
  return j.get<double>();
}

inline const json& field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw InputError(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw InputError(where + ": missing field \"" + key + "\"");
  return *it;
}

}  // namespace detail

inline cplx complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) throw InputError(where + ": expected an [re, im] pair");
  return {detail::number(j[0], where), detail::number(j[1], where)};
}

inline CVector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a non-empty array of [re, im] pairs");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline RMatrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw InputError(where + ": expected a nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  RMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InputError(where + ": ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = detail::number(row[static_cast<std::size_t>(k)], where);
  }
  return m;
}

inline std::vector<double> numbers_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) out.push_back(detail::number(x, where));
  return out;
}

// Report fields. Absent values serialize as null.
inline json report_to_json(const TradeoffReport& r) {
  json j;
  j["schema"] = kSchemaVersion;
  j["n"] = r.n;
  j["F_Q"] = to_json(r.F_Q);
  j["F_Im"] = to_json(r.F_Im);
  j["lambdas"] = r.lambdas;
  j["tight_bound"] = r.tight_bound;
  j["gill_massar"] = optional_json(r.gill_massar);
  j["matsumoto_lower"] = r.matsumoto_lower;
  j["frobenius_quarter"] = r.frobenius_quarter;
  j["frobenius_fifth"] = r.frobenius_fifth;
  j["F_C"] = optional_json(r.F_C);
  j["achieved"] = optional_json(r.achieved);
  j["achieved_inverse"] = optional_json(r.achieved_inverse);
  j["gap"] = optional_json(r.gap);
  j["mixed"] = r.mixed;
  j["note"] = r.note;
  return j;
}

inline json measurement_to_json(const Measurement& m) {
  json j;
  json basis = json::array();
  for (const CVector& v : m.basis()) basis.push_back(to_json(v));
  j["basis"] = basis;
  j["dim"] = m.dim();
  j["ancilla_dim"] = m.ancilla_dim;
  j["betas"] = m.betas;
  j["varphi"] = m.varphi;
  return j;
}

// Schema check for an emitted report; throws InputError naming the offending field.
inline TradeoffReport report_from_json(const json& j) {
  const std::string where = "report";
  const json& schema = detail::field(j, "schema", where);
  if (!schema.is_string() || schema.get<std::string>() != kSchemaVersion)
    throw InputError(where + ": unsupported schema version");
  TradeoffReport r;
  const json& n = detail::field(j, "n", where);
  if (!n.is_number_unsigned()) throw InputError(where + ".n: expected a non-negative integer");
  r.n = n.get<std::size_t>();
  auto square = [&](const std::string& key) {
    RMatrix m = matrix_from_json(detail::field(j, key, where), where + "." + key);
    if (static_cast<std::size_t>(m.rows()) != r.n || static_cast<std::size_t>(m.cols()) != r.n)
      throw InputError(where + "." + key + ": expected an n x n matrix");
    return m;
  };
  auto opt_number = [&](const std::string& key) -> std::optional<double> {
    const json& x = detail::field(j, key, where);
    if (x.is_null()) return std::nullopt;
    return detail::number(x, where + "." + key);
  };
  r.F_Q = square("F_Q");
  r.F_Im = square("F_Im");
  r.lambdas = numbers_from_json(detail::field(j, "lambdas", where), where + ".lambdas");
  r.tight_bound = detail::number(detail::field(j, "tight_bound", where), where + ".tight_bound");
  r.gill_massar = opt_number("gill_massar");
  r.matsumoto_lower = detail::number(detail::field(j, "matsumoto_lower", where), where + ".matsumoto_lower");
  r.frobenius_quarter = detail::number(detail::field(j, "frobenius_quarter", where), where + ".frobenius_quarter");
  r.frobenius_fifth = detail::number(detail::field(j, "frobenius_fifth", where), where + ".frobenius_fifth");
  if (!detail::field(j, "F_C", where).is_null()) r.F_C = square("F_C");
  r.achieved = opt_number("achieved");
  r.achieved_inverse = opt_number("achieved_inverse");
  r.gap = opt_number("gap");
  const json& mixed = detail::field(j, "mixed", where);
  if (!mixed.is_boolean()) throw InputError(where + ".mixed: expected a boolean");
  r.mixed = mixed.get<bool>();
  const json& note = detail::field(j, "note", where);
  if (!note.is_string()) throw InputError(where + ".note: expected a string");
  r.note = note.get<std::string>();
  if (r.F_C.has_value() != r.achieved.has_value() || r.achieved.has_value() != r.gap.has_value())
    throw InputError(where + ": F_C, achieved and gap must be present together");
  return r;
}

inline Measurement measurement_from_json(const json& j) {
  const std::string where = "measurement";
  const json& basis = detail::field(j, "basis", where);
  if (!basis.is_array() || basis.empty()) throw InputError(where + ".basis: expected a non-empty array");
  const auto d = static_cast<Eigen::Index>(basis.size());
  Measurement m;
  m.U = CMatrix(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const CVector v = vector_from_json(basis[static_cast<std::size_t>(k)], where + ".basis");
    if (v.size() != d) throw InputError(where + ".basis: vectors must have one entry per outcome");
    m.U.row(k) = v.adjoint();
  }
  const json& a = detail::field(j, "ancilla_dim", where);
  if (!a.is_number_unsigned() || a.get<std::size_t>() == 0)
    throw InputError(where + ".ancilla_dim: expected a positive integer");
  m.ancilla_dim = a.get<std::size_t>();
  m.betas = numbers_from_json(detail::field(j, "betas", where), where + ".betas");
  m.varphi = numbers_from_json(detail::field(j, "varphi", where), where + ".varphi");
  if (max_abs(m.U * m.U.adjoint() - CMatrix::Identity(d, d)) > 1e-8) throw InputError(where + ".basis: vectors are not orthonormal");
  return m;
}

// {"type": "qubit" | "qutrit" | "squeezed" | "custom_matrix", "params": [...]}.
// custom_matrix carries "psi" and "dpsi" as [re, im] pair arrays; "params" is optional there, and
// "embedded": true marks psi as living in a subspace of a larger space.
inline ParametrizedPureState parse_state(const json& j) {
  const std::string where = "state";
  const json& type = detail::field(j, "type", where);
  if (!type.is_string()) throw InputError(where + ".type: expected a string");
  const std::string t = type.get<std::string>();
  auto params = [&](std::size_t count) {
    const std::vector<double> p = numbers_from_json(detail::field(j, "params", where), where + ".params");
    if (p.size() != count)
      throw InputError(where + ".params: " + t + " takes " + std::to_string(count) + " parameters");
    return p;
  };
  if (t == "qubit") {
    const auto p = params(2);
    return qubit_fixture(p[0], p[1]);
  }
  if (t == "qutrit") {
    const auto p = params(2);
    return qutrit_fixture(p[0], p[1]);
  }
  if (t == "squeezed") {
    const auto p = params(3);
    return squeezed_fixture(p[0], p[1], p[2]);
  }
  if (t == "custom_matrix") {
    SubspaceEmbedding e;
    e.state = vector_from_json(detail::field(j, "psi", where), where + ".psi");
    const json& dpsi = detail::field(j, "dpsi", where);
    if (!dpsi.is_array() || dpsi.empty()) throw InputError(where + ".dpsi: expected one vector per parameter");
    for (std::size_t k = 0; k < dpsi.size(); ++k) {
      CVector d = vector_from_json(dpsi[k], where + ".dpsi[" + std::to_string(k) + "]");
      if (d.size() != e.state.size()) throw InputError(where + ".dpsi: each vector must match psi in length");
      e.derivatives.push_back(std::move(d));
    }
    Params p(e.derivatives.size(), 0.0);
    if (j.contains("params")) p = params(e.derivatives.size());
    if (std::abs(e.state.norm() - 1.0) > kNormTol) throw InputError(where + ".psi: state is not normalized");
    ParametrizedPureState s = embedded_state(e, p, j.value("label", std::string("custom")));
    s.full_space = !j.value("embedded", false);
    return s;
  }
  throw InputError(where + ".type: expected qubit, qutrit, squeezed or custom_matrix");
}

// Radar preset: {"source": "single" | "biphoton", "omega0", "kappa", "x", "v", ...}.
inline RadarModel parse_radar_model(const json& j) {
  const std::string where = "radar";
  if (!j.is_object()) throw InputError(where + ": expected an object");
  RadarModel m;
  for (const auto& [key, value] : j.items()) {
    if (key == "source") {
      const std::string s = value.is_string() ? value.get<std::string>() : "";
      if (s == "single")
        m.source = RadarSource::SinglePhoton;
      else if (s == "biphoton")
        m.source = RadarSource::BiPhoton;
      else
        throw InputError(where + ".source: expected \"single\" or \"biphoton\"");
      continue;
    }
    if (key == "label") continue;
    const double x = detail::number(value, where + "." + key);
    if (key == "sigma0") m.sigma0 = x;
    else if (key == "omega0") m.omega0 = x;
    else if (key == "t0") m.t0 = x;
    else if (key == "kappa") m.kappa = x;
    else if (key == "sigma_i0") m.sigma_i0 = x;
    else if (key == "omega_i0") m.omega_i0 = x;
    else if (key == "c") m.c = x;
    else if (key == "x") m.x = x;
    else if (key == "v") m.v = x;
    else throw InputError(where + ": unknown field \"" + key + "\"");
  }
  m.validate();
  return m;
}

inline json radar_model_to_json(const RadarModel& m) {
  return {{"source", m.source == RadarSource::SinglePhoton ? "single" : "biphoton"},
          {"sigma0", m.sigma0},
          {"omega0", m.omega0},
          {"t0", m.t0},
          {"kappa", m.kappa},
          {"sigma_i0", m.sigma_i0},
          {"omega_i0", m.omega_i0},
          {"c", m.c},
          {"x", m.x},
          {"v", m.v}};
}

// Minimal CSV writer; every row must match the header width.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw NumericalError("csv: row width differs from header");
    rows_.push_back(std::move(row));
  }

  std::size_t width() const { return header_.size(); }
  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(const std::optional<double>& x) { return x ? fmt(*x) : ""; }

}  // namespace qmetro::io
