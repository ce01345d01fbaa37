#include "vvpm/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vvpm/error.hpp"
#include "vvpm/expression.hpp"

namespace vvpm {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "number is not finite");
  return v;
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

Vec get_vector(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = get_number(j[i], where);
  return v;
}

// number -> c I, [a, b, ...] -> diag, [[...], ...] -> full matrix.
Mat get_matrix(const json& j, int d, const std::string& where) {
  if (j.is_number()) return get_number(j, where) * Mat::Identity(d, d);
  if (!j.is_array() || static_cast<int>(j.size()) != d) {
    fail(where, "expected a number, a length-" + std::to_string(d) + " diagonal or a " +
                    std::to_string(d) + "x" + std::to_string(d) + " matrix");
  }
  if (j[0].is_number()) return get_vector(j, where).asDiagonal();
  Mat m(d, d);
  for (int r = 0; r < d; ++r) {
    const Vec row = get_vector(j[r], where);
    if (row.size() != d) fail(where, "matrix row has the wrong length");
    m.row(r) = row.transpose();
  }
  return m;
}

json matrix_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

json vector_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

bool scalar_mass(const std::string& type) {
  return type == "magnetic_field" || type == "quartic" || type == "potential_1d";
}

ModelConfig parse_model(const json& j, int d) {
  const std::string where = "model";
  check_keys(j, where,
             {"type", "mass", "stiffness", "omega", "omega_expr", "coupling", "potential"});
  if (!j.contains("type")) fail(where, "missing 'type'");
  ModelConfig m;
  m.type = get_string(j["type"], where + ".type");
  const std::set<std::string> allowed_by_type[] = {
      {"type", "mass"},
      {"type", "mass", "stiffness", "omega", "omega_expr"},
      {"type", "mass", "omega"},
      {"type", "mass", "coupling"},
      {"type", "mass", "potential"},
  };
  const std::vector<std::string> types{"free_particle", "harmonic_oscillator", "magnetic_field",
                                       "quartic", "potential_1d"};
  const auto it = std::find(types.begin(), types.end(), m.type);
  if (it == types.end()) fail(where + ".type", "unknown model type '" + m.type + "'");
  check_keys(j, where + " (" + m.type + ")", allowed_by_type[it - types.begin()]);

  if (scalar_mass(m.type)) {
    m.mass = Mat::Constant(1, 1, j.contains("mass") ? get_number(j["mass"], where + ".mass") : 1.0);
  } else {
    m.mass = j.contains("mass") ? get_matrix(j["mass"], d, where + ".mass") : Mat::Identity(d, d);
  }
  if (j.contains("stiffness")) m.stiffness = get_matrix(j["stiffness"], d, where + ".stiffness");
  if (j.contains("omega")) m.omega = get_number(j["omega"], where + ".omega");
  if (j.contains("omega_expr")) m.omega_expr = get_string(j["omega_expr"], where + ".omega_expr");
  if (j.contains("coupling")) m.coupling = get_number(j["coupling"], where + ".coupling");
  if (j.contains("potential")) m.potential = get_string(j["potential"], where + ".potential");

  if (m.type == "harmonic_oscillator") {
    const int n = m.stiffness.has_value() + m.omega.has_value() + m.omega_expr.has_value();
    if (n != 1) fail(where, "harmonic_oscillator needs exactly one of stiffness, omega, omega_expr");
  }
  if (m.type == "magnetic_field") {
    if (!m.omega) fail(where, "magnetic_field needs 'omega'");
    if (d < 2) fail(where, "magnetic_field needs at least two dimensions");
  }
  if ((m.type == "quartic" || m.type == "potential_1d") && d != 1) {
    fail(where, m.type + " is one-dimensional");
  }
  if (m.type == "potential_1d" && !m.potential) fail(where, "potential_1d needs 'potential'");
  if (m.omega_expr) Expression::parse(*m.omega_expr);
  if (m.potential) Expression::parse(*m.potential);
  return m;
}

NumericsConfig parse_numerics(const json& j) {
  const std::string w = "numerics";
  check_keys(j, w,
             {"n_steps", "tol", "max_iter", "fd_step", "series_order", "quad_points", "time_slices",
              "gy_steps"});
  NumericsConfig n;
  if (j.contains("n_steps")) n.n_steps = get_int(j["n_steps"], w + ".n_steps");
  if (j.contains("tol")) n.tol = get_number(j["tol"], w + ".tol");
  if (j.contains("max_iter")) n.max_iter = get_int(j["max_iter"], w + ".max_iter");
  if (j.contains("fd_step")) n.fd_step = get_number(j["fd_step"], w + ".fd_step");
  if (j.contains("series_order")) n.series_order = get_int(j["series_order"], w + ".series_order");
  if (j.contains("quad_points")) n.quad_points = get_int(j["quad_points"], w + ".quad_points");
  if (j.contains("time_slices")) n.time_slices = get_int(j["time_slices"], w + ".time_slices");
  if (j.contains("gy_steps")) n.gy_steps = get_int(j["gy_steps"], w + ".gy_steps");
  if (n.n_steps < 8 || n.n_steps % 2) fail(w + ".n_steps", "must be an even integer >= 8");
  if (!(n.tol > 0)) fail(w + ".tol", "must be positive");
  if (n.max_iter < 1) fail(w + ".max_iter", "must be >= 1");
  if (n.fd_step && !(*n.fd_step > 0)) fail(w + ".fd_step", "must be positive");
  if (n.series_order < 0) fail(w + ".series_order", "must be >= 0");
  if (n.quad_points < 2) fail(w + ".quad_points", "must be >= 2");
  if (n.time_slices < 1) fail(w + ".time_slices", "must be >= 1");
  if (n.gy_steps < 1) fail(w + ".gy_steps", "must be >= 1");
  return n;
}

SweepParameter parse_sweep_parameter(const json& j, std::size_t index) {
  const std::string w = "sweep[" + std::to_string(index) + "]";
  check_keys(j, w, {"name", "values", "from", "to", "count"});
  if (!j.contains("name")) fail(w, "missing 'name'");
  SweepParameter p;
  p.name = get_string(j["name"], w + ".name");
  const std::set<std::string> names{"T", "t_b", "omega", "hbar", "mass"};
  if (!names.count(p.name)) fail(w + ".name", "unknown sweep parameter '" + p.name + "'");
  const bool has_values = j.contains("values");
  const bool has_range = j.contains("from") || j.contains("to") || j.contains("count");
  if (has_values == has_range) fail(w, "give either 'values' or 'from'/'to'/'count'");
  if (has_values) {
    const Vec v = get_vector(j["values"], w + ".values");
    p.values.assign(v.data(), v.data() + v.size());
  } else {
    if (!j.contains("from") || !j.contains("to") || !j.contains("count")) {
      fail(w, "'from', 'to' and 'count' are all required");
    }
    const double from = get_number(j["from"], w + ".from");
    const double to = get_number(j["to"], w + ".to");
    const int count = get_int(j["count"], w + ".count");
    if (count < 1) fail(w + ".count", "must be >= 1");
    for (int i = 0; i < count; ++i) {
      p.values.push_back(count == 1 ? from : from + (to - from) * i / (count - 1));
    }
  }
  return p;
}

}  // namespace

ScenarioConfig parse_config(const json& j) {
  check_keys(j, "config",
             {"model", "x_a", "x_b", "t_a", "t_b", "hbar", "methods", "numerics", "t_mid",
              "midpoint_offset", "sweep", "sweep_format", "output"});
  for (const char* key : {"model", "x_a", "x_b", "t_b"}) {
    if (!j.contains(key)) fail("config", std::string("missing '") + key + "'");
  }
  ScenarioConfig c;
  c.x_a = get_vector(j["x_a"], "x_a");
  c.x_b = get_vector(j["x_b"], "x_b");
  if (c.x_a.size() != c.x_b.size()) fail("x_b", "dimension differs from x_a");
  const int d = c.dim();
  c.model = parse_model(j["model"], d);
  if (j.contains("t_a")) c.t_a = get_number(j["t_a"], "t_a");
  c.t_b = get_number(j["t_b"], "t_b");
  if (!(c.t_b > c.t_a)) fail("t_b", "must exceed t_a");
  if (j.contains("hbar")) c.hbar = get_number(j["hbar"], "hbar");
  if (!(c.hbar > 0)) fail("hbar", "must be positive");
  if (j.contains("methods")) {
    if (!j["methods"].is_array() || j["methods"].empty()) fail("methods", "expected a non-empty array");
    c.methods.clear();
    for (const auto& m : j["methods"]) {
      const std::string name = get_string(m, "methods");
      const auto& known = known_methods();
      if (std::find(known.begin(), known.end(), name) == known.end()) {
        fail("methods", "unknown method '" + name + "'");
      }
      if (std::find(c.methods.begin(), c.methods.end(), name) != c.methods.end()) {
        fail("methods", "duplicate method '" + name + "'");
      }
      c.methods.push_back(name);
    }
  }
  if (j.contains("numerics")) c.numerics = parse_numerics(j["numerics"]);
  if (j.contains("t_mid")) {
    if (!j["t_mid"].is_array()) fail("t_mid", "expected an array");
    for (const auto& t : j["t_mid"]) {
      const double v = get_number(t, "t_mid");
      if (!(v > c.t_a && v < c.t_b)) fail("t_mid", "values must lie strictly inside (t_a, t_b)");
      c.t_mid.push_back(v);
    }
  }
  if (j.contains("midpoint_offset")) {
    c.midpoint_offset = get_vector(j["midpoint_offset"], "midpoint_offset");
    if (c.midpoint_offset->size() != d) fail("midpoint_offset", "dimension differs from x_a");
  }
  if (j.contains("sweep")) {
    if (!j["sweep"].is_array() || j["sweep"].empty() || j["sweep"].size() > 2) {
      fail("sweep", "expected an array of one or two parameters");
    }
    for (std::size_t i = 0; i < j["sweep"].size(); ++i) {
      c.sweep.push_back(parse_sweep_parameter(j["sweep"][i], i));
    }
    if (c.sweep.size() == 2 && c.sweep[0].name == c.sweep[1].name) {
      fail("sweep", "parameters must differ");
    }
  }
  if (j.contains("sweep_format")) {
    c.sweep_format = get_string(j["sweep_format"], "sweep_format");
    if (c.sweep_format != "csv" && c.sweep_format != "json") {
      fail("sweep_format", "must be 'csv' or 'json'");
    }
  }
  if (j.contains("output")) c.output = get_string(j["output"], "output");
  build_model(c);
  for (const auto& p : c.sweep) {
    for (double v : p.values) build_model(with_parameter(c, p.name, v));
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ScenarioConfig& c) {
  json m;
  m["type"] = c.model.type;
  if (scalar_mass(c.model.type)) m["mass"] = c.model.mass(0, 0);
  else m["mass"] = matrix_json(c.model.mass);
  if (c.model.stiffness) m["stiffness"] = matrix_json(*c.model.stiffness);
  if (c.model.omega) m["omega"] = *c.model.omega;
  if (c.model.omega_expr) m["omega_expr"] = *c.model.omega_expr;
  if (c.model.coupling) m["coupling"] = *c.model.coupling;
  if (c.model.potential) m["potential"] = *c.model.potential;

  json n;
  n["n_steps"] = c.numerics.n_steps;
  n["tol"] = c.numerics.tol;
  n["max_iter"] = c.numerics.max_iter;
  if (c.numerics.fd_step) n["fd_step"] = *c.numerics.fd_step;
  n["series_order"] = c.numerics.series_order;
  n["quad_points"] = c.numerics.quad_points;
  n["time_slices"] = c.numerics.time_slices;
  n["gy_steps"] = c.numerics.gy_steps;

  json j;
  j["model"] = m;
  j["x_a"] = vector_json(c.x_a);
  j["x_b"] = vector_json(c.x_b);
  j["t_a"] = c.t_a;
  j["t_b"] = c.t_b;
  j["hbar"] = c.hbar;
  j["methods"] = c.methods;
  j["numerics"] = n;
  if (!c.t_mid.empty()) j["t_mid"] = c.t_mid;
  if (c.midpoint_offset) j["midpoint_offset"] = vector_json(*c.midpoint_offset);
  if (!c.sweep.empty()) {
    json s = json::array();
    for (const auto& p : c.sweep) s.push_back({{"name", p.name}, {"values", p.values}});
    j["sweep"] = s;
  }
  j["sweep_format"] = c.sweep_format;
  if (c.output) j["output"] = *c.output;
  return j;
}

Mat mass_matrix(const ScenarioConfig& c) {
  const int d = c.dim();
  if (scalar_mass(c.model.type)) return c.model.mass(0, 0) * Mat::Identity(d, d);
  return c.model.mass;
}

ModelPtr build_model(const ScenarioConfig& c) {
  const ModelConfig& m = c.model;
  const int d = c.dim();
  try {
    if (m.type == "free_particle") return make_model(FreeParticle{m.mass}, c.hbar);
    if (m.type == "harmonic_oscillator") {
      if (m.stiffness) return make_model(constant_oscillator(m.mass, *m.stiffness), c.hbar);
      if (m.omega) {
        return make_model(constant_oscillator(m.mass, *m.omega * *m.omega * m.mass), c.hbar);
      }
      const Expression omega = Expression::parse(*m.omega_expr);
      return make_model(isotropic_oscillator(m.mass, [omega](double t) { return omega.value(0.0, t); }),
                        c.hbar);
    }
    if (m.type == "magnetic_field") {
      return make_model(MagneticField{m.mass(0, 0), *m.omega, d}, c.hbar);
    }
    if (m.type == "quartic") {
      return make_model(quartic_potential(m.coupling.value_or(1.0), m.mass(0, 0)), c.hbar);
    }
    const Expression v = Expression::parse(*m.potential);
    OneDimPotential p;
    p.value = [v](double x, double t) { return v.value(x, t); };
    p.first = [v](double x, double t) { return v.jet(x, t).d1; };
    p.second = [v](double x, double t) { return v.jet(x, t).d2; };
    p.mass = m.mass(0, 0);
    p.label = "potential_1d";
    return make_model(p, c.hbar);
  } catch (const Error& e) {
    throw ConfigError("model: " + std::string(e.what()));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model: " + std::string(e.what()));
  }
}

ScenarioConfig with_parameter(const ScenarioConfig& c, const std::string& name, double value) {
  ScenarioConfig out = c;
  if (name == "T") {
    out.t_b = c.t_a + value;
  } else if (name == "t_b") {
    out.t_b = value;
  } else if (name == "hbar") {
    out.hbar = value;
  } else if (name == "omega") {
    if (c.model.type != "harmonic_oscillator" && c.model.type != "magnetic_field") {
      throw ConfigError("sweep: model '" + c.model.type + "' has no omega");
    }
    out.model.omega = value;
    out.model.stiffness.reset();
    out.model.omega_expr.reset();
  } else if (name == "mass") {
    out.model.mass = scalar_mass(c.model.type) ? Mat::Constant(1, 1, value)
                                               : Mat(value * Mat::Identity(c.dim(), c.dim()));
  } else {
    throw ConfigError("sweep: unknown parameter '" + name + "'");
  }
  if (!(out.t_b > out.t_a)) throw ConfigError("sweep: parameter gives t_b <= t_a");
  if (!(out.hbar > 0)) throw ConfigError("sweep: hbar must be positive");
  return out;
}

}  // namespace vvpm
