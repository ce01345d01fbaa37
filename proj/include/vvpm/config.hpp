#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vvpm/linalg.hpp"
#include "vvpm/model.hpp"

namespace vvpm {

/// Model section of a scenario. Which fields are used depends on `type`:
///   free_particle        mass
///   harmonic_oscillator  mass and one of stiffness, omega, omega_expr (omega(t), isotropic)
///   magnetic_field       mass (scalar), omega; D >= 2 from the endpoints
///   quartic              mass (scalar), coupling
///   potential_1d         mass (scalar), potential (expression in x and t)
struct ModelConfig {
  std::string type = "free_particle";
  Mat mass;
  std::optional<Mat> stiffness;
  std::optional<double> omega;
  std::optional<std::string> omega_expr;
  std::optional<double> coupling;
  std::optional<std::string> potential;
};

struct NumericsConfig {
  int n_steps = 1000;
  double tol = 1e-12;
  int max_iter = 50;
  std::optional<double> fd_step;
  int series_order = 8;
  int quad_points = 24;
  int time_slices = 2000;
  int gy_steps = 2000;
};

struct SweepParameter {
  std::string name;  // T, t_b, omega, hbar, mass
  std::vector<double> values;
};

struct ScenarioConfig {
  ModelConfig model;
  Vec x_a, x_b;
  double t_a = 0.0, t_b = 1.0;
  double hbar = 1.0;
  std::vector<std::string> methods{"vvpm"};
  NumericsConfig numerics;
  std::vector<double> t_mid;
  std::optional<Vec> midpoint_offset;
  std::vector<SweepParameter> sweep;
  std::string sweep_format = "csv";
  std::optional<std::string> output;

  int dim() const { return static_cast<int>(x_a.size()); }
};

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"vvpm",           "general",       "energy-hessian",
                                          "short-time",     "gelfand-yaglom", "gy-neumann",
                                          "gy-time-ordered", "analytic",      "dalembert"};
  return m;
}

/// Strict parse: unknown keys, wrong types and inconsistent dimensions raise ConfigError.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);

/// Canonical form; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ScenarioConfig& c);

/// Builds the model (throws ConfigError on bad parameters).
ModelPtr build_model(const ScenarioConfig& c);

/// Mass matrix of the configured model (D x D).
Mat mass_matrix(const ScenarioConfig& c);

/// Applies a sweep parameter value to a copy of the config.
ScenarioConfig with_parameter(const ScenarioConfig& c, const std::string& name, double value);

}  // namespace vvpm
