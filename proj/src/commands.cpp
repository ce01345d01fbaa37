#include "vvpm/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "vvpm/analytic.hpp"
#include "vvpm/composition.hpp"
#include "vvpm/error.hpp"
#include "vvpm/expression.hpp"
#include "vvpm/fluctuation.hpp"
#include "vvpm/gelfand_yaglom.hpp"
#include "vvpm/hessian.hpp"

namespace vvpm {

using nlohmann::json;

namespace {

bool wants(const ScenarioConfig& c, const std::string& method) {
  return std::find(c.methods.begin(), c.methods.end(), method) != c.methods.end();
}

bool needs_path(const std::string& method, bool harmonic) {
  if (method == "vvpm" || method == "general" || method == "energy-hessian" ||
      method == "dalembert") {
    return true;
  }
  return method.rfind("gelfand-yaglom", 0) == 0 || method.rfind("gy-", 0) == 0 ? !harmonic : false;
}

std::optional<std::function<Mat(double)>> harmonic_stiffness(const ScenarioConfig& c) {
  const ModelConfig& m = c.model;
  if (m.type == "free_particle") {
    const int d = c.dim();
    return [d](double) { return Mat(Mat::Zero(d, d)); };
  }
  if (m.type != "harmonic_oscillator") return std::nullopt;
  const Mat mass = m.mass;
  if (m.stiffness) {
    const Mat k = *m.stiffness;
    return [k](double) { return k; };
  }
  if (m.omega) {
    const Mat k = *m.omega * *m.omega * mass;
    return [k](double) { return k; };
  }
  const Expression omega = Expression::parse(*m.omega_expr);
  return [omega, mass](double t) {
    const double w = omega.value(0.0, t);
    return Mat(w * w * mass);
  };
}

BvpOptions bvp_options(const ScenarioConfig& c) {
  BvpOptions o;
  o.n_steps = c.numerics.n_steps;
  o.tol = c.numerics.tol;
  o.max_iter = c.numerics.max_iter;
  return o;
}

struct Failure {
  std::string name;
  std::string message;
};

template <class F>
std::optional<Failure> capture(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return Failure{std::string(e.name()), e.what()};
  } catch (const std::invalid_argument& e) {
    return Failure{"InvalidArgument", e.what()};
  } catch (const std::exception& e) {
    return Failure{"Failure", e.what()};
  }
  return std::nullopt;
}

struct MethodResult {
  std::string method;
  std::optional<FluctuationFactor> factor;
  std::optional<Failure> failure;
};

struct Evaluation {
  std::optional<ClassicalPath> path;
  std::optional<Failure> path_failure;
  std::vector<MethodResult> results;
};

FluctuationFactor run_method(const ScenarioConfig& c, const std::string& method,
                             const ModelPtr& model, const std::optional<ClassicalPath>& path) {
  const int d = c.dim();
  const double duration = c.t_b - c.t_a;
  const NumericsConfig& n = c.numerics;
  if (method == "vvpm") return vvpm_factor(action_hessian_jacobi(*path), d, c.hbar);
  if (method == "general") return general_factor(*path);
  if (method == "energy-hessian") return energy_hessian_factor(*path, n.fd_step);
  if (method == "short-time") return short_time_factor(*model, c.x_a, c.t_a, duration);
  if (method == "dalembert") return one_dim_dalembert_factor(*path, c.hbar).factor;
  if (method == "analytic") {
    const Mat mass = mass_matrix(c);
    if (c.model.type == "free_particle") return free_particle_factor(mass, duration, c.hbar).factor;
    if (c.model.type == "magnetic_field") {
      return magnetic_factor(c.model.mass(0, 0), *c.model.omega, d, duration, c.hbar).factor;
    }
    return harmonic_constant_factor(mass, (*harmonic_stiffness(c))(c.t_a), duration, c.hbar).factor;
  }
  // Gelfand-Yaglom family.
  FrequencyFunction omega2;
  if (auto k = harmonic_stiffness(c)) omega2 = harmonic_frequency(mass_matrix(c), *k);
  else omega2 = frequency_function(*path);
  JacobiBoundarySolution sol;
  if (method == "gelfand-yaglom") sol = solve_b_direct(omega2, c.t_a, c.t_b, n.gy_steps);
  else if (method == "gy-neumann") {
    sol = solve_b_neumann(omega2, c.t_a, c.t_b, n.series_order, n.quad_points);
  } else {
    sol = solve_b_time_ordered(omega2, c.t_a, c.t_b, n.time_slices);
  }
  return gy_fluctuation_factor(sol, mass_matrix(c), c.hbar);
}

Evaluation evaluate(const ScenarioConfig& c) {
  Evaluation ev;
  const ModelPtr model = build_model(c);
  const bool harmonic = harmonic_stiffness(c).has_value();
  const bool path_needed = std::any_of(c.methods.begin(), c.methods.end(),
                                       [&](const std::string& m) { return needs_path(m, harmonic); });
  if (path_needed) {
    ev.path_failure = capture([&] {
      ev.path = solve_bvp(model, c.x_a, c.x_b, c.t_a, c.t_b, bvp_options(c));
    });
  }
  for (const auto& m : c.methods) {
    MethodResult r;
    r.method = m;
    if (needs_path(m, harmonic) && !ev.path) {
      r.failure = ev.path_failure;
    } else {
      r.failure = capture([&] { r.factor = run_method(c, m, model, ev.path); });
    }
    ev.results.push_back(std::move(r));
  }
  return ev;
}

json factor_json(const FluctuationFactor& f) {
  return {{"re", f.value.real()},         {"im", f.value.imag()},
          {"magnitude", f.magnitude},     {"phase", f.phase},
          {"method", to_string(f.method)}, {"branch_note", f.branch_note}};
}

json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json path_json(const ClassicalPath& p, bool full_grid) {
  const std::size_t n = p.samples.size();
  const std::size_t stride = full_grid || n <= 256 ? 1 : (n - 1 + 253) / 254;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; i += stride) keep.push_back(i);
  if (keep.back() != n - 1) keep.push_back(n - 1);
  json t = json::array(), x = json::array(), v = json::array();
  for (std::size_t i : keep) {
    t.push_back(p.samples[i].t);
    x.push_back(vec_json(p.samples[i].x));
    v.push_back(vec_json(p.samples[i].v));
  }
  return {{"t", t}, {"x", x}, {"v", v}};
}

json failure_json(const std::string& method, const Failure& f) {
  return {{"method", method}, {"error", f.name}, {"message", f.message}};
}

void write_text(const std::string& text, const std::optional<std::string>& path) {
  if (!path) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(*path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file '" + *path + "'");
  out << text;
}

std::optional<std::string> output_path(const ScenarioConfig& c, const CommandOptions& opt) {
  return opt.out ? opt.out : c.output;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

void validate_methods(const ScenarioConfig& c) {
  const std::string& type = c.model.type;
  if (wants(c, "analytic")) {
    const bool constant_ho = type == "harmonic_oscillator" && !c.model.omega_expr;
    if (type != "free_particle" && type != "magnetic_field" && !constant_ho) {
      throw ConfigError("methods: no closed form for model '" + type + "'");
    }
  }
  if (wants(c, "dalembert") && c.dim() != 1) {
    throw ConfigError("methods: dalembert is one-dimensional");
  }
  const bool gy = wants(c, "gelfand-yaglom") || wants(c, "gy-neumann") || wants(c, "gy-time-ordered");
  if (gy && type == "magnetic_field") {
    throw ConfigError("methods: Gelfand-Yaglom needs a vanishing vector potential");
  }
}

Report factor_report(const ScenarioConfig& c, bool full_grid) {
  validate_methods(c);
  const Evaluation ev = evaluate(c);
  Report rep;
  json& j = rep.body;
  j["command"] = "factor";
  j["config"] = to_json(c);
  j["errors"] = json::array();
  if (ev.path) {
    const ClassicalPath& p = *ev.path;
    j["classical"] = {{"action", p.action},         {"p_a", vec_json(p.p_a)},
                      {"p_b", vec_json(p.p_b)},     {"energy_a", p.energy_a},
                      {"bvp_residual", p.bvp_residual}, {"iterations", p.iterations},
                      {"path", path_json(p, full_grid)}};
  } else {
    j["classical"] = nullptr;
  }
  json factors = json::object();
  for (const auto& r : ev.results) {
    if (r.factor) {
      factors[r.method] = factor_json(*r.factor);
    } else {
      rep.ok = false;
      j["errors"].push_back(failure_json(r.method, *r.failure));
    }
  }
  j["factors"] = factors;
  json dev = json::array();
  for (std::size_t a = 0; a < ev.results.size(); ++a) {
    for (std::size_t b = a + 1; b < ev.results.size(); ++b) {
      if (ev.results[a].factor && ev.results[b].factor) {
        dev.push_back({{"a", ev.results[a].method},
                       {"b", ev.results[b].method},
                       {"relative", relative_deviation(*ev.results[a].factor, *ev.results[b].factor)}});
      }
    }
  }
  j["deviations"] = dev;
  if (ev.path) {
    for (const auto& r : ev.results) {
      if (!r.factor) continue;
      const Complex amp = r.factor->value * std::polar(1.0, ev.path->action / c.hbar);
      j["propagator"] = {{"method", r.method}, {"re", amp.real()}, {"im", amp.imag()}};
      break;
    }
  }
  j["status"] = rep.ok ? "ok" : "error";
  return rep;
}

Report verify_report(const ScenarioConfig& c) {
  if (c.t_mid.empty()) throw ConfigError("verify: 't_mid' must list at least one time");
  const ModelPtr model = build_model(c);
  Report rep;
  json& j = rep.body;
  j["command"] = "verify";
  j["config"] = to_json(c);
  j["diagnostic"] = c.midpoint_offset.has_value();
  j["errors"] = json::array();
  json splits = json::array();
  bool all_passed = true;
  for (double t_mid : c.t_mid) {
    std::optional<CompositionReport> cr;
    const auto failure = capture([&] {
      cr = verify_composition(model, c.x_a, c.x_b, c.t_a, c.t_b, t_mid, {}, c.midpoint_offset,
                              bvp_options(c));
    });
    if (failure) {
      rep.ok = false;
      json e = failure_json("composition", *failure);
      e["t_mid"] = t_mid;
      j["errors"].push_back(e);
      continue;
    }
    const bool passed = cr->passed();
    all_passed = all_passed && passed;
    splits.push_back({{"t_mid", cr->t_mid},
                      {"x_mid", vec_json(cr->x_mid)},
                      {"momentum_mismatch", cr->momentum_mismatch},
                      {"action_additivity_residual", cr->action_additivity_residual},
                      {"factor_residual", cr->factor_residual},
                      {"jacobian_identity_residual", cr->jacobian_identity_residual},
                      {"factor_full", factor_json(cr->full)},
                      {"factor_left", factor_json(cr->left)},
                      {"factor_right", factor_json(cr->right)},
                      {"recombined", {{"re", cr->recombined.real()}, {"im", cr->recombined.imag()}}},
                      {"thresholds",
                       {{"factor", cr->thresholds.factor},
                        {"momentum", cr->thresholds.momentum},
                        {"action", cr->thresholds.action},
                        {"jacobian", cr->thresholds.jacobian}}},
                      {"passed", passed}});
  }
  j["splits"] = splits;
  j["all_passed"] = all_passed && rep.ok;
  if (!c.midpoint_offset && !all_passed) rep.ok = false;
  j["status"] = rep.ok ? "ok" : "error";
  return rep;
}

SweepTable sweep_table(const ScenarioConfig& c, int threads) {
  if (c.sweep.empty()) throw ConfigError("sweep: 'sweep' must list one or two parameters");
  validate_methods(c);
  std::vector<std::vector<double>> grid;
  for (double v0 : c.sweep[0].values) {
    if (c.sweep.size() == 1) {
      grid.push_back({v0});
    } else {
      for (double v1 : c.sweep[1].values) grid.push_back({v0, v1});
    }
  }
  std::vector<ScenarioConfig> configs;
  configs.reserve(grid.size());
  for (const auto& point : grid) {
    ScenarioConfig s = c;
    for (std::size_t k = 0; k < point.size(); ++k) s = with_parameter(s, c.sweep[k].name, point[k]);
    configs.push_back(std::move(s));
  }

  std::vector<Evaluation> results(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      Evaluation ev;
      auto failure = capture([&] { ev = evaluate(configs[i]); });
      if (failure) ev.path_failure = failure;
      results[i] = std::move(ev);
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(configs.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  SweepTable table;
  const std::string& ref = c.methods.front();
  json rows = json::array();
  std::ostringstream csv;
  for (const auto& p : c.sweep) csv << p.name << ',';
  csv << "method,magnitude,phase,re,im,magnitude_hbar_scaled,deviation_from_" << ref << ",error\n";
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const Evaluation& ev = results[i];
    const int d = configs[i].dim();
    const double hbar_scale = std::pow(configs[i].hbar, 0.5 * d);
    std::optional<FluctuationFactor> ref_factor;
    for (const auto& r : ev.results) {
      if (r.method == ref) ref_factor = r.factor;
    }
    std::vector<MethodResult> rs = ev.results;
    if (rs.empty()) {
      for (const auto& m : c.methods) rs.push_back({m, std::nullopt, ev.path_failure});
    }
    for (const auto& r : rs) {
      json row;
      for (std::size_t k = 0; k < grid[i].size(); ++k) {
        row[c.sweep[k].name] = grid[i][k];
        csv << fmt17(grid[i][k]) << ',';
      }
      row["method"] = r.method;
      csv << r.method << ',';
      if (r.factor) {
        const double dev =
            ref_factor ? relative_deviation(*r.factor, *ref_factor) : std::nan("");
        row["magnitude"] = r.factor->magnitude;
        row["phase"] = r.factor->phase;
        row["re"] = r.factor->value.real();
        row["im"] = r.factor->value.imag();
        row["magnitude_hbar_scaled"] = r.factor->magnitude * hbar_scale;
        row["deviation"] = ref_factor ? json(dev) : json(nullptr);
        row["error"] = nullptr;
        csv << fmt17(r.factor->magnitude) << ',' << fmt17(r.factor->phase) << ','
            << fmt17(r.factor->value.real()) << ',' << fmt17(r.factor->value.imag()) << ','
            << fmt17(r.factor->magnitude * hbar_scale) << ',' << (ref_factor ? fmt17(dev) : "")
            << ",\n";
      } else {
        table.ok = false;
        const std::string err = r.failure ? r.failure->name : "Failure";
        row["error"] = err;
        row["message"] = r.failure ? r.failure->message : "";
        csv << ",,,,,," << csv_field(err) << '\n';
      }
      rows.push_back(row);
    }
  }
  if (c.sweep_format == "json") {
    json j;
    j["command"] = "sweep";
    j["config"] = to_json(c);
    j["rows"] = rows;
    table.text = dump(j);
  } else {
    table.text = csv.str();
  }
  return table;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

int cmd_factor(const ScenarioConfig& c, const CommandOptions& opt) {
  const Report rep = factor_report(c, opt.full_grid);
  write_text(dump(rep.body), output_path(c, opt));
  return rep.ok ? Success : NumericalFailure;
}

int cmd_verify(const ScenarioConfig& c, const CommandOptions& opt) {
  const Report rep = verify_report(c);
  write_text(dump(rep.body), output_path(c, opt));
  return rep.ok ? Success : NumericalFailure;
}

int cmd_sweep(const ScenarioConfig& c, const CommandOptions& opt) {
  const SweepTable table = sweep_table(c, opt.threads);
  write_text(table.text, output_path(c, opt));
  return Success;
}

int cmd_models(std::ostream& out) {
  out << "free_particle        mass (number, diagonal or matrix)\n"
         "harmonic_oscillator  mass; one of stiffness (matrix), omega (number), omega_expr (omega(t))\n"
         "magnetic_field       mass (number), omega (Larmor frequency); D >= 2\n"
         "quartic              mass (number), coupling; V = coupling x^4 / 4, D = 1\n"
         "potential_1d         mass (number), potential (expression in x and t), D = 1\n";
  return Success;
}

}  // namespace vvpm
