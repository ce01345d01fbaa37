#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

using nlohmann::json;
using Catch::Matchers::WithinRel;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Workspace {
 public:
  Workspace() {
    dir_ = fs::temp_directory_path() / ("vvpm_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const json& j) const { return write(name, j.dump(2)); }
  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }
  fs::path path(const std::string& name) const { return dir_ / name; }

  Run run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string("'") + VVPM_CLI_PATH + "' " + args + " > '" + out.string() +
                            "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

 private:
  fs::path dir_;
};

json oscillator(double omega, double T) {
  return {{"model", {{"type", "harmonic_oscillator"}, {"mass", 1.0}, {"omega", omega}}},
          {"x_a", {0.0}},
          {"x_b", {1.0}},
          {"t_b", T},
          {"methods", {"vvpm", "analytic", "gelfand-yaglom"}}};
}

std::vector<std::map<std::string, std::string>> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    std::map<std::string, std::string> row;
    std::size_t start = 0;
    for (const auto& name : header) {
      const std::size_t end = std::min(line.find(',', start), line.size());
      row[name] = start <= line.size() ? line.substr(start, end - start) : "";
      start = end + 1;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("factor command", "[cli]") {
  Workspace ws;
  const Run r = ws.run("factor --config '" + ws.write("ho.json", oscillator(1.0, 1.0)).string() + "'");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["status"] == "ok");
  CHECK(j["errors"].empty());
  const double expect = std::sqrt(1.0 / (2 * kPi * std::sin(1.0)));
  for (const char* m : {"vvpm", "analytic", "gelfand-yaglom"}) {
    INFO(m);
    CHECK_THAT(j["factors"][m]["magnitude"].get<double>(), WithinRel(expect, 1e-8));
    CHECK(j["factors"][m]["phase"].get<double>() == -kPi / 4);
  }
  CHECK(j["deviations"].size() == 3);
  CHECK(j["classical"]["bvp_residual"].get<double>() < 1e-12);
  CHECK(j["classical"]["path"]["t"].size() <= 256);
  CHECK(j["propagator"]["method"] == "vvpm");
  // Classical action cot(T) x_b^2 / 2 for x_a = 0.
  CHECK_THAT(j["classical"]["action"].get<double>(), WithinRel(0.5 / std::tan(1.0), 1e-8));

  const Run full = ws.run("factor --full-grid --config '" + ws.path("ho.json").string() + "'");
  CHECK(json::parse(full.out)["classical"]["path"]["t"].size() == 1001);
}

TEST_CASE("configuration failures exit with 1", "[cli][errors]") {
  Workspace ws;
  json bad = oscillator(1.0, 1.0);
  bad["unexpected"] = true;
  Run r = ws.run("factor --config '" + ws.write("bad.json", bad).string() + "'");
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown key 'unexpected'") != std::string::npos);
  CHECK(ws.run("factor --config '" + ws.path("missing.json").string() + "'").code == 1);
  CHECK(ws.run("factor --config '" + ws.write("broken.json", std::string("{")).string() + "'").code == 1);
  CHECK(ws.run("factor").code == 1);
  CHECK(ws.run("frobnicate").code == 1);
  json mag = {{"model", {{"type", "magnetic_field"}, {"omega", 1.0}}}, {"x_a", {0.0, 0.0}}, {"x_b", {1.0, 0.0}},
              {"t_b", 1.0}, {"methods", {"gelfand-yaglom"}}};
  CHECK(ws.run("factor --config '" + ws.write("mag.json", mag).string() + "'").code == 1);
}

TEST_CASE("numerical failures exit with 2 and are itemised", "[cli][errors]") {
  Workspace ws;
  const Run r = ws.run("factor --config '" + ws.write("focal.json", oscillator(1.0, 3.5)).string() + "'");
  CHECK(r.code == 2);
  const json j = json::parse(r.out);
  CHECK(j["status"] == "error");
  bool focal = false;
  for (const auto& e : j["errors"]) focal = focal || (e["method"] == "analytic" && e["error"] == "FocalPoint");
  CHECK(focal);
}

TEST_CASE("output is deterministic", "[cli][property]") {
  Workspace ws;
  json c = oscillator(1.3, 0.9);
  c["methods"] = {"vvpm", "general", "gy-neumann", "gy-time-ordered", "energy-hessian"};
  const std::string cfg = ws.write("det.json", c).string();
  const Run a = ws.run("factor --config '" + cfg + "'");
  const Run b = ws.run("factor --config '" + cfg + "'");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  c["sweep"] = {{{"name", "T"}, {"values", {0.2, 0.4, 0.6, 0.8}}}, {{"name", "hbar"}, {"values", {1.0, 0.5}}}};
  const std::string sweep = ws.write("sweep.json", c).string();
  const Run s1 = ws.run("sweep --threads 1 --config '" + sweep + "'");
  const Run s4 = ws.run("sweep --threads 4 --config '" + sweep + "'");
  REQUIRE(s1.code == 0);
  CHECK(s1.out == s4.out);

  CHECK(ws.run("factor --config '" + cfg + "' --out '" + ws.path("o.json").string() + "'").out.empty());
  CHECK(slurp(ws.path("o.json")) == a.out);
}

TEST_CASE("sweep table matches the closed form", "[cli]") {
  Workspace ws;
  json c = oscillator(2.0, 1.0);
  c["methods"] = {"vvpm", "analytic"};
  c["sweep"] = {{{"name", "T"}, {"from", 0.2}, {"to", 1.4}, {"count", 5}}};
  const Run r = ws.run("sweep --config '" + ws.write("s.json", c).string() + "'");
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 10);
  for (const auto& row : rows) {
    const double T = std::stod(row.at("T"));
    const double expect = std::sqrt(2.0 / (2 * kPi * std::sin(2.0 * T)));
    CHECK_THAT(std::stod(row.at("magnitude")), WithinRel(expect, 1e-8));
    CHECK(std::stod(row.at("deviation_from_vvpm")) < 1e-8);
    CHECK(row.at("error").empty());
  }
  // 2 T = 3.6 is past the focal point: the row carries the error instead of a number.
  c["sweep"] = {{{"name", "T"}, {"values", {1.8}}}};
  const auto focal = parse_csv(ws.run("sweep --config '" + ws.write("f.json", c).string() + "'").out);
  REQUIRE(focal.size() == 2);
  CHECK(focal[1].at("method") == "analytic");
  CHECK(focal[1].at("error") == "FocalPoint");
}

TEST_CASE("hbar sweep scales as hbar^(-D/2)", "[cli][property]") {
  Workspace ws;
  json c = {{"model", {{"type", "free_particle"}, {"mass", {1.0, 2.0}}}}, {"x_a", {0.0, 0.0}}, {"x_b", {1.0, 1.0}},
            {"t_b", 1.0}, {"sweep", {{{"name", "hbar"}, {"values", {1.0, 0.1, 0.01, 1e-4}}}}},
            {"sweep_format", "json"}};
  const Run r = ws.run("sweep --config '" + ws.write("h.json", c).string() + "'");
  REQUIRE(r.code == 0);
  const json rows = json::parse(r.out)["rows"];
  REQUIRE(rows.size() == 4);
  const double ref = rows[0]["magnitude_hbar_scaled"];
  for (const auto& row : rows) {
    CHECK_THAT(row["magnitude_hbar_scaled"].get<double>(), WithinRel(ref, 1e-13));
    CHECK_THAT(row["magnitude"].get<double>(), WithinRel(ref / row["hbar"].get<double>(), 1e-13));
  }
}

TEST_CASE("verify command", "[cli]") {
  Workspace ws;
  json c = {{"model", {{"type", "quartic"}, {"coupling", 2.0}}}, {"x_a", {0.0}}, {"x_b", {1.0}},
            {"t_b", 0.8}, {"t_mid", {0.2, 0.4, 0.6}}};
  Run r = ws.run("verify --config '" + ws.write("v.json", c).string() + "'");
  CHECK(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["all_passed"] == true);
  CHECK(j["splits"].size() == 3);
  for (const auto& s : j["splits"]) CHECK(s["factor_residual"].get<double>() < 1e-6);

  c["midpoint_offset"] = {0.05};
  r = ws.run("verify --config '" + ws.write("off.json", c).string() + "'");
  CHECK(r.code == 0);
  j = json::parse(r.out);
  CHECK(j["diagnostic"] == true);
  CHECK(j["all_passed"] == false);
  CHECK(j["splits"][0]["momentum_mismatch"].get<double>() > 1e-4);

  c.erase("t_mid");
  CHECK(ws.run("verify --config '" + ws.write("none.json", c).string() + "'").code == 1);
}

TEST_CASE("models command", "[cli]") {
  Workspace ws;
  const Run r = ws.run("models");
  CHECK(r.code == 0);
  for (const char* t : {"free_particle", "harmonic_oscillator", "magnetic_field", "quartic", "potential_1d"}) {
    CHECK(r.out.find(t) != std::string::npos);
  }
}

TEST_CASE("reference scenarios", "[cli]") {
  Workspace ws;
  json free = {{"model", {{"type", "free_particle"}, {"mass", 1.0}}}, {"x_a", {0.0}}, {"x_b", {1.0}},
               {"t_b", 1.0}, {"methods", {"vvpm", "analytic"}}, {"t_mid", {0.1, 0.3, 0.5, 0.7, 0.9}}};
  const std::string fcfg = ws.write("free.json", free).string();
  Run r = ws.run("factor --config '" + fcfg + "'");
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["deviations"][0]["relative"].get<double>() < 1e-10);
  r = ws.run("verify --config '" + fcfg + "'");
  CHECK(r.code == 0);
  const json splits = json::parse(r.out)["splits"];
  CHECK(splits.size() == 5);
  for (const auto& s : splits) {
    CHECK(s["factor_residual"].get<double>() < 1e-10);
    CHECK(s["momentum_mismatch"].get<double>() < 1e-10);
    CHECK(s["action_additivity_residual"].get<double>() < 1e-10);
    CHECK(s["jacobian_identity_residual"].get<double>() < 1e-10);
  }

  json td = {{"model", {{"type", "harmonic_oscillator"}, {"omega_expr", "1 + 0.2*sin(t)"}}}, {"x_a", {0.0}},
             {"x_b", {1.0}}, {"t_b", 1.0}, {"methods", {"vvpm", "gelfand-yaglom"}}};
  r = ws.run("factor --config '" + ws.write("td.json", td).string() + "'");
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["deviations"][0]["relative"].get<double>() < 1e-6);

  r = ws.run("factor --config '" + ws.write("pi.json", oscillator(1.0, kPi)).string() + "'");
  CHECK(r.code == 2);
  const json pi_report = json::parse(r.out);
  bool focal = false;
  for (const auto& e : pi_report["errors"]) focal = focal || e["error"] == "FocalPoint";
  CHECK(focal);
}

TEST_CASE("reference sweeps", "[cli]") {
  Workspace ws;
  json c = oscillator(1.0, 1.0);
  c["methods"] = {"vvpm"};
  c["sweep"] = {{{"name", "omega"}, {"from", 0.1}, {"to", 3.0}, {"count", 30}}};
  const auto rows = parse_csv(ws.run("sweep --config '" + ws.write("w.json", c).string() + "'").out);
  REQUIRE(rows.size() == 30);
  for (const auto& row : rows) {
    const double w = std::stod(row.at("omega"));
    CHECK_THAT(std::stod(row.at("magnitude")), WithinRel(std::sqrt(w / (2 * kPi * std::sin(w))), 1e-7));
  }

  // Short-time limit: |F| T^(D/2) -> (det g / 2 pi hbar)^(1/2).
  json q = {{"model", {{"type", "quartic"}, {"mass", 2.0}}}, {"x_a", {0.0}}, {"x_b", {0.1}}, {"t_b", 1.0},
            {"methods", {"vvpm", "short-time"}}, {"sweep", {{{"name", "T"}, {"values", {0.1, 0.01, 0.001}}}}},
            {"sweep_format", "json"}};
  const json srows = json::parse(ws.run("sweep --config '" + ws.write("q.json", q).string() + "'").out)["rows"];
  REQUIRE(srows.size() == 6);
  const double limit = std::sqrt(2.0 / (2 * kPi));
  double prev = 1.0;
  for (const auto& row : srows) {
    if (row["method"] != "vvpm") continue;
    const double gap = std::abs(row["magnitude"].get<double>() * std::sqrt(row["T"].get<double>()) - limit);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-8);
}
