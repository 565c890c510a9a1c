#include "mesa/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace mesa {

using nlohmann::json;

void ScenarioConfig::validate() const {
  static const std::vector<std::string> solvers = {"pme", "limit", "radial_oracle",
                                                   "tumor"};
  if (std::find(solvers.begin(), solvers.end(), solver) == solvers.end())
    throw ConfigError("unknown solver '" + solver + "'");
  if (geometry_kind != "cartesian1d" && geometry_kind != "radial")
    throw ConfigError("unknown geometry kind '" + geometry_kind + "'");
  if (!(inner < outer)) throw ConfigError("inner must be < outer");
  if (n_cells < 4) throw ConfigError("n_cells must be >= 4");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (lambda_stages.empty()) throw ConfigError("lambda needs at least one stage");
  if (!(lambda_bound > 0.0)) throw ConfigError("lambda bound must be positive");
  if (!(f_value > 0.0)) throw ConfigError("f must be positive");
  static const std::vector<std::string> rho0_presets = {"block", "block_band",
                                                        "barenblatt", "csv"};
  if (std::find(rho0_presets.begin(), rho0_presets.end(), rho0.preset) ==
      rho0_presets.end())
    throw ConfigError("unknown rho0 preset '" + rho0.preset + "'");
  if (rho0.preset == "csv") {
    std::ifstream in(rho0.csv_path);
    if (!in) throw ConfigError("rho0 csv not found: " + rho0.csv_path);
  }
  if (rho0.external < 0.0 || rho0.external >= 1.0)
    throw ConfigError("band density must lie in [0, 1)");
}

std::vector<double> ScenarioConfig::frame_times() const {
  if (!output_times.empty()) return output_times;
  std::vector<double> ts;
  for (int k = 1; k <= frame_count; ++k)
    ts.push_back(t_end * k / frame_count);
  return ts;
}

GridPtr ScenarioConfig::make_grid() const {
  Geometry geo = geometry_kind == "radial" ? Geometry::radial(dim, inner, outer)
                                           : Geometry::cartesian(inner, outer);
  return build_grid(geo, n_cells);
}

SourceCoefficient ScenarioConfig::make_source() const {
  std::vector<SourceCoefficient::Stage> stages;
  for (const auto& [t, v] : lambda_stages) stages.push_back({t, v});
  return SourceCoefficient(std::move(stages), lambda_bound);
}

BoundaryData ScenarioConfig::make_boundary() const {
  return BoundaryData::constant(f_value, std::max(lambda_bound, f_value + 1e-12));
}

GrowthLaw ScenarioConfig::make_growth_law() const {
  GrowthLaw law = GrowthLaw::linear(alpha, beta, k0, c_B);
  if (exchange_off) {
    double k = k0, tol = p_tol > 0.0 ? p_tol : 1e-8;
    law.K = [k, tol](double p) { return p <= tol ? k : 0.0; };
  }
  auto rep = law.validate();
  if (!rep.ok()) throw ConfigError("growth law fails its structural hypotheses");
  return law;
}

namespace {

Field block_pressure(const GridPtr& grid, double radius, double f) {
  const Grid& g = *grid;
  Field p0(grid, 0.0);
  if (g.is_radial() && g.dim() > 1) {
    auto prof = annulus_profile(g.inner() + radius, 0.0, f, g.dim(), g.inner());
    for (std::size_t i = 0; i < p0.size(); ++i)
      p0[i] = g.node(i) < prof.R ? std::max(0.0, prof.value(g.node(i))) : 0.0;
  } else {
    for (std::size_t i = 0; i < p0.size(); ++i) {
      double x = g.node(i) - g.inner();
      p0[i] = std::max(0.0, f * (1.0 - x / radius));
    }
  }
  return p0;
}

Field band_field(const ScenarioConfig& cfg, const GridPtr& grid) {
  Field e(grid, 0.0);
  if (cfg.rho0.preset == "block_band") {
    for (std::size_t i = 0; i < e.size(); ++i) {
      double x = grid->node(i);
      if (x > cfg.rho0.band_from && x <= cfg.rho0.band_to)
        e[i] = cfg.rho0.external;
    }
  }
  return e;
}

Field barenblatt_field(const ScenarioConfig& cfg, const GridPtr& grid, double m) {
  const double alpha = 1.0 / (m + 1.0);
  const double k = (m - 1.0) / (2.0 * m * (m + 1.0));
  const double C =
      k * cfg.rho0.edge0 * cfg.rho0.edge0 / std::pow(cfg.rho0.t0, 2.0 * alpha);
  Field rho(grid, 0.0);
  double ta = std::pow(cfg.rho0.t0, alpha);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    double x = grid->node(i);
    double arg = C - k * x * x / (ta * ta);
    rho[i] = arg > 0.0 ? std::pow(arg, 1.0 / (m - 1.0)) / ta : 0.0;
  }
  return rho;
}

Field csv_field(const ScenarioConfig& cfg, const GridPtr& grid) {
  std::ifstream in(cfg.rho0.csv_path);
  if (!in) throw ConfigError("rho0 csv not found: " + cfg.rho0.csv_path);
  Field rho(grid, 0.0);
  std::string line;
  std::getline(in, line);  // header
  std::size_t i = 0;
  while (std::getline(in, line) && i < rho.size()) {
    auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("rho0 csv: malformed line");
    rho[i++] = std::stod(line.substr(comma + 1));
  }
  if (i != rho.size()) throw ConfigError("rho0 csv: node count mismatch");
  return rho;
}

}  // namespace

Field ScenarioConfig::make_rho0_pme(const GridPtr& grid) const {
  if (rho0.preset == "barenblatt") return barenblatt_field(*this, grid, m);
  if (rho0.preset == "csv") return csv_field(*this, grid);
  Field p0 = block_pressure(grid, rho0.radius, f_value);
  return prepare_initial_density(p0, band_field(*this, grid), m);
}

Field ScenarioConfig::make_rho0_limit(const GridPtr& grid) const {
  if (rho0.preset == "csv") return csv_field(*this, grid);
  if (rho0.preset == "barenblatt")
    throw ConfigError("barenblatt data are finite-m only");
  Field rho = band_field(*this, grid);
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (grid->node(i) - grid->inner() < rho0.radius) rho[i] = 1.0;
  return rho;
}

LimitParams ScenarioConfig::make_limit_params() const {
  LimitParams lp;
  lp.eps_sat = eps_sat;
  lp.dt = limit_dt;
  lp.p_tol = p_tol;
  lp.obstacle.tol = obstacle_tol;
  lp.obstacle.omega = obstacle_omega;
  lp.support_tol = support_tol;
  return lp;
}

PMEParams ScenarioConfig::make_pme_params() const {
  PMEParams pp;
  pp.m = m;
  pp.cfl_safety = cfl_safety;
  pp.t_end = t_end;
  pp.max_dt = max_dt;
  pp.support_tol = support_tol;
  return pp;
}

TumorParams ScenarioConfig::make_tumor_params() const {
  TumorParams tp;
  tp.m = m;
  tp.cfl_safety = cfl_safety;
  tp.t_end = t_end;
  tp.max_dt = max_dt;
  return tp;
}

namespace {

json stages_to_json(const std::vector<std::pair<double, double>>& stages) {
  json arr = json::array();
  for (const auto& [t, v] : stages) arr.push_back({{"t_start", t}, {"value", v}});
  return arr;
}

}  // namespace

std::string scenario_to_json_text(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["solver"] = c.solver;
  j["geometry"] = {{"kind", c.geometry_kind},
                   {"n", c.dim},
                   {"inner", c.inner},
                   {"outer", c.outer}};
  j["n_cells"] = c.n_cells;
  j["m"] = c.m;
  j["lambda"] = {{"bound", c.lambda_bound}, {"stages", stages_to_json(c.lambda_stages)}};
  j["f"] = c.f_value;
  j["rho0"] = {{"preset", c.rho0.preset},   {"radius", c.rho0.radius},
               {"external", c.rho0.external}, {"band_from", c.rho0.band_from},
               {"band_to", c.rho0.band_to},   {"t0", c.rho0.t0},
               {"edge0", c.rho0.edge0},       {"csv", c.rho0.csv_path}};
  j["t_end"] = c.t_end;
  j["output_times"] = c.output_times;
  j["frame_count"] = c.frame_count;
  j["tolerances"] = {{"cfl_safety", c.cfl_safety},
                     {"limit_dt", c.limit_dt},
                     {"eps_sat", c.eps_sat},
                     {"obstacle_tol", c.obstacle_tol},
                     {"obstacle_omega", c.obstacle_omega},
                     {"p_tol", c.p_tol},
                     {"support_tol", c.support_tol},
                     {"oracle_dt", c.oracle_dt}};
  if (std::isfinite(c.max_dt)) j["tolerances"]["max_dt"] = c.max_dt;
  j["growth_law"] = {{"alpha", c.alpha},
                     {"beta", c.beta},
                     {"k0", c.k0},
                     {"c_B", c.c_B},
                     {"exchange_off", c.exchange_off}};
  j["seed"] = c.seed;
  return j.dump(2);
}

ScenarioConfig scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (j.contains("config")) j = j["config"];  // accept a manifest echo

  ScenarioConfig c;
  try {
    c.name = j.value("name", c.name);
    c.solver = j.value("solver", c.solver);
    if (j.contains("geometry")) {
      const auto& g = j["geometry"];
      c.geometry_kind = g.value("kind", c.geometry_kind);
      c.dim = g.value("n", c.dim);
      c.inner = g.value("inner", c.inner);
      c.outer = g.value("outer", c.outer);
    }
    c.n_cells = j.value("n_cells", c.n_cells);
    c.m = j.value("m", c.m);
    if (j.contains("lambda")) {
      const auto& l = j["lambda"];
      c.lambda_bound = l.value("bound", c.lambda_bound);
      if (l.contains("stages")) {
        c.lambda_stages.clear();
        for (const auto& s : l["stages"])
          c.lambda_stages.emplace_back(s.at("t_start").get<double>(),
                                       s.at("value").get<double>());
      }
    }
    c.f_value = j.value("f", c.f_value);
    if (j.contains("rho0")) {
      const auto& r = j["rho0"];
      c.rho0.preset = r.value("preset", c.rho0.preset);
      c.rho0.radius = r.value("radius", c.rho0.radius);
      c.rho0.external = r.value("external", c.rho0.external);
      c.rho0.band_from = r.value("band_from", c.rho0.band_from);
      c.rho0.band_to = r.value("band_to", c.rho0.band_to);
      c.rho0.t0 = r.value("t0", c.rho0.t0);
      c.rho0.edge0 = r.value("edge0", c.rho0.edge0);
      c.rho0.csv_path = r.value("csv", c.rho0.csv_path);
    }
    c.t_end = j.value("t_end", c.t_end);
    if (j.contains("output_times"))
      c.output_times = j["output_times"].get<std::vector<double>>();
    c.frame_count = j.value("frame_count", c.frame_count);
    if (j.contains("tolerances")) {
      const auto& t = j["tolerances"];
      c.cfl_safety = t.value("cfl_safety", c.cfl_safety);
      c.limit_dt = t.value("limit_dt", c.limit_dt);
      c.eps_sat = t.value("eps_sat", c.eps_sat);
      c.obstacle_tol = t.value("obstacle_tol", c.obstacle_tol);
      c.obstacle_omega = t.value("obstacle_omega", c.obstacle_omega);
      c.p_tol = t.value("p_tol", c.p_tol);
      c.support_tol = t.value("support_tol", c.support_tol);
      c.oracle_dt = t.value("oracle_dt", c.oracle_dt);
      if (t.contains("max_dt")) c.max_dt = t["max_dt"].get<double>();
    }
    if (j.contains("growth_law")) {
      const auto& g = j["growth_law"];
      c.alpha = g.value("alpha", c.alpha);
      c.beta = g.value("beta", c.beta);
      c.k0 = g.value("k0", c.k0);
      c.c_B = g.value("c_B", c.c_B);
      c.exchange_off = g.value("exchange_off", c.exchange_off);
    }
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig preset_scenario(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  if (name == "stepped" || name == "stepped-limit") {
    c.solver = name == "stepped" ? "pme" : "limit";
    c.geometry_kind = "cartesian1d";
    c.inner = 0.0;
    c.outer = 3.0;
    c.n_cells = 600;  // h = 1/200
    c.m = 40.0;
    c.lambda_bound = 5.0;
    c.lambda_stages = {{0.0, -1.0}, {0.75, -5.0}, {1.0, -1.0}};
    c.f_value = 1.0;
    c.rho0.preset = "block";
    c.rho0.radius = 0.25;
    c.t_end = 1.8;
    c.output_times.clear();
    for (int k = 1; k <= 45; ++k) c.output_times.push_back(0.04 * k);
    c.output_times.push_back(0.81);
    c.output_times.push_back(0.94);
    std::sort(c.output_times.begin(), c.output_times.end());
    c.limit_dt = 1e-4;
  } else if (name == "radial-hs") {
    c.solver = "limit";
    c.geometry_kind = "radial";
    c.dim = 1;
    c.inner = 1.0;
    c.outer = 3.2;
    c.n_cells = 220;
    c.lambda_bound = 1.0;
    c.lambda_stages = {{0.0, 0.0}};
    c.f_value = 1.0;
    c.rho0.preset = "block";
    c.rho0.radius = 0.5;  // R0 = 1.5
    c.t_end = 1.0;
    c.frame_count = 20;
    c.limit_dt = 1e-4;
  } else if (name == "lambda-switch") {
    c.solver = "limit";
    c.geometry_kind = "radial";
    c.dim = 1;
    c.inner = 1.0;
    c.outer = 3.2;
    c.n_cells = 220;
    c.lambda_bound = 5.0;
    c.lambda_stages = {{0.0, -1.0}, {0.75, -5.0}};
    c.f_value = 1.0;
    c.rho0.preset = "block";
    c.rho0.radius = 0.5;
    c.t_end = 0.95;
    c.output_times = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.74,
                      0.76, 0.8, 0.85, 0.9, 0.95};
    c.limit_dt = 1e-4;
  } else if (name == "monotone") {
    c.solver = "limit";
    c.geometry_kind = "radial";
    c.dim = 1;
    c.inner = 1.0;
    c.outer = 3.0;
    c.n_cells = 200;
    c.lambda_bound = 1.0;
    c.lambda_stages = {{0.0, -1.0}, {0.3, -0.5}, {0.6, -0.25}};
    c.f_value = 1.0;
    c.rho0.preset = "block";
    c.rho0.radius = 0.3;
    c.t_end = 0.9;
    c.frame_count = 9;
    c.limit_dt = 1e-4;
  } else if (name == "band-growth") {
    c.solver = "limit";
    c.geometry_kind = "radial";
    c.dim = 1;
    c.inner = 1.0;
    c.outer = 3.2;
    c.n_cells = 220;
    c.lambda_bound = 1.0;
    c.lambda_stages = {{0.0, 0.5}};
    c.f_value = 1.0;
    c.rho0.preset = "block_band";
    c.rho0.radius = 0.2;
    c.rho0.external = 0.6;
    c.rho0.band_from = 1.2;
    c.rho0.band_to = 1.8;
    c.t_end = 1.3;
    c.frame_count = 13;
    c.limit_dt = 1e-4;
  } else if (name == "tumor-default") {
    c.solver = "tumor";
    c.geometry_kind = "cartesian1d";
    c.inner = -4.0;
    c.outer = 4.0;
    c.n_cells = 400;
    c.m = 40.0;
    c.lambda_bound = 1.0;
    c.rho0.preset = "block";  // interpreted as a centered blob below
    c.rho0.radius = 1.0;
    c.t_end = 0.4;
    c.frame_count = 4;
  } else if (name == "barenblatt") {
    c.solver = "pme";
    c.geometry_kind = "cartesian1d";
    c.inner = -1.5;
    c.outer = 1.5;
    c.n_cells = 300;
    c.m = 2.0;
    c.lambda_bound = 1.0;
    c.lambda_stages = {{0.0, 0.0}};
    c.rho0.preset = "barenblatt";
    c.rho0.t0 = 0.5;
    c.rho0.edge0 = 0.6;
    c.t_end = 0.5;
    c.frame_count = 5;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

std::vector<std::string> preset_names() {
  return {"stepped",  "stepped-limit", "radial-hs",     "lambda-switch",
          "monotone", "band-growth",   "tumor-default", "barenblatt"};
}

namespace {

// tumor scenarios use a centered blob and a saturated-nutrient start
Field tumor_blob(const ScenarioConfig& cfg, const GridPtr& grid) {
  Field rho(grid, 0.0);
  double center = 0.5 * (cfg.inner + cfg.outer);
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (std::abs(grid->node(i) - center) < cfg.rho0.radius) rho[i] = 0.8;
  return rho;
}

bool injection_geometry(const ScenarioConfig& cfg) {
  return cfg.solver == "pme" && cfg.rho0.preset != "barenblatt";
}

}  // namespace

RunArtifacts execute_scenario(const ScenarioConfig& config) {
  config.validate();
  RunArtifacts art;
  art.config = config;
  auto grid = config.make_grid();
  auto lambda = config.make_source();

  if (config.solver == "pme") {
    auto params = config.make_pme_params();
    Field rho0 = config.make_rho0_pme(grid);
    if (injection_geometry(config)) {
      auto f = config.make_boundary();
      art.pme = run_pme(std::move(rho0), params, lambda, &f, config.frame_times());
    } else {
      art.pme = run_pme(std::move(rho0), params, lambda, nullptr,
                        config.frame_times());
    }
    art.diagnostics.add(mass_balance(*art.pme, config.lambda_bound));
    std::vector<const PMERunResult*> single{&*art.pme};
    auto bounds = bounds_report(single);
    art.diagnostics.add(bounds.pressure_bound);
    art.diagnostics.add(bounds.positivity);
    art.diagnostics.add(bounds.support_envelope);
    art.diagnostics.add(bounds.density_ceiling);
    art.diagnostics.add({"clip_count", art.pme->clip_count == 0,
                         static_cast<double>(art.pme->clip_count), 0.0,
                         "undershoot clips under CFL"});
  } else if (config.solver == "limit") {
    auto params = config.make_limit_params();
    auto f = config.make_boundary();
    art.limit = run_limit(config.make_rho0_limit(grid), lambda, f, params,
                          config.frame_times());
    art.diagnostics.add(mass_balance(*art.limit));
    art.diagnostics.add({"graph_relation",
                         art.limit->max_graph_residual <=
                             params.eps_sat * std::max(art.limit->max_p, 1e-12) +
                                 1e-15,
                         art.limit->max_graph_residual,
                         params.eps_sat * std::max(art.limit->max_p, 1e-12),
                         "max p (1 - rho) vs eps_sat |p|_inf"});
    art.diagnostics.add({"mu_nonnegative",
                         art.limit->min_mu >= -10.0 * params.obstacle.tol,
                         art.limit->min_mu, -10.0 * params.obstacle.tol,
                         "min of the boundary measure"});
  } else if (config.solver == "tumor") {
    auto params = config.make_tumor_params();
    auto law = config.make_growth_law();
    art.tumor = run_tumor(tumor_blob(config, grid), Field(grid, law.c_B), params,
                          law, config.frame_times());
    art.diagnostics.add({"nutrient_bounds",
                         art.tumor->c_min >= 0.0 &&
                             art.tumor->c_max <= law.c_B + 1e-12,
                         art.tumor->c_min, 0.0, "c stays in [0, c_B]"});
    art.diagnostics.add({"nutrient_clips", art.tumor->c_clip_count == 0,
                         static_cast<double>(art.tumor->c_clip_count), 0.0,
                         "semi-implicit step clips under CFL"});
    art.diagnostics.add({"density_clips", art.tumor->rho_clip_count == 0,
                         static_cast<double>(art.tumor->rho_clip_count), 0.0,
                         "explicit step clips under CFL"});
  } else if (config.solver == "radial_oracle") {
    if (config.geometry_kind != "radial" && config.inner <= 0.0)
      throw ConfigError("radial oracle needs a positive inner radius");
    art.oracle = integrate_radial(config.inner + config.rho0.radius, lambda,
                                  [](double) { return 0.0; }, config.f_value,
                                  config.dim, config.inner, config.t_end,
                                  config.oracle_dt);
    art.diagnostics.add({"oracle_samples", !art.oracle->samples.empty(),
                         static_cast<double>(art.oracle->samples.size()), 1.0,
                         "front trajectory recorded"});
  }
  return art;
}

}  // namespace mesa
