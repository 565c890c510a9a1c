#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mesa/coefficients.hpp"
#include "mesa/diagnostics.hpp"
#include "mesa/grid.hpp"
#include "mesa/limit.hpp"
#include "mesa/pme.hpp"
#include "mesa/radial.hpp"
#include "mesa/tumor.hpp"

namespace mesa {

/// Raised on malformed configuration (maps to exit code 2 in the CLI).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  std::string name = "custom";
  std::string solver = "limit";  // pme | limit | radial_oracle | tumor

  std::string geometry_kind = "cartesian1d";  // cartesian1d | radial
  int dim = 1;
  double inner = 0.0;
  double outer = 1.0;
  int n_cells = 100;

  double m = 40.0;
  double lambda_bound = 1.0;
  std::vector<std::pair<double, double>> lambda_stages = {{0.0, 0.0}};
  double f_value = 1.0;

  struct InitialData {
    std::string preset = "block";  // block | block_band | barenblatt | csv
    double radius = 0.25;          // block edge measured from the inner boundary
    double external = 0.0;         // band density in (0, 1)
    double band_from = 0.0;
    double band_to = 0.0;
    double t0 = 0.5;      // barenblatt reference time
    double edge0 = 0.6;   // barenblatt half-support at t0
    std::string csv_path;
  } rho0;

  double t_end = 1.0;
  std::vector<double> output_times;  // empty: frame_count uniform frames
  int frame_count = 20;

  double cfl_safety = 0.9;
  double max_dt = std::numeric_limits<double>::infinity();
  double limit_dt = 1e-4;
  double eps_sat = 1e-6;
  double obstacle_tol = 1e-10;
  double obstacle_omega = 0.0;  // <= 0 selects the near-optimal factor
  double p_tol = 0.0;
  double support_tol = 1e-3;

  double oracle_dt = 1e-3;  // radial front ODE step

  // tumor growth law
  double alpha = 1.0;
  double beta = 1.0;
  double k0 = 1.0;
  double c_B = 1.0;
  bool exchange_off = false;  // K(p) = k0 1{p <= p_tol} variant

  std::uint64_t seed = 0;

  void validate() const;
  std::vector<double> frame_times() const;

  GridPtr make_grid() const;
  SourceCoefficient make_source() const;
  BoundaryData make_boundary() const;
  GrowthLaw make_growth_law() const;
  Field make_rho0_pme(const GridPtr& grid) const;
  Field make_rho0_limit(const GridPtr& grid) const;
  LimitParams make_limit_params() const;
  PMEParams make_pme_params() const;
  TumorParams make_tumor_params() const;
};

ScenarioConfig scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const ScenarioConfig& config);

/// Named presets: stepped, stepped-limit, radial-hs, lambda-switch, monotone,
/// band-growth, tumor-default, barenblatt.
ScenarioConfig preset_scenario(const std::string& name);
std::vector<std::string> preset_names();

/// In-memory results of one scenario execution.
struct RunArtifacts {
  ScenarioConfig config;
  std::optional<PMERunResult> pme;
  std::optional<LimitRunResult> limit;
  std::optional<TumorRunResult> tumor;
  std::optional<RadialTrajectory> oracle;
  DiagnosticsReport diagnostics;
};

RunArtifacts execute_scenario(const ScenarioConfig& config);

}  // namespace mesa
