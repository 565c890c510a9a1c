#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "mesa/coefficients.hpp"
#include "mesa/grid.hpp"

namespace mesa {

struct PMEParams {
  double m = 2.0;
  double cfl_safety = 0.9;
  double t_end = 1.0;
  double max_dt = std::numeric_limits<double>::infinity();
  double support_tol = 1e-3;  // pressure threshold for the support diagnostics
  int ledger_samples = 2000;
  int support_margin_cells = 5;

  void validate() const;
};

struct PMEState {
  double t = 0.0;
  Field rho;
};

/// p = m/(m-1) rho^(m-1), pointwise. Rejects m <= 1.
Field pressure_of_density(const Field& rho, double m);

struct PMEStepInfo {
  double dt = 0.0;
  int clipped = 0;
  double dmass = 0.0;       // interior mass change, h-weighted
  double diffusion_sum = 0.0;  // h * sum of lap(rho^m) over interior
  double source_sum = 0.0;     // h * sum of lambda rho over interior
  double clip_gain = 0.0;      // h * mass added by clipping undershoots
  double flux_inner = 0.0;     // (u[0]-u[1])/h
  double flux_outer = 0.0;     // (u[n-1]-u[n-2])/h
};

/// One explicit step: rho += dt (lap(rho^m) + lambda rho), dt from the CFL
/// bound cfl h^2 / (2 max m rho^(m-1)) capped by max_dt and the distance to
/// the next lambda stage switch. Negative undershoots clip to 0. The inner
/// node is re-imposed to f(t_new)^(1/(m-1)) when boundary data is present,
/// 0 otherwise; the outer node stays 0.
PMEState step_pme(const PMEState& state, const PMEParams& params,
                  const SourceCoefficient& lambda, const BoundaryData* f,
                  PMEStepInfo* info = nullptr);

struct PMEFrame {
  double t;
  Field rho;
  Field p;
};

struct PMELedgerRow {
  double t;
  double mass;             // interior l1 of rho, h-weighted
  double support_measure;  // h * #{p > support_tol}
  double support_edge;     // position of the outermost p > support_tol node
  double rho_edge;         // position of the outermost rho > 0 node
  double max_p;
  double max_rho;
};

struct PMERunResult {
  GridPtr grid;
  PMEParams params;
  std::vector<PMEFrame> frames;
  std::vector<PMELedgerRow> ledger;
  long long steps = 0;
  long long clip_count = 0;
  double max_mass_identity_error = 0.0;  // per-step identity, relative
  double max_p = 0.0;
  double max_rho = 0.0;
  double flux_inner_integral = 0.0;  // time integral of the inner flux
  double flux_outer_integral = 0.0;
  double source_integral = 0.0;
  double max_abs_flux = 0.0;  // max over steps of |flux_in| + |flux_out|
};

PMERunResult run_pme(Field rho0, const PMEParams& params,
                     const SourceCoefficient& lambda, const BoundaryData* f,
                     std::vector<double> output_times);

/// rho0_m = max{p0^(1/m), (rhoE - a_m)_+} with a_m = 1/ln m; requires m > e.
Field prepare_initial_density(const Field& p0, const Field& rhoE, double m);

struct InitialDataReport {
  bool lower_ok = false;
  bool upper_ok = false;
  bool lower_barrier_positive = false;
  int lower_violations = 0;
  int upper_violations = 0;
  double max_lower_violation = 0.0;
  double max_upper_violation = 0.0;
  double l1_time_derivative = 0.0;  // |lap(rho0^m) + lambda rho0|_L1
  double l1_gradient = 0.0;         // total variation of rho0
  Field barrier_upper;
  Field barrier_lower;
  bool all_ok() const { return lower_ok && upper_ok && lower_barrier_positive; }
};

/// Checks rho0 against the barrier sandwich built from the two linear
/// Dirichlet problems (-lap = Lambda+1 vanishing at r_upper, -lap = -Lambda
/// vanishing at r_lower) and reports the L1 surrogates of the initial-data
/// regularity assumption.
InitialDataReport validate_initial_data(const Field& rho0, double m,
                                        const SourceCoefficient& lambda,
                                        const BoundaryData& f, double r_upper,
                                        double r_lower);

struct PMEOrderedPairResult {
  double max_violation = 0.0;  // max over steps and nodes of rho_a - rho_b
  PMEState final_a, final_b;
};

/// Advances two ordered initial data with a shared dt sequence (the pairwise
/// minimum of the CFL bounds) so the discrete comparison principle applies.
PMEOrderedPairResult run_pme_ordered_pair(Field rho0_a, Field rho0_b,
                                          const PMEParams& params,
                                          const SourceCoefficient& lambda,
                                          const BoundaryData* f_a,
                                          const BoundaryData* f_b);

}  // namespace mesa
